use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::rng::CounterRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    Brownian,
    Bessel,
    RadialBessel,
    Custom,
}

/// Time-indexed samples on a uniform grid `times[i] = t0 + i * dt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Second coordinate for planar Brownian motion.
    pub values_im: Option<Vec<f64>>,
    pub kind: ProcessKind,
    pub params: BTreeMap<String, f64>,
    pub dt: f64,
    pub seed: u64,
    /// Step indices where the near-boundary clamp fired.
    pub boundary_hits: Vec<usize>,
}

impl SamplePath {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Value at time `t` by linear interpolation, clamped to the grid ends.
    pub fn interpolate(&self, t: f64) -> f64 {
        interp_uniform(self.times[0], self.dt, &self.values, t)
    }

    /// Number of steps `round(T/dt)` for a horizon, at least one.
    pub(crate) fn steps(dt: f64, horizon: f64) -> usize {
        ((horizon / dt).round() as usize).max(1)
    }

    pub(crate) fn grid(t0: f64, dt: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| t0 + i as f64 * dt).collect()
    }
}

pub fn interp_uniform(t0: f64, dt: f64, v: &[f64], t: f64) -> f64 {
    let s = (t - t0) / dt;
    if s <= 0.0 {
        return v[0];
    }
    let i = s.floor() as usize;
    if i + 1 >= v.len() {
        return *v.last().unwrap();
    }
    let f = s - i as f64;
    v[i] * (1.0 - f) + v[i + 1] * f
}

pub(crate) fn check_grid(dt: f64, horizon: f64) -> Result<()> {
    ensure(dt > 0.0 && dt.is_finite(), || format!("dt must be positive, got {dt}"))?;
    ensure(horizon > 0.0 && horizon.is_finite(), || format!("T must be positive, got {horizon}"))?;
    ensure(dt <= horizon, || format!("dt={dt} exceeds T={horizon}"))
}

/// Brownian motion with drift; `dim = 2` fills `values_im` with an independent coordinate.
pub fn sample_brownian(dim: u8, dt: f64, horizon: f64, drift: f64, seed: u64) -> Result<SamplePath> {
    let mut rng = CounterRng::new(seed, 0);
    sample_brownian_with(dim, dt, horizon, drift, seed, &mut rng)
}

/// As [`sample_brownian`] but drawing from a caller-supplied stream.
pub fn sample_brownian_with(dim: u8, dt: f64, horizon: f64, drift: f64, seed: u64, rng: &mut CounterRng) -> Result<SamplePath> {
    check_grid(dt, horizon)?;
    ensure(dim == 1 || dim == 2, || format!("dim must be 1 or 2, got {dim}"))?;
    let n = SamplePath::steps(dt, horizon);
    let sq = dt.sqrt();
    let mut x = Vec::with_capacity(n + 1);
    let mut y = if dim == 2 { Some(Vec::with_capacity(n + 1)) } else { None };
    x.push(0.0);
    if let Some(y) = y.as_mut() {
        y.push(0.0);
    }
    let (mut a, mut b) = (0.0, 0.0);
    for _ in 0..n {
        a += drift * dt + sq * rng.normal();
        x.push(a);
        if let Some(y) = y.as_mut() {
            b += sq * rng.normal();
            y.push(b);
        }
    }
    let mut params = BTreeMap::new();
    params.insert("drift".into(), drift);
    params.insert("dim".into(), dim as f64);
    Ok(SamplePath {
        times: SamplePath::grid(0.0, dt, n),
        values: x,
        values_im: y,
        kind: ProcessKind::Brownian,
        params,
        dt,
        seed,
        boundary_hits: Vec::new(),
    })
}
