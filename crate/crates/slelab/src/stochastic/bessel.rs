use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use super::density::bes3_cdf;
use super::path::{check_grid, ProcessKind, SamplePath};
use crate::error::{ensure, Result};
use crate::quad::bisect;
use crate::rng::CounterRng;
use crate::stats::Moments;

/// Barrier used by the near-boundary clamp.
pub const DELTA0: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BesselScheme {
    /// Euler–Maruyama. For positive drift coefficient the `1/x` term is
    /// taken implicitly, which keeps the path positive; otherwise the step
    /// reflects and clamps at the barrier.
    #[default]
    Euler,
    /// Exact transitions through the noncentral chi distribution.
    Exact,
}

/// Exact BES³ value at time `dt` from 0, by bisection on the CDF.
pub fn bes3_step_from_zero(dt: f64, rng: &mut CounterRng) -> f64 {
    let u = rng.uniform_open();
    let s = dt.sqrt();
    bisect(|y| bes3_cdf(dt, y) - u, 0.0, 40.0 * s, 1e-13 * s)
}

/// Positive root of `y = u + c / y`: one drift-implicit step.
fn implicit_step(u: f64, c: f64) -> f64 {
    if u >= 0.0 {
        0.5 * (u + (u * u + 4.0 * c).sqrt())
    } else {
        // same root, written without cancellation
        2.0 * c / ((u * u + 4.0 * c).sqrt() - u)
    }
}

fn chi_square(dof: f64, rng: &mut CounterRng) -> f64 {
    Gamma::new(0.5 * dof, 2.0).unwrap().sample(rng)
}

fn first_step(d: f64, dt: f64, rng: &mut CounterRng) -> f64 {
    if d == 3.0 {
        bes3_step_from_zero(dt, rng)
    } else {
        (dt * chi_square(d, rng)).sqrt()
    }
}

fn exact_step(d: f64, x: f64, dt: f64, rng: &mut CounterRng) -> f64 {
    let sq = dt.sqrt();
    if d >= 1.0 {
        let g = x + sq * rng.normal();
        let rest = if d > 1.0 { dt * chi_square(d - 1.0, rng) } else { 0.0 };
        (g * g + rest).sqrt()
    } else {
        let lambda = x * x / dt;
        let k = if lambda > 0.0 { Poisson::new(0.5 * lambda).unwrap().sample(rng) } else { 0.0 };
        (dt * chi_square(d + 2.0 * k, rng)).sqrt()
    }
}

/// `d`-dimensional Bessel process dX = ((d-1)/2)/X dt + dB from `x0`.
pub fn sample_bessel(d: f64, x0: f64, dt: f64, horizon: f64, seed: u64) -> Result<SamplePath> {
    let mut rng = CounterRng::new(seed, 0);
    sample_bessel_with(d, x0, dt, horizon, seed, BesselScheme::Euler, &mut rng)
}

pub fn sample_bessel_with(
    d: f64,
    x0: f64,
    dt: f64,
    horizon: f64,
    seed: u64,
    scheme: BesselScheme,
    rng: &mut CounterRng,
) -> Result<SamplePath> {
    check_grid(dt, horizon)?;
    ensure(d > 0.0 && d.is_finite(), || format!("dimension must be positive, got {d}"))?;
    ensure(x0 >= 0.0 && x0.is_finite(), || format!("x0 must be nonnegative, got {x0}"))?;
    let n = SamplePath::steps(dt, horizon);
    let a = 0.5 * (d - 1.0);
    let sq = dt.sqrt();
    let mut v = Vec::with_capacity(n + 1);
    let mut hits = Vec::new();
    v.push(x0);
    let mut x = x0;
    for i in 0..n {
        x = if x == 0.0 {
            first_step(d, dt, rng)
        } else {
            match scheme {
                BesselScheme::Exact => exact_step(d, x, dt, rng),
                BesselScheme::Euler if a > 0.0 => implicit_step(x + sq * rng.normal(), a * dt),
                BesselScheme::Euler => {
                    let mut y = x + a / x * dt + sq * rng.normal();
                    if y < DELTA0 {
                        y = y.abs().max(DELTA0);
                        hits.push(i + 1);
                    }
                    y
                }
            }
        };
        v.push(x);
    }
    let mut params = BTreeMap::new();
    params.insert("d".into(), d);
    params.insert("x0".into(), x0);
    Ok(SamplePath {
        times: SamplePath::grid(0.0, dt, n),
        values: v,
        values_im: None,
        kind: ProcessKind::Bessel,
        params,
        dt,
        seed,
        boundary_hits: hits,
    })
}

/// Radial Bessel process dY = a cot(Y) dt + dB on (0, π), Euler steps
/// with the singular part of the drift at the nearer end taken implicitly
/// when a > 0.
pub fn sample_radial_bessel(a: f64, y0: f64, dt: f64, horizon: f64, seed: u64) -> Result<SamplePath> {
    let mut rng = CounterRng::new(seed, 0);
    sample_radial_bessel_with(a, y0, dt, horizon, seed, &mut rng)
}

pub fn sample_radial_bessel_with(a: f64, y0: f64, dt: f64, horizon: f64, seed: u64, rng: &mut CounterRng) -> Result<SamplePath> {
    check_grid(dt, horizon)?;
    ensure(a.is_finite(), || "a must be finite".into())?;
    ensure(y0 > 0.0 && y0 < PI, || format!("y0 must lie in (0, pi), got {y0}"))?;
    let n = SamplePath::steps(dt, horizon);
    let sq = dt.sqrt();
    let mut v = Vec::with_capacity(n + 1);
    let mut hits = Vec::new();
    v.push(y0);
    let mut y = y0;
    for i in 0..n {
        let xi = sq * rng.normal();
        let mut z = if a > 0.0 {
            // implicit in the singular part at the nearer end, explicit in
            // the smooth remainder of cot
            if y <= PI / 2.0 {
                implicit_step(y + a * (1.0 / y.tan() - 1.0 / y) * dt + xi, a * dt)
            } else {
                let u = PI - y;
                PI - implicit_step(u - a * (1.0 / y.tan() + 1.0 / u) * dt - xi, a * dt)
            }
        } else {
            y + a / y.tan() * dt + xi
        };
        if z < DELTA0 || z > PI - DELTA0 {
            // Reflect the overshoot back into the interval, then clamp.
            if z < 0.0 {
                z = -z;
            }
            if z > PI {
                z = 2.0 * PI - z;
            }
            z = z.clamp(DELTA0, PI - DELTA0);
            hits.push(i + 1);
        }
        y = z;
        v.push(y);
    }
    let mut params = BTreeMap::new();
    params.insert("a".into(), a);
    params.insert("y0".into(), y0);
    Ok(SamplePath {
        times: SamplePath::grid(0.0, dt, n),
        values: v,
        values_im: None,
        kind: ProcessKind::RadialBessel,
        params,
        dt,
        seed,
        boundary_hits: hits,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
}

/// Monte Carlo estimate of E[exp(-s Z_t)] for Z a BES³ started at 0.
///
/// Each replicate is an Euler path with 1000 steps on [0, t].
pub fn bes3_laplace(s: f64, t: f64, replicates: usize, seed: u64) -> Result<LaplaceEstimate> {
    ensure(s > 0.0 && t > 0.0, || "s and t must be positive".into())?;
    ensure(replicates >= 1000, || format!("need at least 1000 replicates, got {replicates}"))?;
    let dt = t / 1000.0;
    let mut m = Moments::new();
    for r in 0..replicates {
        let mut rng = CounterRng::new(seed, r as u64);
        let z = bes3_endpoint(t, dt, &mut rng);
        m.push((-s * z).exp());
    }
    Ok(LaplaceEstimate { mean: m.mean, stderr: m.stderr(), n: m.n })
}

/// Endpoint of an Euler BES³ path from 0; same draws as [`sample_bessel_with`].
fn bes3_endpoint(t: f64, dt: f64, rng: &mut CounterRng) -> f64 {
    let n = SamplePath::steps(dt, t);
    let sq = dt.sqrt();
    let mut x = bes3_step_from_zero(dt, rng);
    for _ in 1..n {
        x = implicit_step(x + sq * rng.normal(), dt);
    }
    x
}

