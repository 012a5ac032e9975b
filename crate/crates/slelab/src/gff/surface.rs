use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::sample::{lateral, radial_path};
use super::{Domain, Embedding, FieldRealization, Grid};
use crate::error::{ensure, invalid, Result};
use crate::rng::CounterRng;
use crate::stochastic::{sample_bessel_with, BesselScheme};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    Wedge,
    Cone,
}

/// A surface is named either by its log-singularity `alpha` or by its weight.
/// The tag keeps whichever value the caller supplied verbatim.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Thickness {
    Alpha(f64),
    Weight(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WedgeSpec {
    pub gamma: f64,
    pub alpha_or_weight: Thickness,
    pub surface: Surface,
    pub embedding: Embedding,
}

fn q_of(gamma: f64) -> f64 {
    2.0 / gamma + gamma / 2.0
}

/// `W = gamma (Q + gamma/2 - alpha)` for wedges, `W = 2 gamma (Q - alpha)` for cones.
pub fn alpha_to_weight(surface: Surface, gamma: f64, alpha: f64) -> f64 {
    let q = q_of(gamma);
    match surface {
        Surface::Wedge => gamma * (q + gamma / 2.0 - alpha),
        Surface::Cone => 2.0 * gamma * (q - alpha),
    }
}

pub fn weight_to_alpha(surface: Surface, gamma: f64, weight: f64) -> f64 {
    let q = q_of(gamma);
    match surface {
        Surface::Wedge => q + gamma / 2.0 - weight / gamma,
        Surface::Cone => q - weight / (2.0 * gamma),
    }
}

impl WedgeSpec {
    pub fn q(&self) -> f64 {
        q_of(self.gamma)
    }

    pub fn alpha(&self) -> f64 {
        match self.alpha_or_weight {
            Thickness::Alpha(a) => a,
            Thickness::Weight(w) => weight_to_alpha(self.surface, self.gamma, w),
        }
    }

    pub fn weight(&self) -> f64 {
        match self.alpha_or_weight {
            Thickness::Weight(w) => w,
            Thickness::Alpha(a) => alpha_to_weight(self.surface, self.gamma, a),
        }
    }

    /// The wedge with `alpha = Q`, i.e. weight `gamma^2 / 2`.
    pub fn is_q_wedge(&self) -> bool {
        self.surface == Surface::Wedge
            && match self.alpha_or_weight {
                Thickness::Alpha(a) => (a - self.q()).abs() <= 1e-12 * self.q(),
                Thickness::Weight(w) => (w - self.gamma * self.gamma / 2.0).abs() <= 1e-12,
            }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.gamma > 0.0 && self.gamma <= 2.0, || format!("gamma must lie in (0, 2], got {}", self.gamma))?;
        ensure(self.embedding != Embedding::None, || "surfaces need an embedding".into())?;
        let w = self.weight();
        ensure(w > 0.0 && w.is_finite(), || format!("weight must be positive, got {w}"))?;
        if !self.is_q_wedge() && self.alpha() >= self.q() {
            return Err(invalid(format!(
                "alpha = {} >= Q = {}; only the Q-wedge is supported at the threshold",
                self.alpha(),
                self.q()
            )));
        }
        Ok(())
    }
}

/// Stop the last-exit search once a return to zero has probability below this.
const RETURN_TOL: f64 = 1e-12;
const MAX_STEPS: usize = 20_000_000;

/// Field of a thick wedge (strip) or cone (cylinder).
///
/// With `a = Q - alpha` and `s^2 = 2` (wedge) or `1` (cone), the line
/// averages are `B_{s^2 t} + a t` on one side of 0 and the same process
/// conditioned to stay positive on the other, negated on the left for the
/// first-exit embedding. The conditioned half is cut from a long drifted walk
/// after its last visit to `(-inf, 0]`. The Q-wedge uses `-X_{-t} = BES^3(2t)`
/// and `X_t = B_{2t}` in either embedding.
pub fn build_surface_field(spec: &WedgeSpec, grid: &Grid, seed: u64) -> Result<FieldRealization> {
    build_surface_field_with(spec, grid, n_modes_default(grid), seed)
}

pub fn build_surface_field_with(spec: &WedgeSpec, grid: &Grid, n_modes: usize, seed: u64) -> Result<FieldRealization> {
    spec.validate()?;
    grid.validate()?;
    let i0 = -grid.x_min / grid.dx;
    ensure(grid.x_min <= 0.0 && (i0 - i0.round()).abs() < 1e-6, || "grid must have a node at x = 0".into())?;
    let i0 = i0.round() as usize;
    let nodes = grid.nodes();
    let n_right = nodes.len() - 1 - i0;
    let rate = match spec.surface {
        Surface::Wedge => 2.0,
        Surface::Cone => 1.0,
    };
    let a = if spec.is_q_wedge() { 0.0 } else { spec.q() - spec.alpha() };
    let root = CounterRng::new(seed, 0);
    let mut crng = root.fork(0);
    let mut urng = root.fork(1);

    let q_first = spec.is_q_wedge() || spec.embedding == Embedding::FirstExit;
    let (cond_len, free_len) = if q_first { (i0, n_right) } else { (n_right, i0) };
    let (cond, last_exit) = if a == 0.0 {
        let p = sample_bessel_with(3.0, 0.0, rate * grid.dx, rate * grid.dx * cond_len.max(1) as f64, seed, BesselScheme::Exact, &mut crng)?;
        (p.values, 0)
    } else {
        conditioned_positive(a, rate, grid.dx, cond_len, &mut crng)
    };
    let mut free = vec![0.0];
    let mut v = 0.0;
    for _ in 0..free_len {
        v += a * grid.dx + (rate * grid.dx).sqrt() * urng.normal();
        free.push(v);
    }

    let mut values = vec![0.0; nodes.len()];
    for j in 0..=i0 {
        // left side, index j steps away from 0
        values[i0 - j] = if q_first { -cond[j] } else { -free[j] };
    }
    for j in 0..=n_right {
        values[i0 + j] = if q_first { free[j] } else { cond[j] };
    }
    let mut radial = radial_path(&nodes, grid.dx, values, rate, seed);
    radial.params.insert("drift".into(), a);
    radial.params.insert("last_exit_steps".into(), last_exit as f64);

    let (domain, height, cos, sin) = match spec.surface {
        Surface::Wedge => (Domain::Strip, PI, lateral(&root, 1, n_modes, grid, 2.0), Vec::new()),
        Surface::Cone => (
            Domain::Cylinder,
            2.0 * PI,
            lateral(&root, 1, n_modes, grid, 1.0),
            lateral(&root, 2, n_modes, grid, 1.0),
        ),
    };
    Ok(FieldRealization {
        domain,
        grid: *grid,
        height,
        radial: Some(radial),
        lateral_modes: cos,
        lateral_sin: sin,
        gamma: Some(spec.gamma),
        alpha: Some(spec.alpha()),
        embedding: spec.embedding,
        normalization: match spec.embedding {
            Embedding::FirstExit => "line averages first hit 0 at x = 0".into(),
            _ => "line averages last hit 0 at x = 0".into(),
        },
        shift: 0.0,
        seed,
    })
}

/// Default lateral mode count: 64, reduced so that `k dx <= 1/2` keeps the
/// linear interpolation of the fastest mode meaningful.
pub fn n_modes_default(grid: &Grid) -> usize {
    ((0.5 / grid.dx).floor() as usize).clamp(1, 64)
}

/// `len + 1` samples of `B_{rate t} + a t` conditioned to stay positive,
/// started at 0, by cutting a drifted walk at its last nonpositive visit.
/// Returns the path and the number of steps discarded before the cut.
pub(crate) fn conditioned_positive(a: f64, rate: f64, dx: f64, len: usize, rng: &mut CounterRng) -> (Vec<f64>, usize) {
    let mut walk = vec![0.0];
    let mut last = 0usize;
    let mut s = 0.0;
    loop {
        s += a * dx + (rate * dx).sqrt() * rng.normal();
        walk.push(s);
        let n = walk.len() - 1;
        if s <= 0.0 {
            last = n;
        }
        let done = n - last >= len && (-2.0 * a * s / rate).exp() < RETURN_TOL;
        if done || n >= MAX_STEPS {
            if !done {
                log::warn!("conditioned walk hit the step cap with {} steps after the last zero", n - last);
            }
            break;
        }
    }
    while walk.len() < last + 1 + len {
        s += a * dx + (rate * dx).sqrt() * rng.normal();
        walk.push(s);
    }
    let horizon = walk.len() - 1;
    if last as f64 > 0.95 * horizon as f64 {
        log::warn!("last zero at step {last} lies within 5% of the horizon {horizon}");
    }
    let mut out = Vec::with_capacity(len + 1);
    out.push(0.0);
    out.extend_from_slice(&walk[last + 1..(last + 1 + len).min(walk.len())]);
    (out, last)
}
