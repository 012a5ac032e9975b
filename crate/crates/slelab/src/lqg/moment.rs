use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ScalePoint, ScalingResult};
use crate::error::{ensure, invalid, Result};
use crate::gff::{sample_free_boundary_gff_strip, Grid};
use crate::rng::CounterRng;
use crate::stats::{weighted_fit, Moments};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentOptions {
    /// Width of the window `[u - L, u] x (0, pi)` that stands in for the half strip.
    pub window: f64,
    pub n_modes: usize,
    /// Cell size of the area Riemann sum.
    pub cell: f64,
    /// Step of the radial process.
    pub radial_dx: f64,
    pub seed: u64,
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self { window: 8.0, n_modes: 16, cell: PI / 32.0, radial_dx: 0.01, seed: 0 }
    }
}

/// Slope of `log E[mu(S_- + u)^p]` against `log eps` for the weight
/// `gamma^2/2` wedge, where `u = inf{t : X_t = alpha log eps}`.
///
/// In the first-exit embedding the left line averages are `-BES^3(2|x|)`, so
/// `u` is the last passage of that BES^3 at `b = alpha log(1/eps)`. The
/// radial path is simulated exactly on a grid with an h-transform split: run
/// BES^3 up to `4b`, then with probability `b/Z` it returns to `b` (a plain
/// Brownian motion until it does), otherwise it is `b + BES^3` forever. The
/// mass of the window left of `u` uses an independent lateral sample.
pub fn moment_scaling(
    gamma: f64,
    alpha: f64,
    p: f64,
    epsilons: &[f64],
    replicates: usize,
    opts: &MomentOptions,
) -> Result<ScalingResult> {
    ensure(gamma > 0.0 && gamma <= 2.0, || format!("gamma must lie in (0, 2], got {gamma}"))?;
    ensure(alpha > 0.0, || format!("alpha must be positive, got {alpha}"))?;
    let pmax = (2.0 / (gamma * gamma)).min(1.5);
    if !(p < pmax) || p == 0.0 {
        return Err(invalid(format!("p = {p} outside (-inf, {pmax}) minus 0")));
    }
    ensure(replicates >= 1 && epsilons.len() >= 2, || "need replicates and at least two scales".into())?;
    ensure(epsilons.iter().all(|&e| e > 0.0 && e < 1.0), || "epsilons must lie in (0, 1)".into())?;

    let mut points = Vec::new();
    let mut rejected = 0;
    let mut tail = Moments::new();
    for (si, &eps) in epsilons.iter().enumerate() {
        let b = alpha * (1.0 / eps).ln();
        let masses: Vec<(f64, f64)> = (0..replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = CounterRng::new(opts.seed, (si as u64) << 40 | r as u64);
                window_mass(gamma, b, opts, &mut rng)
            })
            .collect();
        let mut m = Moments::new();
        for &(mass, t) in &masses {
            tail.push(t);
            if mass > 0.0 && mass.is_finite() {
                m.push(mass.powf(p));
            } else {
                rejected += 1;
            }
        }
        points.push(ScalePoint { x: eps, estimate: m.mean, stderr: m.stderr(), n: m.n });
    }
    if rejected > 0 {
        log::warn!("moment scaling rejected {rejected} replicates with zero mass");
    }
    let xs: Vec<f64> = points.iter().map(|q| q.x.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|q| q.estimate.ln()).collect();
    let ws: Vec<f64> = points
        .iter()
        .map(|q| {
            let rel = q.stderr / q.estimate;
            if rel > 0.0 {
                1.0 / (rel * rel)
            } else {
                1.0
            }
        })
        .collect();
    let fit = weighted_fit(&xs, &ys, &ws);
    let (slope, ci) = fit.as_ref().map_or((f64::NAN, (f64::NAN, f64::NAN)), |f| (f.slope, (f.ci_lo, f.ci_hi)));
    let mut params = BTreeMap::new();
    params.insert("gamma".into(), gamma);
    params.insert("alpha".into(), alpha);
    params.insert("p".into(), p);
    params.insert("replicates".into(), replicates as f64);
    params.insert("window".into(), opts.window);
    params.insert("window_tail_fraction".into(), tail.mean);
    params.insert("target_slope".into(), alpha * p * gamma);
    Ok(ScalingResult {
        law: "moment_scaling".into(),
        params,
        points,
        slope,
        slope_ci: ci,
        fit,
        rejected,
    })
}

/// Exact BES^3 transition over time `dt`: the norm of a 3D Brownian motion.
fn bes3_step(x: f64, dt: f64, rng: &mut CounterRng) -> f64 {
    let s = dt.sqrt();
    let a = x + s * rng.normal();
    let b = s * rng.normal();
    let c = s * rng.normal();
    (a * a + b * b + c * c).sqrt()
}

/// Radial values `R_j = -X_{-j dx}` of the final BES^3 segment, long
/// enough to cover `window` past the last passage at `b`, with the
/// fractional index of that passage and the absolute position of `u`.
///
/// A return from `Z` to `b` is a Brownian first passage with infinite mean
/// duration. Its path lies before the last passage and never enters the
/// window, so it is skipped and only its duration `(Z - b)^2 / N^2` is added.
fn radial_to_window(b: f64, dx: f64, window: f64, rng: &mut CounterRng) -> (Vec<f64>, f64, f64) {
    let dt = 2.0 * dx;
    let top = 4.0 * b.max(0.25);
    let mut offset = 0.0;
    let mut r = vec![0.0];
    let mut x = 0.0;
    loop {
        while x < top {
            x = bes3_step(x, dt, rng);
            r.push(x);
        }
        if rng.uniform() < b / x {
            let n = rng.normal();
            offset += (r.len() - 1) as f64 * dx + (x - b).powi(2) / (n * n) / 2.0;
            x = b;
            r.clear();
            r.push(b);
        } else {
            break;
        }
    }
    let j = r.iter().rposition(|&v| v <= b).unwrap_or(0);
    let need = j + 2 + (window / dx).ceil() as usize;
    let mut y = x - b;
    while r.len() < need {
        y = bes3_step(y, dt, rng);
        r.push(b + y);
    }
    let frac = if r[j + 1] > r[j] { (b - r[j]) / (r[j + 1] - r[j]) } else { 0.0 };
    let idx = j as f64 + frac.clamp(0.0, 1.0);
    (r, idx, -(offset + idx * dx))
}

/// Mass of `[u - L, u] x (0, pi)` and the share of it in the leftmost tenth.
fn window_mass(gamma: f64, b: f64, opts: &MomentOptions, rng: &mut CounterRng) -> (f64, f64) {
    let dx = opts.radial_dx;
    let (r, u, _) = radial_to_window(b, dx, opts.window, rng);
    let nx = (opts.window / opts.cell).ceil() as usize;
    let ny = (PI / opts.cell).ceil() as usize;
    let hx = opts.window / nx as f64;
    let hy = PI / ny as f64;
    let grid = Grid { x_min: 0.0, x_max: opts.window, dx: hx / 2.0 };
    let lat = sample_free_boundary_gff_strip(&grid, opts.n_modes, rng.fork(1).next_u64())
        .expect("window grid is valid");
    let (mut total, mut far) = (0.0, 0.0);
    for i in 0..nx {
        // offset to the left of u
        let off = (i as f64 + 0.5) * hx;
        let pos = u + off / dx;
        let k = pos.floor() as usize;
        let f = pos - k as f64;
        let rad = -(r[k] * (1.0 - f) + r[k + 1] * f);
        let mut col = 0.0;
        for j in 0..ny {
            let y = (j as f64 + 0.5) * hy;
            col += (gamma * (rad + lat.lateral_value(C64::new(off, y)))).exp();
        }
        total += col;
        if i >= nx - nx / 10 {
            far += col;
        }
    }
    let mass = total * hx * hy;
    (mass, if total > 0.0 { far / total } else { 0.0 })
}
