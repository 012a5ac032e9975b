use std::collections::BTreeMap;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ScalePoint;
use crate::error::{ensure, Result};
use crate::gff::{sample_free_boundary_gff_strip, FieldRealization, Grid, CIRCLE_POINTS};
use crate::rng::CounterRng;
use crate::stats::{ordinary_fit, LinearFit, Moments};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntensityOptions {
    /// Circle-average radius.
    pub delta: f64,
    pub n_modes: usize,
    /// Horizontal spacing of the strip grid.
    pub dx: f64,
    pub seed: u64,
}

impl Default for IntensityOptions {
    fn default() -> Self {
        Self { delta: 0.05, n_modes: 128, dx: 1.0 / 256.0, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntensityProfile {
    pub params: BTreeMap<String, f64>,
    /// `x` holds `Im z`; estimates are the intensity for the requested alpha.
    pub points: Vec<ScalePoint>,
    pub locations: Vec<C64>,
    /// Same replicates with alpha = 0.
    pub baseline: Vec<f64>,
    /// Fit of log intensity against log Im z.
    pub im_fit: Option<LinearFit>,
    /// Fit of the log ratio to the alpha = 0 baseline against log |z|.
    pub modulus_fit: Option<LinearFit>,
}

/// Quadrature nodes and weights for the disk `B(z, r)`: the centre plus two
/// rings of eight points at the midpoints of equal-area annuli.
fn ball_nodes(z: C64, r: f64) -> Vec<(C64, f64)> {
    let mut out = vec![(z, 1.0 / 3.0)];
    let radii = [r * (1.0f64 / 3.0 + (2.0 / 3.0) * 0.25).sqrt(), r * (1.0f64 / 3.0 + (2.0 / 3.0) * 0.75).sqrt()];
    for rr in radii {
        for j in 0..8 {
            let th = std::f64::consts::PI * (j as f64 + 0.5) / 4.0;
            out.push((z + C64::from_polar(rr, th), 1.0 / 24.0));
        }
    }
    out
}

/// Circle average of the half-plane free field `h_S(log w)` around `w`.
fn half_plane_circle(field: &FieldRealization, w: C64, delta: f64) -> f64 {
    let m = CIRCLE_POINTS;
    let step = std::f64::consts::TAU / m as f64;
    (0..m).map(|j| field.value_unchecked((w + C64::from_polar(delta, j as f64 * step)).ln())).sum::<f64>() / m as f64
}

/// Mean LQG mass density near each point for the field
/// `h = h^F - alpha log|.|` on the half-plane, with `h^F` the free-boundary
/// GFF normalised on the unit semicircle.
///
/// `h_delta(w)` is Gaussian, so `E[delta^{gamma^2/2} e^{gamma h_delta(w)}]` is
/// estimated as `exp(gamma m + gamma^2 s^2 / 2)` from the sample mean and
/// variance. The plain mean of the exponential has infinite variance once
/// `gamma^2 > 1`. The singular part averages to `-alpha log|w|` exactly on
/// circles that do not enclose 0.
pub fn intensity_profile(
    gamma: f64,
    alpha: f64,
    points: &[C64],
    r: f64,
    replicates: usize,
    opts: &IntensityOptions,
) -> Result<IntensityProfile> {
    ensure(gamma > 0.0 && gamma <= 2.0, || format!("gamma must lie in (0, 2], got {gamma}"))?;
    ensure(!points.is_empty() && replicates >= 2, || "need points and at least two replicates".into())?;
    ensure(r > 0.0 && opts.delta > 0.0, || "radius and delta must be positive".into())?;
    for z in points {
        ensure(z.im > r + opts.delta, || format!("point {z} too close to the real line for r + delta"))?;
    }
    let nodes: Vec<Vec<(C64, f64)>> = points.iter().map(|&z| ball_nodes(z, r)).collect();
    let reach = r + opts.delta;
    let lo = points.iter().map(|z| (z.norm() - reach).ln()).fold(f64::INFINITY, f64::min) - 0.05;
    let hi = points.iter().map(|z| (z.norm() + reach).ln()).fold(f64::NEG_INFINITY, f64::max) + 0.05;
    let grid = Grid::new(lo, hi, opts.dx)?;

    let samples: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let seed = CounterRng::new(opts.seed, rep as u64).next_u64();
            let f = sample_free_boundary_gff_strip(&grid, opts.n_modes, seed).expect("grid validated");
            nodes.iter().flatten().map(|&(w, _)| half_plane_circle(&f, w, opts.delta)).collect()
        })
        .collect();
    let count: usize = nodes.iter().map(Vec::len).sum();
    let mut acc = vec![Moments::new(); count];
    for s in &samples {
        for (a, v) in acc.iter_mut().zip(s) {
            a.push(*v);
        }
    }

    let g2 = gamma * gamma;
    let mut pts = Vec::new();
    let mut baseline = Vec::new();
    let mut k = 0;
    for (z, ns) in points.iter().zip(&nodes) {
        let (mut fa, mut f0, mut se) = (0.0, 0.0, 0.0);
        for (i, &(w, wt)) in ns.iter().enumerate() {
            let m = &acc[k];
            k += 1;
            let v = m.variance();
            let gauss = opts.delta.powf(g2 / 2.0) * (gamma * m.mean + g2 * v / 2.0).exp();
            f0 += wt * gauss;
            fa += wt * gauss * w.norm().powf(-alpha * gamma);
            if i == 0 {
                let n = m.n as f64;
                se = (g2 * v / n + g2 * g2 * v * v / (2.0 * n)).sqrt();
            }
        }
        pts.push(ScalePoint { x: z.im, estimate: fa, stderr: se * fa, n: replicates as u64 });
        baseline.push(f0);
    }
    let lx: Vec<f64> = pts.iter().map(|p| p.x.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.estimate.ln()).collect();
    let im_fit = if pts.len() >= 2 { ordinary_fit(&lx, &ly) } else { None };
    let modulus_fit = if alpha != 0.0 && pts.len() >= 2 {
        let mx: Vec<f64> = points.iter().map(|z| z.norm().ln()).collect();
        let my: Vec<f64> = pts.iter().zip(&baseline).map(|(p, b)| (p.estimate / b).ln()).collect();
        ordinary_fit(&mx, &my)
    } else {
        None
    };
    let mut params = BTreeMap::new();
    params.insert("gamma".into(), gamma);
    params.insert("alpha".into(), alpha);
    params.insert("r".into(), r);
    params.insert("delta".into(), opts.delta);
    params.insert("n_modes".into(), opts.n_modes as f64);
    params.insert("replicates".into(), replicates as f64);
    Ok(IntensityProfile { params, points: pts, locations: points.to_vec(), baseline, im_fit, modulus_fit })
}
