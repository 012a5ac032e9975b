use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{dyadic, fit_exponent, replicate_seed, Report, RunConfig, ScaleRow};
use crate::error::{ensure, Result};
use crate::loewner::{extract_trace, generate_driving, DrivingOptions, Parameterization, Scheme};
use crate::stats::{ordinary_fit, Moments};
use crate::C64;

/// Bounding boxes over dyadic index ranges.
struct BoxTree {
    n: usize,
    size: usize,
    lo: Vec<C64>,
    hi: Vec<C64>,
}

impl BoxTree {
    fn new(p: &[C64]) -> Self {
        let n = p.len();
        let size = n.next_power_of_two();
        let inf = C64::new(f64::INFINITY, f64::INFINITY);
        let mut lo = vec![inf; 2 * size];
        let mut hi = vec![-inf; 2 * size];
        for (i, z) in p.iter().enumerate() {
            lo[size + i] = *z;
            hi[size + i] = *z;
        }
        for k in (1..size).rev() {
            let (a, b) = (2 * k, 2 * k + 1);
            lo[k] = C64::new(lo[a].re.min(lo[b].re), lo[a].im.min(lo[b].im));
            hi[k] = C64::new(hi[a].re.max(hi[b].re), hi[a].im.max(hi[b].im));
        }
        BoxTree { n, size, lo, hi }
    }

    fn far(&self, k: usize, z: C64) -> f64 {
        let dx = (z.re - self.lo[k].re).abs().max((z.re - self.hi[k].re).abs());
        let dy = (z.im - self.lo[k].im).abs().max((z.im - self.hi[k].im).abs());
        dx.hypot(dy)
    }

    /// Raises `best` to the largest |p[t] - z| over t in [l, r], pruning
    /// boxes that cannot beat it.
    fn search(&self, k: usize, kl: usize, kr: usize, l: usize, r: usize, z: C64, best: &mut f64) {
        if kr < l || kl > r || kl >= self.n || self.far(k, z) <= *best {
            return;
        }
        if k >= self.size {
            *best = best.max((self.lo[k] - z).norm());
            return;
        }
        let mid = (kl + kr) / 2;
        let (a, b) = (2 * k, 2 * k + 1);
        if self.far(a, z) >= self.far(b, z) {
            self.search(a, kl, mid, l, r, z, best);
            self.search(b, mid + 1, kr, l, r, z, best);
        } else {
            self.search(b, mid + 1, kr, l, r, z, best);
            self.search(a, kl, mid, l, r, z, best);
        }
    }
}

/// `M(k) = max_{|i-j| <= k} |p_i - p_j|` for each lag in `lags`, exactly.
pub fn modulus_of_continuity(points: &[C64], lags: &[usize]) -> Vec<f64> {
    if points.len() < 2 {
        return vec![0.0; lags.len()];
    }
    let tree = BoxTree::new(points);
    let n = points.len();
    lags.iter()
        .map(|&k| {
            let mut best = 0.0;
            for s in 0..n - 1 {
                tree.search(1, 0, tree.size - 1, s + 1, (s + k).min(n - 1), points[s], &mut best);
            }
            best
        })
        .collect()
}

/// Per-lag moduli averaged over capacity-time traces.
fn moduli(kappa: f64, dt: f64, horizon: f64, lags: &[usize], reps: usize, seed: u64, tag: u64) -> Result<Vec<Moments>> {
    let per: Result<Vec<Vec<f64>>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let d = generate_driving(Scheme::Sle, kappa, &[], dt, horizon, replicate_seed(seed, tag, r), &DrivingOptions::default())?;
            let tr = extract_trace(&d)?;
            ensure(tr.parameterization == Parameterization::Capacity, || "trace must be in capacity time".into())?;
            Ok(modulus_of_continuity(&tr.points, lags))
        })
        .collect();
    let mut acc = vec![Moments::new(); lags.len()];
    for m in per? {
        for (a, v) in acc.iter_mut().zip(m) {
            a.push(v);
        }
    }
    Ok(acc)
}

fn lnln(d: f64) -> f64 {
    (1.0 / d).ln().ln()
}

/// Local exponents between consecutive scales of `y = a - e x`.
fn local_exponents(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    xs.windows(2).zip(ys.windows(2)).map(|(x, y)| -(y[1] - y[0]) / (x[1] - x[0])).collect()
}

fn monotone(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0]) || v.windows(2).all(|w| w[1] <= w[0])
}

/// SLE₈ in capacity time: fits `M(δ) ≈ C (log 1/δ)^{-β}` over the gap ladder.
/// The control run fits `M(δ) ≈ C δ^h` for κ = 2.
pub fn run_sle8_modulus(cfg: &RunConfig) -> Result<Report> {
    let kappa = cfg.kappa.unwrap_or(8.0);
    ensure(kappa == 8.0, || format!("sle8_modulus runs at kappa = 8, got {kappa}"))?;
    let dt = cfg.dt.unwrap_or(2f64.powi(-18));
    let horizon = cfg.horizon.unwrap_or(1.0);
    let reps = cfg.replicates.unwrap_or(8);
    let ladder = cfg.epsilons.clone().unwrap_or_else(|| dyadic(6, 16));
    let control = cfg.control.unwrap_or(true);

    let mut deltas = Vec::new();
    let mut dropped = 0;
    for &d in &ladder {
        if d < 4.0 * dt || d >= horizon {
            log::warn!("gap {d} outside [4 dt, T) = [{}, {horizon}); dropped", 4.0 * dt);
            dropped += 1;
        } else {
            deltas.push(d);
        }
    }
    let lags: Vec<usize> = deltas.iter().map(|d| (d / dt).round() as usize).collect();

    let mut params = BTreeMap::new();
    params.insert("kappa".into(), kappa.into());
    params.insert("dt".into(), dt.into());
    params.insert("T".into(), horizon.into());
    params.insert("replicates".into(), reps.into());
    params.insert("epsilons".into(), ladder.clone().into());
    params.insert("control".into(), control.into());
    let mut report = Report::new("sle8_modulus", params, cfg.seed);
    if dropped > 0 {
        report.notes.push(format!("{dropped} gaps below 4 dt or beyond T dropped"));
    }
    report.diagnostics.insert("dropped_scales".into(), dropped as f64);

    let acc = moduli(kappa, dt, horizon, &lags, reps, cfg.seed, 8)?;
    for (d, m) in deltas.iter().zip(&acc) {
        report.scales.push(ScaleRow { scale: *d, estimate: m.mean, stderr: m.stderr(), n: m.n });
    }
    let xs: Vec<f64> = deltas.iter().map(|&d| lnln(d)).collect();
    let ys: Vec<f64> = acc.iter().map(|m| m.mean.ln()).collect();
    let sds: Vec<f64> = acc.iter().map(|m| m.stderr() / m.mean).collect();
    report.set_fit(fit_exponent(&xs, &ys, &sds, -1.0, 2));

    let local = local_exponents(&xs, &ys);
    for (i, b) in local.iter().enumerate() {
        report.diagnostics.insert(format!("local_beta_{i:02}"), *b);
    }
    report.diagnostics.insert("local_beta_monotone".into(), monotone(&local) as u8 as f64);
    let ld: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    if let (Some(a), Some(b)) = (ordinary_fit(&xs, &ys), ordinary_fit(&ld, &ys)) {
        report.diagnostics.insert("r2_log_law".into(), a.r2);
        report.diagnostics.insert("r2_power_law".into(), b.r2);
    }

    if control {
        let c = moduli(2.0, dt, horizon, &lags, reps, cfg.seed, 2)?;
        let cy: Vec<f64> = c.iter().map(|m| m.mean.ln()).collect();
        if let (Some(h), Some(l)) = (ordinary_fit(&ld, &cy), ordinary_fit(&xs, &cy)) {
            let pass = h.slope > 0.0 && h.r2 >= l.r2;
            report.diagnostics.insert("control_holder_h".into(), h.slope);
            report.diagnostics.insert("control_r2_holder".into(), h.r2);
            report.diagnostics.insert("control_r2_log_law".into(), l.r2);
            report.diagnostics.insert("control_pass".into(), pass as u8 as f64);
        }
    }
    Ok(report)
}
