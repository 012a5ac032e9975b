use std::collections::BTreeMap;

use super::{dyadic, fit_exponent, Report, RunConfig, ScaleRow};
use crate::error::{ensure, Result};
use crate::lqg::{intensity_profile, moment_scaling, IntensityOptions, MomentOptions};
use crate::C64;

/// `E[mu(S_- + u)^p]` against ε for the weight γ²/2 wedge.
pub fn run_moment_scaling(cfg: &RunConfig) -> Result<Report> {
    let gamma = cfg.gamma.unwrap_or(std::f64::consts::SQRT_2);
    let alpha = cfg.alpha.unwrap_or(1.0);
    let p = cfg.p.unwrap_or(0.5);
    let reps = cfg.replicates.unwrap_or(10_000);
    let eps = cfg.epsilons.clone().unwrap_or_else(|| dyadic(2, 6));
    let opts = MomentOptions { seed: cfg.seed, ..MomentOptions::default() };
    let res = moment_scaling(gamma, alpha, p, &eps, reps, &opts)?;

    let mut params = BTreeMap::new();
    params.insert("gamma".into(), gamma.into());
    params.insert("alpha".into(), alpha.into());
    params.insert("p".into(), p.into());
    params.insert("replicates".into(), reps.into());
    params.insert("epsilons".into(), eps.clone().into());
    params.insert("window".into(), opts.window.into());
    params.insert("n_modes".into(), opts.n_modes.into());
    let mut report = Report::new("moment_scaling", params, cfg.seed);
    for q in &res.points {
        report.scales.push(ScaleRow { scale: q.x, estimate: q.estimate, stderr: q.stderr, n: q.n });
    }
    let xs: Vec<f64> = res.points.iter().map(|q| q.x.ln()).collect();
    let ys: Vec<f64> = res.points.iter().map(|q| q.estimate.ln()).collect();
    let sds: Vec<f64> = res.points.iter().map(|q| q.stderr / q.estimate).collect();
    report.set_fit(fit_exponent(&xs, &ys, &sds, 1.0, 2));
    report.diagnostics.insert("target_exponent".into(), alpha * p * gamma);
    if res.slope.is_finite() {
        report.diagnostics.insert("full_ladder_slope".into(), res.slope);
        report.diagnostics.insert("full_ladder_ci_lo".into(), res.slope_ci.0);
        report.diagnostics.insert("full_ladder_ci_hi".into(), res.slope_ci.1);
    }
    report.diagnostics.insert("rejected".into(), res.rejected as f64);
    if let Some(t) = res.params.get("window_tail_fraction") {
        report.diagnostics.insert("window_tail_fraction".into(), *t);
    }
    Ok(report)
}

/// LQG intensity at `z = i y` for the ladder of heights `y`. The fitted
/// exponent is the `Im z` exponent after removing the exact `|z|^{-alpha gamma}`
/// factor of the log singularity.
pub fn run_intensity_profile(cfg: &RunConfig) -> Result<Report> {
    let gamma = cfg.gamma.unwrap_or(std::f64::consts::SQRT_2);
    let alpha = cfg.alpha.unwrap_or(0.0);
    let reps = cfg.replicates.unwrap_or(10_000);
    let heights = cfg
        .epsilons
        .clone()
        .unwrap_or_else(|| (0..7).map(|k| 0.8 * 2f64.powf(-0.5 * k as f64)).collect());
    let r = 0.02;
    let opts = IntensityOptions { seed: cfg.seed, ..IntensityOptions::default() };
    ensure(heights.iter().all(|&y| y > r + opts.delta), || format!("heights must exceed {}", r + opts.delta))?;
    let pts: Vec<C64> = heights.iter().map(|&y| C64::new(0.0, y)).collect();
    let prof = intensity_profile(gamma, alpha, &pts, r, reps, &opts)?;

    let mut params = BTreeMap::new();
    params.insert("gamma".into(), gamma.into());
    params.insert("alpha".into(), alpha.into());
    params.insert("replicates".into(), reps.into());
    params.insert("epsilons".into(), heights.clone().into());
    params.insert("ball_radius".into(), r.into());
    params.insert("delta".into(), opts.delta.into());
    let mut report = Report::new("intensity_profile", params, cfg.seed);
    for q in &prof.points {
        report.scales.push(ScaleRow { scale: q.x, estimate: q.estimate, stderr: q.stderr, n: q.n });
    }
    let xs: Vec<f64> = prof.points.iter().map(|q| q.x.ln()).collect();
    let ys: Vec<f64> = prof.points.iter().zip(&pts).map(|(q, z)| q.estimate.ln() + alpha * gamma * z.norm().ln()).collect();
    let sds: Vec<f64> = prof.points.iter().map(|q| q.stderr / q.estimate).collect();
    report.set_fit(fit_exponent(&xs, &ys, &sds, 1.0, 2));
    report.diagnostics.insert("target_exponent".into(), -gamma * gamma / 2.0);
    if let Some(f) = &prof.im_fit {
        report.diagnostics.insert("all_points_slope".into(), f.slope);
    }
    if let Some(f) = &prof.modulus_fit {
        report.diagnostics.insert("modulus_slope".into(), f.slope);
    }
    Ok(report)
}
