use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use super::{dyadic, fit_exponent, replicate_seed, Report, RunConfig, ScaleRow};
use crate::conformal::{escape_by_splitting, harmonic_measure, Obstacle, ObstacleSet, DELTA_ABS};
use crate::error::{ensure, Result};
use crate::loewner::{
    generate_driving, inverse_whole_plane, trace_on_grid, whole_plane_boundary_image, whole_plane_trace,
    DrivingOptions, ForcePoint, Scheme, Side, Trace,
};
use crate::rng::CounterRng;
use crate::stats::Moments;
use crate::C64;

/// Whole-plane trace stride (in driving steps).
const STRIDE: usize = 2;
/// Chordal time grid: first step, last time and relative step.
const CHORDAL_T_MIN: f64 = 1e-10;
const CHORDAL_T_MAX: f64 = 64.0;
const CHORDAL_REL: f64 = 2e-3;
/// Relative spacing of the chordal points that are mapped back.
const KEEP_SPACING: f64 = 0.05;
const ANGLES: usize = 32;
const RADII: [f64; 3] = [1.25, 1.5, 1.75];
const FILTER_WALKS: usize = 128;
const MAX_CANDIDATES: usize = 12;

/// Chordal SLE_κ on the grid `0, t_min, t_min(1+rel), ...` up to `t_max`;
/// the relative resolution is the same at every scale.
pub fn geometric_chordal_trace(kappa: f64, t_min: f64, t_max: f64, rel: f64, seed: u64) -> Result<Trace> {
    ensure(kappa > 0.0 && t_min > 0.0 && t_max > t_min && rel > 0.0, || "invalid geometric grid".into())?;
    let mut rng = CounterRng::new(seed, 0);
    let mut times = vec![0.0, t_min];
    let mut w = vec![0.0, (kappa * t_min).sqrt() * rng.normal()];
    while *times.last().unwrap() < t_max {
        let t = *times.last().unwrap();
        let dt = t * rel;
        times.push(t + dt);
        w.push(w.last().unwrap() + (kappa * dt).sqrt() * rng.normal());
    }
    trace_on_grid(&times, &w)
}

/// The pair of curves from 0: η₁ whole-plane SLE_κ(κ-2) and η₂ chordal
/// SLE_κ in the complement of η₁ (run up to its capacity horizon), from the
/// root of η₁ to its tip, both truncated after leaving `B(0, 2 r_macro)`.
#[derive(Clone, Debug)]
pub struct EscapeSetup {
    pub eta1: Vec<C64>,
    pub eta2: Vec<C64>,
    pub r0: f64,
}

impl EscapeSetup {
    pub fn sample(kappa: f64, dt: f64, horizon: f64, r0: f64, r_macro: f64, seed: u64) -> Result<Self> {
        let fp = [ForcePoint { rho: kappa - 2.0, side: Side::Left, offset: 0.0 }];
        let opts = DrivingOptions { r0: Some(r0), ..Default::default() };
        let d = generate_driving(Scheme::WholePlaneRho, kappa, &fp, dt, horizon, seed, &opts)?;
        let t = d.horizon();
        let eta1 = truncate(whole_plane_trace(&d, STRIDE)?.points, 2.0 * r_macro);

        // exterior of the unit disk -> H, root image -> 0, tip -> infinity
        let a = whole_plane_boundary_image(&d, d.w[0] + PI, t)?.conj();
        let b = d.w_unit(d.steps()).conj();
        let m = |v: C64| (v - a) / (v - b);
        let mut v3 = C64::from_polar(1.0, 0.5 * (a.arg() + b.arg()));
        if (v3 - a).norm() < 1e-6 || (v3 - b).norm() < 1e-6 {
            v3 = -v3;
        }
        let mut lambda = m(v3).conj() / m(v3).norm();
        if (lambda * m(C64::new(0.0, 0.0))).im < 0.0 {
            lambda = -lambda;
        }
        let back = |zeta: C64| {
            let s = zeta / lambda;
            let u = (1.0 - s) / (a - s * b);
            if u.norm() <= 1.0 + 1e-9 {
                u / u.norm() * (1.0 + 1e-9)
            } else {
                u
            }
        };

        let gamma = geometric_chordal_trace(kappa, CHORDAL_T_MIN, CHORDAL_T_MAX, CHORDAL_REL, seed ^ 0x2)?;
        let map = |k: usize| inverse_whole_plane(&d, back(gamma.points[k]), t).ok();
        let mut eta2: Vec<C64> = Vec::new();
        let mut last: Option<(usize, C64)> = None;
        for (k, &g) in gamma.points.iter().enumerate() {
            if let Some((j, _)) = last {
                let l = gamma.points[j];
                if (g - l).norm() <= KEEP_SPACING * g.norm().max(l.norm()) {
                    continue;
                }
            }
            let Some(z) = map(k) else { continue };
            if let Some((j, zl)) = last {
                refine(&map, j, zl, k, z, &mut eta2, 0);
            }
            eta2.push(z);
            last = Some((k, z));
            if z.norm() > 2.0 * r_macro {
                break;
            }
        }
        ensure(eta2.len() >= 2, || "second curve degenerate".into())?;
        Ok(EscapeSetup { eta1, eta2, r0 })
    }

    /// The curves and the starting disk, numbered 0, 1, 2, plus the escape
    /// circle as obstacle 3 when `r_macro` is given.
    pub fn obstacles(&self, r_macro: Option<f64>) -> Result<ObstacleSet> {
        let mut v = vec![
            Obstacle::Polyline(self.eta1.clone()),
            Obstacle::Polyline(self.eta2.clone()),
            Obstacle::Circle { center: C64::new(0.0, 0.0), radius: self.r0 },
        ];
        if let Some(r) = r_macro {
            v.push(Obstacle::Circle { center: C64::new(0.0, 0.0), radius: r });
        }
        ObstacleSet::new(v, DELTA_ABS)
    }
}

/// Inserts mapped points between indices `i` and `k` while the image jump
/// exceeds the relative spacing.
fn refine(map: &impl Fn(usize) -> Option<C64>, i: usize, zi: C64, k: usize, zk: C64, out: &mut Vec<C64>, depth: u32) {
    if k - i < 2 || depth > 12 || (zk - zi).norm() <= KEEP_SPACING * zi.norm().max(zk.norm()) {
        return;
    }
    let m = (i + k) / 2;
    let Some(zm) = map(m) else { return };
    refine(map, i, zi, m, zm, out, depth + 1);
    out.push(zm);
    refine(map, m, zm, k, zk, out, depth + 1);
}

fn truncate(mut pts: Vec<C64>, r: f64) -> Vec<C64> {
    if let Some(k) = pts.iter().position(|z| z.norm() > r) {
        pts.truncate(k + 1);
    }
    pts
}

/// Smallest escape probability over admissible points near `|z| = eps`,
/// with the count of candidates and admissible points. `obs` carries the
/// escape circle (for the harmonic-measure filter), `curves` does not.
fn scale_minimum(
    obs: &ObstacleSet,
    curves: &ObstacleSet,
    r_macro: f64,
    eps: f64,
    walks: usize,
    seed: u64,
) -> Result<(Option<f64>, usize, usize)> {
    let mut admissible = Vec::new();
    let mut candidates = 0;
    for (ri, f) in RADII.iter().enumerate() {
        for j in 0..ANGLES {
            let z = C64::from_polar(f * eps, TAU * (j as f64 + 0.5 * ri as f64 / RADII.len() as f64) / ANGLES as f64);
            candidates += 1;
            if obs.nearest(z).0 < eps {
                continue;
            }
            let tag = (ri * ANGLES + j) as u64;
            let hm = harmonic_measure(obs, z, |h| h.part.unwrap_or(2), 4, FILTER_WALKS, seed ^ tag)?;
            if hm[0].p >= 0.25 && hm[1].p >= 0.25 {
                admissible.push((tag, z));
            }
        }
    }
    let n_adm = admissible.len();
    let mut best: Option<f64> = None;
    for &(tag, z) in admissible.iter().take(MAX_CANDIDATES) {
        let e = escape_by_splitting(curves, z, C64::new(0.0, 0.0), r_macro, walks, seed ^ (tag << 20) ^ 0x5EED)?;
        let p = e.p;
        best = Some(best.map_or(p, |b| b.min(p)));
    }
    Ok((best, candidates, n_adm))
}

/// Escape to `∂B(0, r_macro)` from points at distance about ε from the
/// root of a two-sided SLE₄ pair; fits the slope of `log log(1/p)` against
/// `log(1/ε)`. Escape probabilities use multilevel splitting with `walks`
/// walkers per dyadic stage.
pub fn run_sle4_escape(cfg: &RunConfig) -> Result<Report> {
    let kappa = cfg.kappa.unwrap_or(4.0);
    ensure(kappa == 4.0, || format!("sle4_escape runs at kappa = 4, got {kappa}"))?;
    let dt = cfg.dt.unwrap_or(1e-3);
    let r_macro = cfg.r_macro.unwrap_or(1.0);
    let horizon = cfg.horizon.unwrap_or((2.0 * r_macro).ln());
    let r0 = cfg.r0.unwrap_or(1e-4);
    let reps = cfg.replicates.unwrap_or(16);
    let walks = cfg.walks.unwrap_or(1000);
    let ladder = cfg.epsilons.clone().unwrap_or_else(|| dyadic(3, 9));
    ensure(ladder[0] * 2.0 < r_macro && *ladder.last().unwrap() > 4.0 * r0, || {
        "ladder must lie between 4 r0 and r_macro / 2".into()
    })?;

    let per: Vec<Vec<(Option<f64>, usize, usize)>> = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<_> {
            let seed = replicate_seed(cfg.seed, 4, r);
            let setup = EscapeSetup::sample(kappa, dt, horizon, r0, r_macro, seed)?;
            let obs = setup.obstacles(Some(r_macro))?;
            let curves = setup.obstacles(None)?;
            ladder
                .iter()
                .enumerate()
                .map(|(si, &eps)| scale_minimum(&obs, &curves, r_macro, eps, walks, replicate_seed(seed, 5, si)))
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut params = BTreeMap::new();
    params.insert("kappa".into(), kappa.into());
    params.insert("dt".into(), dt.into());
    params.insert("T".into(), horizon.into());
    params.insert("r0".into(), r0.into());
    params.insert("r_macro".into(), r_macro.into());
    params.insert("replicates".into(), reps.into());
    params.insert("walks".into(), walks.into());
    params.insert("epsilons".into(), ladder.clone().into());
    let mut report = Report::new("sle4_escape", params, cfg.seed);

    let (mut xs, mut ys, mut sds) = (Vec::new(), Vec::new(), Vec::new());
    let mut dropped = 0;
    for (si, &eps) in ladder.iter().enumerate() {
        let mut logp = Moments::new();
        let (mut cand, mut adm) = (0, 0);
        for rep in &per {
            let (p, c, a) = rep[si];
            cand += c;
            adm += a;
            if let Some(p) = p {
                logp.push(p.ln());
            }
        }
        report.diagnostics.insert(format!("retained_fraction_{si:02}"), adm as f64 / cand.max(1) as f64);
        if logp.n == 0 {
            dropped += 1;
            report.notes.push(format!("no admissible point at eps = {eps}; scale dropped"));
            continue;
        }
        let est = logp.mean.exp();
        let se = if logp.n > 1 { est * logp.stderr() } else { 0.0 };
        report.scales.push(ScaleRow { scale: eps, estimate: est, stderr: se, n: logp.n });
        xs.push((1.0 / eps).ln());
        ys.push((-logp.mean).ln());
        sds.push(if logp.n > 1 { logp.stderr() / logp.mean.abs() } else { 0.0 });
    }
    report.diagnostics.insert("dropped_scales".into(), dropped as f64);
    report.set_fit(fit_exponent(&xs, &ys, &sds, 1.0, 2));
    let local: Vec<f64> = xs.windows(2).zip(ys.windows(2)).map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0])).collect();
    for (i, s) in local.iter().enumerate() {
        report.diagnostics.insert(format!("local_slope_{i:02}"), *s);
    }
    let increasing = local.windows(2).all(|w| w[1] >= w[0]);
    report.diagnostics.insert("local_slope_increasing".into(), increasing as u8 as f64);
    if let Some(s) = local.last() {
        report.diagnostics.insert("final_local_slope".into(), *s);
    }
    Ok(report)
}
