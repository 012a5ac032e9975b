//! Brownian hitting estimates by walk on spheres, and Whitney-square
//! geometry of planar domains given as rasters.

mod bvh;
mod raster;
mod whitney;

pub use bvh::{closest_on_segment, Segment, SegmentBvh};
pub use raster::Raster;
pub use whitney::{
    graph_distance, js_shadow_sum, quasihyperbolic_distance, whitney_decompose, ShadowSum, WhitneyCell,
    WhitneyDecomposition,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::rng::CounterRng;
use crate::stats::wilson_interval;
use crate::C64;

/// Default absorption layer.
pub const DELTA_ABS: f64 = 1e-6;
const MAX_STEPS: usize = 1_000_000;
const FAR: f64 = 1e12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Obstacle {
    /// The line `Im z = y`.
    Horizontal { y: f64 },
    /// The line `Re z = x`.
    Vertical { x: f64 },
    Circle { center: C64, radius: f64 },
    /// Curve samples joined by straight segments.
    Polyline(Vec<C64>),
}

/// Absorbing set for Brownian motion. Obstacles are numbered in order and a
/// hit reports the number of the one it landed on.
#[derive(Clone, Debug)]
pub struct ObstacleSet {
    pub obstacles: Vec<Obstacle>,
    pub delta_abs: f64,
    bvh: SegmentBvh,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub point: C64,
    /// Index of the absorbing obstacle, or `None` if the walk ran away.
    pub part: Option<usize>,
    pub steps: usize,
}

impl ObstacleSet {
    pub fn new(obstacles: Vec<Obstacle>, delta_abs: f64) -> Result<Self> {
        ensure(!obstacles.is_empty(), || "obstacle set is empty".into())?;
        ensure(delta_abs > 0.0, || format!("absorption layer must be positive, got {delta_abs}"))?;
        let mut segs = Vec::new();
        for (tag, o) in obstacles.iter().enumerate() {
            if let Obstacle::Polyline(p) = o {
                ensure(!p.is_empty(), || "empty polyline".into())?;
                if p.len() == 1 {
                    segs.push(Segment { a: p[0], b: p[0], tag });
                }
                segs.extend(p.windows(2).map(|w| Segment { a: w[0], b: w[1], tag }));
            }
        }
        Ok(Self { obstacles, delta_abs, bvh: SegmentBvh::new(segs) })
    }

    /// Distance to the nearest obstacle, its index and the closest point.
    pub fn nearest(&self, z: C64) -> (f64, usize, C64) {
        let mut best = self.bvh.nearest(z).unwrap_or((f64::INFINITY, 0, z));
        for (i, o) in self.obstacles.iter().enumerate() {
            let (d, p) = match *o {
                Obstacle::Horizontal { y } => ((z.im - y).abs(), C64::new(z.re, y)),
                Obstacle::Vertical { x } => ((z.re - x).abs(), C64::new(x, z.im)),
                Obstacle::Circle { center, radius } => {
                    let v = z - center;
                    let r = v.norm();
                    let p = if r > 0.0 { center + v * (radius / r) } else { center + radius };
                    ((r - radius).abs(), p)
                }
                Obstacle::Polyline(_) => continue,
            };
            if d < best.0 {
                best = (d, i, p);
            }
        }
        best
    }

    /// One walk on spheres from `start` until it enters the absorption layer.
    pub fn walk(&self, start: C64, rng: &mut CounterRng) -> Hit {
        let mut z = start;
        for step in 0..MAX_STEPS {
            let (d, part, p) = self.nearest(z);
            if d < self.delta_abs {
                return Hit { point: p, part: Some(part), steps: step };
            }
            if !d.is_finite() || z.norm() > FAR {
                break;
            }
            z += C64::from_polar(d, std::f64::consts::TAU * rng.uniform());
        }
        Hit { point: z, part: None, steps: MAX_STEPS }
    }

    fn check_start(&self, start: C64) -> Result<()> {
        let (d, _, _) = self.nearest(start);
        if d < self.delta_abs {
            return Err(Error::InvalidStart(format!("start {start} lies on an obstacle")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub p: f64,
    /// 95% Wilson interval.
    pub lo: f64,
    pub hi: f64,
    pub stderr: f64,
    pub successes: u64,
    pub walks: u64,
    /// Walks that left every obstacle behind or hit the step cap.
    pub undetermined: u64,
}

impl ProbabilityEstimate {
    fn new(successes: u64, walks: u64, undetermined: u64) -> Self {
        let p = successes as f64 / walks as f64;
        let (lo, hi) = wilson_interval(successes, walks, 1.96);
        Self { p, lo, hi, stderr: (p * (1.0 - p) / walks as f64).sqrt(), successes, walks, undetermined }
    }
}

fn hits(obstacles: &ObstacleSet, start: C64, walks: usize, seed: u64) -> Result<Vec<Hit>> {
    obstacles.check_start(start)?;
    ensure(walks >= 1, || "need at least one walk".into())?;
    Ok((0..walks)
        .into_par_iter()
        .map(|w| obstacles.walk(start, &mut CounterRng::new(seed, w as u64)))
        .collect())
}

/// Probability that Brownian motion from `start` is absorbed at a hit
/// satisfying `success`.
pub fn escape_probability(
    obstacles: &ObstacleSet,
    start: C64,
    success: impl Fn(&Hit) -> bool + Sync,
    walks: usize,
    seed: u64,
) -> Result<ProbabilityEstimate> {
    let hs = hits(obstacles, start, walks, seed)?;
    let undetermined = hs.iter().filter(|h| h.part.is_none()).count() as u64;
    let s = hs.iter().filter(|h| h.part.is_some() && success(h)).count() as u64;
    Ok(ProbabilityEstimate::new(s, walks as u64, undetermined))
}

/// Empirical hitting distribution over `parts` classes; `partition` maps a
/// hit to its class.
pub fn harmonic_measure(
    obstacles: &ObstacleSet,
    start: C64,
    partition: impl Fn(&Hit) -> usize + Sync,
    parts: usize,
    walks: usize,
    seed: u64,
) -> Result<Vec<ProbabilityEstimate>> {
    let hs = hits(obstacles, start, walks, seed)?;
    let undetermined = hs.iter().filter(|h| h.part.is_none()).count() as u64;
    let mut counts = vec![0u64; parts];
    for h in hs.iter().filter(|h| h.part.is_some()) {
        let k = partition(h);
        ensure(k < parts, || format!("partition returned {k} for {parts} parts"))?;
        counts[k] += 1;
    }
    Ok(counts.into_iter().map(|c| ProbabilityEstimate::new(c, walks as u64, undetermined)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplittingEstimate {
    pub p: f64,
    /// Delta-method standard error of `ln p`.
    pub log_stderr: f64,
    /// Fraction of walkers that reached each intermediate circle.
    pub stage_fractions: Vec<f64>,
    pub walks_per_stage: usize,
}

/// Walk from `z` until absorbed (`None`) or within the absorption layer of
/// the circle `|w - c| = r` (returns the entrance point).
fn walk_to_circle(obstacles: &ObstacleSet, z0: C64, c: C64, r: f64, rng: &mut CounterRng) -> Option<C64> {
    let mut z = z0;
    for _ in 0..MAX_STEPS {
        let (d, _, _) = obstacles.nearest(z);
        if d < obstacles.delta_abs {
            return None;
        }
        let gap = r - (z - c).norm();
        if gap < obstacles.delta_abs {
            return Some(z);
        }
        z += C64::from_polar(d.min(gap), std::f64::consts::TAU * rng.uniform());
    }
    None
}

/// Probability that Brownian motion from `start` reaches the circle
/// `|z - center| = radius` before the obstacles, by fixed-effort multilevel
/// splitting on the circles of radius `2^k |start - center|`.
///
/// Each stage runs `walks` walkers restarted cyclically from the entrance
/// points of the previous stage; the estimate is the product of the stage
/// fractions. A stage with no survivor contributes `1/(2 walks)`.
pub fn escape_by_splitting(
    obstacles: &ObstacleSet,
    start: C64,
    center: C64,
    radius: f64,
    walks: usize,
    seed: u64,
) -> Result<SplittingEstimate> {
    obstacles.check_start(start)?;
    ensure(walks >= 1, || "need at least one walk".into())?;
    let r0 = (start - center).norm();
    ensure(r0 > 0.0 && r0 < radius, || format!("start {start} must lie strictly inside the target circle"))?;
    let mut levels = Vec::new();
    let mut r = 2.0 * r0;
    while r < radius {
        levels.push(r);
        r *= 2.0;
    }
    levels.push(radius);

    let mut front = vec![start];
    let mut fractions = Vec::new();
    let (mut logp, mut var) = (0.0, 0.0);
    for (k, &r) in levels.iter().enumerate() {
        let next: Vec<C64> = (0..walks)
            .into_par_iter()
            .filter_map(|j| {
                let mut rng = CounterRng::new(seed, (k as u64) << 40 | j as u64);
                walk_to_circle(obstacles, front[j % front.len()], center, r, &mut rng)
            })
            .collect();
        let f = next.len() as f64 / walks as f64;
        fractions.push(f);
        if next.is_empty() {
            logp += (0.5 / walks as f64).ln();
            var += 1.0;
            break;
        }
        logp += f.ln();
        var += (1.0 - f) / (walks as f64 * f);
        front = next;
    }
    Ok(SplittingEstimate { p: logp.exp(), log_stderr: var.sqrt(), stage_fractions: fractions, walks_per_stage: walks })
}
