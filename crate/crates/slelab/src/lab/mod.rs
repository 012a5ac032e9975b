//! Experiment harness: run configurations, per-scale reports with exponent
//! fits, and report emission (JSON, CSV and a plot script).
//!
//! Every experiment is a pure function of its [`RunConfig`]. Replicates use
//! streams keyed by replicate id and results are reduced in id order, so the
//! CSV output does not depend on the worker count.

mod escape;
mod lqg;
mod modulus;
mod qh;
mod report;

pub use escape::{geometric_chordal_trace, run_sle4_escape, EscapeSetup};
pub use lqg::{run_intensity_profile, run_moment_scaling};
pub use modulus::{modulus_of_continuity, run_sle8_modulus};
pub use qh::{run_qh_divergence, sle4_disk_raster};
pub use report::{emit_report, fit_exponent, Fit, Format, Meta, Report, ScaleRow};

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::rng::CounterRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Sle8Modulus,
    Sle4Escape,
    QhDivergence,
    MomentScaling,
    IntensityProfile,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Sle8Modulus,
        Experiment::Sle4Escape,
        Experiment::QhDivergence,
        Experiment::MomentScaling,
        Experiment::IntensityProfile,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Sle8Modulus => "sle8_modulus",
            Experiment::Sle4Escape => "sle4_escape",
            Experiment::QhDivergence => "qh_divergence",
            Experiment::MomentScaling => "moment_scaling",
            Experiment::IntensityProfile => "intensity_profile",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown experiment '{s}'")))
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Flat run configuration. Unset fields take per-experiment defaults; the
/// report echoes the resolved values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, rename = "T", alias = "horizon", skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Scale ladder, strictly decreasing: gaps for the modulus, ball radii
    /// for escape, heights `Im z` for the intensity profile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Brownian walks per estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walks: Option<usize>,
    /// Radius of the "macroscopically far" circle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_macro: Option<f64>,
    /// Whole-plane starting radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    /// Whitney refinement levels, increasing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<i32>>,
    /// Cached packed raster for the qh experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raster: Option<PathBuf>,
    /// Run the control experiment alongside.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<bool>,
}

fn default_seed() -> u64 {
    1
}

impl RunConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            seed: default_seed(),
            replicates: None,
            dt: None,
            horizon: None,
            kappa: None,
            gamma: None,
            alpha: None,
            p: None,
            epsilons: None,
            workers: None,
            out: None,
            walks: None,
            r_macro: None,
            r0: None,
            levels: None,
            raster: None,
            control: None,
        }
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.replicates {
            ensure(r >= 1, || "replicates must be at least 1".into())?;
        }
        if let Some(w) = self.workers {
            ensure(w >= 1, || "workers must be at least 1".into())?;
        }
        if let Some(e) = &self.epsilons {
            ensure(!e.is_empty(), || "epsilon ladder is empty".into())?;
            ensure(e.iter().all(|x| x.is_finite() && *x > 0.0), || "epsilons must be positive".into())?;
            ensure(e.windows(2).all(|w| w[1] < w[0]), || "epsilon ladder must be strictly decreasing".into())?;
        }
        if let Some(l) = &self.levels {
            ensure(!l.is_empty(), || "level list is empty".into())?;
            ensure(l.windows(2).all(|w| w[1] > w[0]), || "levels must be strictly increasing".into())?;
        }
        for (name, v) in [("dt", self.dt), ("T", self.horizon), ("r_macro", self.r_macro), ("r0", self.r0)] {
            if let Some(v) = v {
                ensure(v.is_finite() && v > 0.0, || format!("{name} must be positive, got {v}"))?;
            }
        }
        Ok(())
    }
}

/// Dyadic ladder `2^-from, ..., 2^-to`.
pub fn dyadic(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 2f64.powi(-k)).collect()
}

/// Seed of replicate `r` in sub-experiment `tag`.
pub(crate) fn replicate_seed(seed: u64, tag: u64, r: usize) -> u64 {
    CounterRng::new(seed, tag << 40 | r as u64).next_u64()
}

/// Runs an experiment on a pool of `cfg.workers` threads (all cores when unset).
pub fn run(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        b = b.num_threads(w);
    }
    let pool = b.build().map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let mut report = pool.install(|| match cfg.experiment {
        Experiment::Sle8Modulus => run_sle8_modulus(cfg),
        Experiment::Sle4Escape => run_sle4_escape(cfg),
        Experiment::QhDivergence => run_qh_divergence(cfg),
        Experiment::MomentScaling => run_moment_scaling(cfg),
        Experiment::IntensityProfile => run_intensity_profile(cfg),
    })?;
    report.meta.wallclock_s = start.elapsed().as_secs_f64();
    report.validate()?;
    Ok(report)
}
