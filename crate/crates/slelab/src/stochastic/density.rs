use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, invalid, Result};

/// Closed-form densities: last passage of drifted Brownian motion,
/// first passage of level 0, and the BES³ transition density from 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensitySpec {
    /// Density of sup{t : B_t + alpha t = b}.
    FirstPassageDrift { alpha: f64, b: f64 },
    /// First time a Brownian motion started at -b reaches 0.
    FirstPassageLevel0 { b: f64 },
    /// y -> p_t(0, y) for BES³.
    Bes3Transition { t: f64 },
}

impl DensitySpec {
    /// Builds a spec from a kind name and named parameters.
    pub fn from_parts(kind: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |k: &str| params.get(k).copied().ok_or_else(|| invalid(format!("missing parameter {k}")));
        let spec = match kind {
            "first_passage_drift" => DensitySpec::FirstPassageDrift { alpha: get("alpha")?, b: get("b")? },
            "first_passage_level0" => DensitySpec::FirstPassageLevel0 { b: get("b")? },
            "bes3_transition" => DensitySpec::Bes3Transition { t: get("t")? },
            other => return Err(invalid(format!("unknown density kind {other}"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DensitySpec::FirstPassageDrift { alpha, b } => alpha > 0.0 && b > 0.0,
            DensitySpec::FirstPassageLevel0 { b } => b > 0.0,
            DensitySpec::Bes3Transition { t } => t > 0.0,
        };
        ensure(ok, || format!("density parameters must be positive: {self:?}"))
    }

    pub fn name(&self) -> &'static str {
        match self {
            DensitySpec::FirstPassageDrift { .. } => "first_passage_drift",
            DensitySpec::FirstPassageLevel0 { .. } => "first_passage_level0",
            DensitySpec::Bes3Transition { .. } => "bes3_transition",
        }
    }
}

pub fn density(spec: &DensitySpec, x: f64) -> Result<f64> {
    spec.validate()?;
    ensure(x > 0.0, || format!("density argument must be positive, got {x}"))?;
    Ok(match *spec {
        DensitySpec::FirstPassageDrift { alpha, b } => {
            let u = b - alpha * x;
            alpha / (2.0 * PI * x).sqrt() * (-u * u / (2.0 * x)).exp()
        }
        DensitySpec::FirstPassageLevel0 { b } => b / (2.0 * PI * x * x * x).sqrt() * (-b * b / (2.0 * x)).exp(),
        DensitySpec::Bes3Transition { t } => {
            (2.0 / PI).sqrt() * t.powf(-1.5) * x * x * (-x * x / (2.0 * t)).exp()
        }
    })
}

/// CDF of the BES³ marginal at time t from 0.
pub fn bes3_cdf(t: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let u = y / t.sqrt();
    statrs::function::erf::erf(u / 2f64.sqrt()) - (2.0 / PI).sqrt() * u * (-0.5 * u * u).exp()
}
