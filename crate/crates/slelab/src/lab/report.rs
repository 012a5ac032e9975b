use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::weighted_fit;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub scale: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub n: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub exponent: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub r2: f64,
    pub residuals: Vec<f64>,
    /// Number of scales that entered the fit.
    pub scales_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub seed: u64,
    pub version: String,
    pub wallclock_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub scales: Vec<ScaleRow>,
    /// Absent when fewer than three usable scales remain.
    pub fit: Option<Fit>,
    pub meta: Meta,
    #[serde(default)]
    pub diagnostics: BTreeMap<String, f64>,
    #[serde(default)]
    pub notes: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Plot,
}

/// Weighted fit of `ys` on `xs` after dropping the first `skip` points,
/// with weights `1/sd²` (equal weights when any sd is zero). The exponent
/// is `sign * slope`. Refuses with a message below three usable points.
pub fn fit_exponent(xs: &[f64], ys: &[f64], sds: &[f64], sign: f64, skip: usize) -> std::result::Result<Fit, String> {
    let idx: Vec<usize> = (skip.min(xs.len())..xs.len()).filter(|&i| xs[i].is_finite() && ys[i].is_finite()).collect();
    if idx.len() < 3 {
        return Err(format!("only {} usable scales after excluding the {skip} coarsest; no fit", idx.len()));
    }
    let x: Vec<f64> = idx.iter().map(|&i| xs[i]).collect();
    let y: Vec<f64> = idx.iter().map(|&i| ys[i]).collect();
    let ok = idx.iter().all(|&i| sds[i].is_finite() && sds[i] > 0.0);
    let w: Vec<f64> = idx.iter().map(|&i| if ok { 1.0 / (sds[i] * sds[i]) } else { 1.0 }).collect();
    let f = weighted_fit(&x, &y, &w).ok_or("degenerate fit")?;
    let (a, b) = (sign * f.ci_lo, sign * f.ci_hi);
    Ok(Fit { exponent: sign * f.slope, ci_lo: a.min(b), ci_hi: a.max(b), r2: f.r2, residuals: f.residuals, scales_used: idx.len() })
}

impl Report {
    pub(crate) fn new(experiment: &str, params: BTreeMap<String, serde_json::Value>, seed: u64) -> Self {
        Report {
            experiment: experiment.into(),
            params,
            scales: Vec::new(),
            fit: None,
            meta: Meta { seed, version: crate::VERSION.into(), wallclock_s: 0.0 },
            diagnostics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub(crate) fn set_fit(&mut self, fit: std::result::Result<Fit, String>) {
        match fit {
            Ok(f) => self.fit = Some(f),
            Err(msg) => {
                log::warn!("{}: {msg}", self.experiment);
                self.notes.push(msg);
                self.fit = None;
            }
        }
    }

    /// Every numeric field must be finite.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("report field {what} is not finite")));
        for r in &self.scales {
            if !(r.scale.is_finite() && r.estimate.is_finite() && r.stderr.is_finite()) {
                return bad("scales");
            }
        }
        if let Some(f) = &self.fit {
            let all = [f.exponent, f.ci_lo, f.ci_hi, f.r2];
            if !all.iter().chain(&f.residuals).all(|x| x.is_finite()) {
                return bad("fit");
            }
        }
        for (k, v) in &self.diagnostics {
            if !v.is_finite() {
                return bad(k);
            }
        }
        if !self.meta.wallclock_s.is_finite() {
            return bad("wallclock_s");
        }
        if self.meta.version.is_empty() {
            return Err(Error::InvalidParameter("empty version".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Per-scale table with columns `scale,estimate,stderr,n`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("scale,estimate,stderr,n\n");
        for r in &self.scales {
            s.push_str(&format!("{:?},{:?},{:?},{}\n", r.scale, r.estimate, r.stderr, r.n));
        }
        s
    }

    pub fn plot_script(&self) -> String {
        let exp = &self.experiment;
        let fit = match &self.fit {
            Some(f) => format!("exponent {:.4} [{:.4}, {:.4}]", f.exponent, f.ci_lo, f.ci_hi),
            None => "no fit".into(),
        };
        format!(
            r#"#!/usr/bin/env python3
# Plots {exp}.csv (columns scale,estimate,stderr,n) on log-log axes.
import csv, os, sys
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
path = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "{exp}.csv")
rows = list(csv.DictReader(open(path)))
x = [float(r["scale"]) for r in rows]
y = [float(r["estimate"]) for r in rows]
e = [float(r["stderr"]) for r in rows]
fig, ax = plt.subplots(figsize=(5, 4))
ax.errorbar(x, y, yerr=e, fmt="o-", capsize=3)
ax.set_xscale("log")
if all(v > 0 for v in y):
    ax.set_yscale("log")
ax.set_xlabel("scale")
ax.set_ylabel("estimate")
ax.set_title("{exp}: {fit}")
fig.tight_layout()
fig.savefig(os.path.join(here, "{exp}.png"), dpi=120)
"#
        )
    }
}

/// Writes the requested formats into `dir` and returns the paths written.
pub fn emit_report(report: &Report, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    report.validate()?;
    fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for f in formats {
        let (name, body) = match f {
            Format::Json => (format!("{}.json", report.experiment), report.to_json()?),
            Format::Csv => (format!("{}.csv", report.experiment), report.to_csv()),
            Format::Plot => (format!("plot_{}.py", report.experiment), report.plot_script()),
        };
        let path = dir.join(name);
        fs::File::create(&path)?.write_all(body.as_bytes())?;
        out.push(path);
    }
    Ok(out)
}
