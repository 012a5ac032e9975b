use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};

use super::{fit_exponent, replicate_seed, Report, RunConfig, ScaleRow};
use crate::conformal::{js_shadow_sum, whitney_decompose, Raster, ShadowSum};
use crate::error::{ensure, Result};
use crate::loewner::trace_on_grid;
use crate::rng::CounterRng;
use crate::C64;

const CHORDAL_T_MIN: f64 = 1e-10;
const CHORDAL_T_MAX: f64 = 64.0;
const CHORDAL_REL: f64 = 1e-2;

/// Raster of the left component of `D \ η` for chordal SLE₄ η from -i to i,
/// the component containing -0.99.
///
/// η is sampled in H on a grid whose steps keep the image steps under
/// `z -> i(z-i)/(z+i)` near two pixels, mapped to the disk, and closed by a
/// segment from its last point to i. It is carved with a thickening of
/// one pixel.
pub fn sle4_disk_raster(pixel: f64, seed: u64) -> Result<Raster> {
    ensure(pixel > 0.0 && pixel < 0.1, || format!("pixel {pixel} out of range"))?;
    let s = 2.0 * pixel;
    let mut rng = CounterRng::new(seed, 0);
    let mut times = vec![0.0, CHORDAL_T_MIN];
    let mut w = vec![0.0, (4.0 * CHORDAL_T_MIN).sqrt() * rng.normal()];
    while *times.last().unwrap() < CHORDAL_T_MAX {
        let t = *times.last().unwrap();
        let cap = (s * (1.0 + 4.0 * t) / 4.0).powi(2);
        let dt = (CHORDAL_REL * t).min(cap);
        times.push(t + dt);
        w.push(w.last().unwrap() + (4.0 * dt).sqrt() * rng.normal());
    }
    let tr = trace_on_grid(&times, &w)?;
    let i = C64::new(0.0, 1.0);
    let mut pts: Vec<C64> = tr.points.iter().map(|&z| i * (z - i) / (z + i)).collect();
    pts.push(i);
    let mut r = Raster::centered(1.0 + 2.0 * pixel, pixel, |z| z.norm() < 1.0);
    r.carve_polyline(&pts, pixel);
    r.component_containing(C64::new(-0.99, 0.0))
}

fn disk_raster(pixel: f64) -> Raster {
    Raster::centered(1.0 + 2.0 * pixel, pixel, |z| z.norm() < 1.0)
}

struct LevelResult {
    level: i32,
    cells: usize,
    violations: usize,
    sum: ShadowSum,
}

fn ladder(raster: &Raster, levels: &[i32], base: C64) -> Result<Vec<LevelResult>> {
    levels
        .iter()
        .map(|&l| {
            let mut dec = whitney_decompose(raster, l)?;
            let violations = dec.cells.iter().filter(|c| !(c.diam() <= c.dist && c.dist < 4.0 * c.diam())).count();
            let sum = js_shadow_sum(&mut dec, base)?;
            log::info!("level {l}: {} cells, qh integral {}", dec.cells.len(), sum.qh_integral);
            Ok(LevelResult { level: l, cells: dec.cells.len(), violations, sum })
        })
        .collect()
}

/// The deepest cell of the coarsest decomposition: a base point well inside
/// the domain, the same for every level.
fn base_point(raster: &Raster, level: i32) -> Result<C64> {
    let dec = whitney_decompose(raster, level)?;
    let c = dec.cells.iter().max_by(|a, b| a.dist.total_cmp(&b.dist)).expect("nonempty decomposition");
    Ok(c.center)
}

/// qh integral and Jones–Smirnov shadow sum of an SLE₄ complement across
/// Whitney refinement levels, with the unit disk as control.
pub fn run_qh_divergence(cfg: &RunConfig) -> Result<Report> {
    let levels = cfg.levels.clone().unwrap_or_else(|| (5..=9).collect());
    let top = *levels.last().unwrap();
    let pixel = 2f64.powi(-(top + 1));
    let control = cfg.control.unwrap_or(true);

    let raster = match &cfg.raster {
        Some(path) if path.exists() => {
            log::info!("reading cached raster {}", path.display());
            Raster::read_packed(BufReader::new(File::open(path)?))?
        }
        other => {
            let r = sle4_disk_raster(pixel, replicate_seed(cfg.seed, 10, 0))?;
            if let Some(path) = other {
                r.write_packed(BufWriter::new(File::create(path)?))?;
            }
            r
        }
    };
    ensure(raster.pixel <= pixel * (1.0 + 1e-12), || {
        format!("raster pixel {} is coarser than the finest level needs ({pixel})", raster.pixel)
    })?;
    let base = base_point(&raster, levels[0])?;
    let sle = ladder(&raster, &levels, base)?;

    let mut params = BTreeMap::new();
    params.insert("kappa".into(), 4.0.into());
    params.insert("levels".into(), levels.clone().into());
    params.insert("pixel".into(), raster.pixel.into());
    params.insert("base_re".into(), base.re.into());
    params.insert("base_im".into(), base.im.into());
    params.insert("control".into(), control.into());
    let mut report = Report::new("qh_divergence", params, cfg.seed);

    let mut violations = 0;
    for r in &sle {
        report.scales.push(ScaleRow {
            scale: 2f64.powi(-r.level),
            estimate: r.sum.qh_integral,
            stderr: 0.0,
            n: r.cells as u64,
        });
        report.diagnostics.insert(format!("sum_s2_L{:02}", r.level), r.sum.sum_s2);
        violations += r.violations;
    }
    let xs: Vec<f64> = sle.iter().map(|r| r.level as f64 * 2f64.ln()).collect();
    let ys: Vec<f64> = sle.iter().map(|r| r.sum.qh_integral.ln()).collect();
    report.set_fit(fit_exponent(&xs, &ys, &vec![0.0; xs.len()], 1.0, 2));
    for k in 0..sle.len().saturating_sub(2) {
        let (a, b) = (&sle[k], &sle[k + 2]);
        report
            .diagnostics
            .insert(format!("qh_ratio_L{:02}_L{:02}", a.level, b.level), b.sum.qh_integral / a.sum.qh_integral);
    }

    if control {
        let disk = disk_raster(raster.pixel);
        let ctl = ladder(&disk, &levels, C64::new(0.0, 0.0))?;
        for r in &ctl {
            report.diagnostics.insert(format!("disk_qh_L{:02}", r.level), r.sum.qh_integral);
            report.diagnostics.insert(format!("disk_sum_s2_L{:02}", r.level), r.sum.sum_s2);
            violations += r.violations;
        }
        for k in 0..ctl.len().saturating_sub(2) {
            let (a, b) = (&ctl[k], &ctl[k + 2]);
            report
                .diagnostics
                .insert(format!("disk_qh_ratio_L{:02}_L{:02}", a.level, b.level), b.sum.qh_integral / a.sum.qh_integral);
        }
    }
    report.diagnostics.insert("invariant_violations".into(), violations as f64);
    Ok(report)
}
