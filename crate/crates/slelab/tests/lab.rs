use std::process::Command;

use slelab::lab::{
    dyadic, emit_report, fit_exponent, modulus_of_continuity, run, Experiment, Format, Report, RunConfig,
};
use slelab::{Error, C64};

fn tmpdir(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("slelab-test-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn small(e: Experiment) -> RunConfig {
    let mut c = RunConfig::new(e);
    c.seed = 11;
    match e {
        Experiment::Sle8Modulus => {
            c.dt = Some(2f64.powi(-12));
            c.replicates = Some(2);
            c.epsilons = Some(dyadic(3, 9));
        }
        Experiment::Sle4Escape => {
            c.dt = Some(1e-2);
            c.replicates = Some(2);
            c.walks = Some(100);
            c.r0 = Some(1e-3);
            c.epsilons = Some(dyadic(3, 7));
        }
        Experiment::QhDivergence => c.levels = Some(vec![4, 5, 6]),
        Experiment::MomentScaling => c.replicates = Some(200),
        Experiment::IntensityProfile => c.replicates = Some(100),
    }
    c
}

#[test]
fn experiment_names_parse() {
    for e in Experiment::ALL {
        assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        assert_eq!(e.to_string(), e.name());
    }
    assert!(matches!("sle9".parse::<Experiment>(), Err(Error::Parse(_))));
}

#[test]
fn config_toml_round_trip() {
    let mut c = small(Experiment::Sle8Modulus);
    c.horizon = Some(0.5);
    c.control = Some(false);
    let s = c.to_toml().unwrap();
    assert!(s.contains("T = 0.5"));
    assert_eq!(RunConfig::from_toml(&s).unwrap(), c);

    let minimal = RunConfig::from_toml("experiment = \"moment_scaling\"\n").unwrap();
    assert_eq!(minimal, RunConfig::new(Experiment::MomentScaling));
    let alias = RunConfig::from_toml("experiment = \"sle8_modulus\"\nhorizon = 2.0\n").unwrap();
    assert_eq!(alias.horizon, Some(2.0));
}

#[test]
fn config_rejects_bad_input() {
    let bad = [
        "experiment = \"moment_scaling\"\nbogus = 1\n",
        "experiment = \"nope\"\n",
        "experiment = \"moment_scaling\"\nepsilons = [0.1, 0.2]\n",
        "experiment = \"moment_scaling\"\nepsilons = []\n",
        "experiment = \"moment_scaling\"\ndt = -1.0\n",
        "experiment = \"moment_scaling\"\nreplicates = 0\n",
        "experiment = \"qh_divergence\"\nlevels = [6, 5]\n",
        "seed = 3\n",
    ];
    for s in bad {
        assert!(RunConfig::from_toml(s).is_err(), "accepted {s:?}");
    }
    let mut c = small(Experiment::Sle8Modulus);
    c.kappa = Some(6.0);
    assert!(run(&c).is_err());
}

#[test]
fn every_experiment_produces_a_valid_report() {
    for e in Experiment::ALL {
        let r = run(&small(e)).unwrap_or_else(|err| panic!("{e}: {err}"));
        r.validate().unwrap();
        assert_eq!(r.experiment, e.name());
        assert_eq!(r.meta.seed, 11);
        assert_eq!(r.meta.version, env!("CARGO_PKG_VERSION"));
        assert!(r.scales.len() >= 3, "{e}: {} scales", r.scales.len());
        assert!(r.fit.is_some() || !r.notes.is_empty(), "{e}: a missing fit must be explained");
        let back = Report::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }
}

#[test]
fn csv_output_does_not_depend_on_workers() {
    let mut a = small(Experiment::MomentScaling);
    a.workers = Some(1);
    let mut b = a.clone();
    b.workers = Some(3);
    assert_eq!(run(&a).unwrap().to_csv(), run(&b).unwrap().to_csv());
    let mut c = a.clone();
    c.seed = 12;
    assert_ne!(run(&a).unwrap().to_csv(), run(&c).unwrap().to_csv());
}

#[test]
fn emitted_files() {
    let r = run(&small(Experiment::IntensityProfile)).unwrap();
    let dir = tmpdir("emit");
    let paths = emit_report(&r, &dir, &[Format::Json, Format::Csv, Format::Plot]).unwrap();
    assert_eq!(paths.len(), 3);
    let csv = std::fs::read_to_string(&paths[1]).unwrap();
    assert!(csv.starts_with("scale,estimate,stderr,n\n"));
    assert_eq!(csv.lines().count(), r.scales.len() + 1);
    let script = std::fs::read_to_string(&paths[2]).unwrap();
    assert!(script.contains("intensity_profile.csv"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&paths[0]).unwrap()).unwrap();
    for key in ["experiment", "params", "scales", "fit", "meta"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    std::fs::remove_dir_all(&dir).unwrap();

    let mut broken = r.clone();
    broken.scales[0].estimate = f64::NAN;
    assert!(emit_report(&broken, &tmpdir("broken"), &[Format::Json]).is_err());
}

#[test]
fn fit_skips_coarse_scales_and_needs_three_points() {
    let xs: Vec<f64> = (0..6).map(|k| k as f64).collect();
    // The two coarsest points are off the line and must not matter.
    let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| if i < 2 { 100.0 } else { 1.0 - 0.75 * x }).collect();
    let f = fit_exponent(&xs, &ys, &[0.0; 6], -1.0, 2).unwrap();
    assert!((f.exponent - 0.75).abs() < 1e-12);
    assert_eq!(f.scales_used, 4);
    assert!(f.ci_lo <= f.exponent && f.exponent <= f.ci_hi);
    assert!(fit_exponent(&xs[..4], &ys[..4], &[0.0; 4], 1.0, 2).is_err());
}

#[test]
fn modulus_matches_brute_force() {
    let pts: Vec<C64> = (0..300).map(|k| {
        let t = k as f64 * 0.05;
        C64::new(t.sin() * (1.0 + 0.3 * (7.0 * t).cos()), (2.3 * t).cos())
    }).collect();
    let lags = [1, 2, 5, 17, 64, 299];
    let fast = modulus_of_continuity(&pts, &lags);
    for (k, m) in lags.iter().zip(fast) {
        let mut best: f64 = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..=(i + k).min(pts.len() - 1) {
                best = best.max((pts[i] - pts[j]).norm());
            }
        }
        assert_eq!(m, best, "lag {k}");
    }
}

#[test]
fn cli_writes_reports() {
    let dir = tmpdir("cli");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, small(Experiment::MomentScaling).to_toml().unwrap()).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_slelab"))
        .args(["moment_scaling", "--config"])
        .arg(&cfg)
        .args(["--seed", "5", "--workers", "1", "--out"])
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = Report::from_json(&std::fs::read_to_string(dir.join("out/moment_scaling.json")).unwrap()).unwrap();
    assert_eq!(r.meta.seed, 5);
    assert!(dir.join("out/moment_scaling.csv").exists());

    let mismatch = Command::new(env!("CARGO_BIN_EXE_slelab"))
        .args(["sle8_modulus", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!mismatch.status.success());
    std::fs::remove_dir_all(&dir).unwrap();
}
