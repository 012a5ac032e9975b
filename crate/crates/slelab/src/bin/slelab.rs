use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use slelab::lab::{emit_report, run, Experiment, Format, RunConfig};

/// Run an slelab experiment and write its report (JSON, CSV, plot script).
#[derive(Parser, Debug)]
#[command(name = "slelab", version)]
struct Cli {
    /// One of sle8_modulus, sle4_escape, qh_divergence, moment_scaling, intensity_profile.
    experiment: Experiment,
    /// Flat TOML run configuration; unset keys take the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: `out` from the config, else `./out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match go(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("slelab: {e}");
            ExitCode::FAILURE
        }
    }
}

fn go(cli: Cli) -> slelab::Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_toml(&std::fs::read_to_string(p)?)?,
        None => RunConfig::new(cli.experiment),
    };
    if cfg.experiment != cli.experiment {
        return Err(slelab::Error::InvalidParameter(format!(
            "config is for {}, command line asks for {}",
            cfg.experiment, cli.experiment
        )));
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = Some(w);
    }
    let dir = cli.out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let report = run(&cfg)?;
    for p in emit_report(&report, &dir, &[Format::Json, Format::Csv, Format::Plot])? {
        println!("{}", p.display());
    }
    match &report.fit {
        Some(f) => println!("exponent {:.4} [{:.4}, {:.4}] r2 {:.3}", f.exponent, f.ci_lo, f.ci_hi, f.r2),
        None => println!("no fit: {}", report.notes.join("; ")),
    }
    Ok(())
}
