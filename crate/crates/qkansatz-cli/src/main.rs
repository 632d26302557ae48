use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};
use qkansatz_cli::config::parse_tolerance;
use qkansatz_cli::{run_timed, Overrides, Registry, RunConfig, RunError, Subcommand};

#[derive(Parser)]
#[command(name = "qkansatz", version, about = "Residual checks for hyperkähler and quaternionic Kähler constructions")]
enum Cli {
    /// Gibbons-Hawking data: Bogomolny equations, closure, quaternionic checks.
    VerifyGh(Common),
    /// Cone structure of Gibbons-Hawking data.
    VerifyCone(Common),
    /// Reduction to quaternionic Kähler data and its checks.
    ReduceQk(Common),
    /// Four-dimensional Calderbank-Pedersen type potentials.
    Cp4d(Common),
    /// Data built from a holomorphic prepotential.
    Cmap(Common),
    /// The Legendre transform construction from a prepotential.
    Legendre(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Finite-difference step.
    #[arg(long)]
    h: Option<f64>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a check tolerance, NAME=VALUE.
    #[arg(long, value_parser = parse_tolerance)]
    tolerance: Vec<(String, f64)>,
    /// Record wall time in the report metadata.
    #[arg(long)]
    timing: bool,
}

fn main() -> ExitCode {
    let (sub, c) = match Cli::parse() {
        Cli::VerifyGh(c) => (Subcommand::VerifyGh, c),
        Cli::VerifyCone(c) => (Subcommand::VerifyCone, c),
        Cli::ReduceQk(c) => (Subcommand::ReduceQk, c),
        Cli::Cp4d(c) => (Subcommand::Cp4d, c),
        Cli::Cmap(c) => (Subcommand::Cmap, c),
        Cli::Legendre(c) => (Subcommand::Legendre, c),
    };
    let text = match &c.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("error: {}: {e}", p.display());
                return ExitCode::from(2);
            }
        },
        None => None,
    };
    let ov = Overrides { samples: c.samples, seed: c.seed, h: c.h, tolerances: c.tolerance };
    let cfg = match RunConfig::load(sub, text.as_deref(), &ov) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let t = std::time::Instant::now();
    let report = match run_timed(&cfg, &Registry::default()) {
        Ok(r) => r,
        Err(e @ RunError::Usage(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let mut report = report;
    if !c.timing {
        report.metadata.wall_time_s = None;
    }
    let json = report.to_json();
    match &c.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &json) {
                eprintln!("error: {}: {e}", p.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{json}"),
    }
    eprint!("{}", report.summary());
    eprintln!("{} in {:.2}s", if report.pass { "pass" } else { "FAIL" }, t.elapsed().as_secs_f64());
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
