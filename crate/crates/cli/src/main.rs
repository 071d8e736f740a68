//! `pmme` — command-line front end for the collisional-model /
//! post-Markovian-dynamics experiment harness.
//!
//! Subcommands: `thermalize`, `cp-scan`, `solve-compare`, `simulate`.
//! Each takes `--config <path>` (TOML; an empty or missing file means the
//! built-in qubit thermalization defaults) and `--out <path>` (CSV; stdout
//! when omitted and the config names no output file).
//!
//! Exit codes: 0 success, 2 configuration/validation failure, 3
//! numerical-tolerance failure.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use pmme_core::error::Error;
use pmme_core::experiments::{
    parse_config, run_cp_scan, run_simulate, run_solver_compare, run_thermalization,
    write_cp_scan_csv, write_simulation_csv, write_solver_compare_csv, write_thermalization_csv,
    ExperimentConfig,
};

/// Trace-distance tolerance for `solve-compare`.
const COMPARE_TOLERANCE: f64 = 1e-5;

const EXIT_VALIDATION: u8 = 2;
const EXIT_TOLERANCE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "pmme",
    about = "Collisional-model simulator and post-Markovian master-equation solver",
    long_about = "Runs the qubit thermalization study, complete-positivity scans, and \
                  solver cross-checks. Without --config, every run uses the built-in \
                  defaults: |psi(0)> = (1/sqrt5)|0> + (2/sqrt5)|1>, ancilla diag(3/5, 2/5), \
                  partial-swap angles alpha = 0.1 and beta = 0.9, sigma-x readout, \
                  N = 200 collisions, exponential memory kernel (rate 1). Set RUST_LOG \
                  for diagnostics."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fidelity-vs-collisions study: plain chain plus two measured chains
    /// (early- and intermediate-centered Gaussian measurement weights)
    Thermalize(RunArgs),
    /// Minimum Choi eigenvalue of the dynamical map over the solver grid
    CpScan(RunArgs),
    /// Laplace-domain solution vs. the direct time-domain integrator;
    /// exits 3 if they disagree beyond 1e-5 trace distance
    SolveCompare(RunArgs),
    /// Raw measured chain with early-centered weights: per-collision states
    Simulate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file; omit (or leave empty) for the defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output path; defaults to the config's `output`, then stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    match &args.config {
        Some(path) => parse_config(path),
        None => Ok(ExperimentConfig::default()),
    }
}

fn emit(args: &RunArgs, cfg: &ExperimentConfig, body: &[u8]) -> Result<(), Error> {
    let target = args
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from));
    match target {
        Some(path) => {
            std::fs::write(&path, body)?;
            info!("wrote {}", path.display());
        }
        None => std::io::stdout().write_all(body)?,
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Thermalize(args) => {
            let cfg = load_config(args)?;
            let trajs = run_thermalization(&cfg)?;
            let mut buf = Vec::new();
            write_thermalization_csv(&mut buf, &trajs)?;
            emit(args, &cfg, &buf)?;
            for t in &trajs {
                eprintln!(
                    "{}: final fidelity {:.6}, first crossing of 0.99 at n = {}",
                    t.scenario,
                    t.final_fidelity(),
                    t.first_crossing(0.99)
                        .map_or("never".into(), |n| n.to_string())
                );
            }
            Ok(())
        }
        Command::CpScan(args) => {
            let cfg = load_config(args)?;
            let report = run_cp_scan(&cfg)?;
            let mut buf = Vec::new();
            write_cp_scan_csv(&mut buf, &report)?;
            emit(args, &cfg, &buf)?;
            let min = report
                .rows
                .iter()
                .map(|&(_, e, _)| e)
                .fold(f64::INFINITY, f64::min);
            eprintln!(
                "verdict: {} (min Choi eigenvalue {min:.3e}, construction deviation {:.3e})",
                if report.verdict_cp {
                    "completely positive on the whole grid"
                } else {
                    "NOT completely positive"
                },
                report.construction_deviation
            );
            Ok(())
        }
        Command::SolveCompare(args) => {
            let cfg = load_config(args)?;
            let report = run_solver_compare(&cfg)?;
            let mut buf = Vec::new();
            write_solver_compare_csv(&mut buf, &report)?;
            emit(args, &cfg, &buf)?;
            eprintln!("max trace distance between solvers: {:.3e}", report.max_distance);
            if report.max_distance > COMPARE_TOLERANCE {
                return Err(Error::ResidualTooLarge(report.max_distance, COMPARE_TOLERANCE));
            }
            Ok(())
        }
        Command::Simulate(args) => {
            let cfg = load_config(args)?;
            let rows = run_simulate(&cfg)?;
            let mut buf = Vec::new();
            write_simulation_csv(&mut buf, &rows)?;
            emit(args, &cfg, &buf)?;
            Ok(())
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_) | Error::Io(_) => EXIT_VALIDATION,
        _ => EXIT_TOLERANCE,
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
