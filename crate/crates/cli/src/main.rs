//! Command-line runner: one subcommand per experiment, CSV plus a manifest
//! per run.

mod commands;
mod config;
mod error;
mod output;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

/// Default parent directory for run outputs.
const OUT_ENV: &str = "SPATPERM_OUT";

#[derive(Parser)]
#[command(name = "spatperm", version, about = "Cycle-weighted and spatial random permutations")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML experiment config.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory; default `$SPATPERM_OUT/<command>` or `spatperm-out/<command>`.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Override any config field, e.g. `--set n_max=20 --set weights.shift=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// h_0..h_{n_max}.
    HSeries(RunArgs),
    /// h_n by four routes plus the standard bounds.
    HCrosscheck(RunArgs),
    /// E_n(N_{1, sn}) / n on an s grid.
    CycleScan(RunArgs),
    /// Critical density.
    RhoC(RunArgs),
    /// Pressure and density on a mu grid.
    Pressure(RunArgs),
    /// Free energy on a rho grid.
    FreeEnergy(RunArgs),
    /// Legendre duality and shift covariance on grids.
    DualityCheck(RunArgs),
    /// Exact occupation law on one box.
    FourierExact(RunArgs),
    /// Cycle densities in micro, meso, long and macro windows across boxes.
    FourierScan(RunArgs),
    /// Zero-mode law and moment generating function across boxes.
    N0Mgf(RunArgs),
    /// Probabilities of the typical-occupation events.
    Typicality(RunArgs),
    /// Metropolis chain on positions and permutations.
    SpatialMc(RunArgs),
    /// Spatial integrals against lattice sums, and Monte Carlo against exact values.
    CrossValidate(RunArgs),
    /// Pass/fail table for run directories.
    Report { paths: Vec<PathBuf> },
}

impl Cmd {
    fn split(&self) -> (&'static str, Option<&RunArgs>) {
        match self {
            Cmd::HSeries(a) => ("h-series", Some(a)),
            Cmd::HCrosscheck(a) => ("h-crosscheck", Some(a)),
            Cmd::CycleScan(a) => ("cycle-scan", Some(a)),
            Cmd::RhoC(a) => ("rho-c", Some(a)),
            Cmd::Pressure(a) => ("pressure", Some(a)),
            Cmd::FreeEnergy(a) => ("free-energy", Some(a)),
            Cmd::DualityCheck(a) => ("duality-check", Some(a)),
            Cmd::FourierExact(a) => ("fourier-exact", Some(a)),
            Cmd::FourierScan(a) => ("fourier-scan", Some(a)),
            Cmd::N0Mgf(a) => ("n0-mgf", Some(a)),
            Cmd::Typicality(a) => ("typicality", Some(a)),
            Cmd::SpatialMc(a) => ("spatial-mc", Some(a)),
            Cmd::CrossValidate(a) => ("cross-validate", Some(a)),
            Cmd::Report { .. } => ("report", None),
        }
    }
}

fn execute(name: &str, args: &RunArgs) -> Result<(), CliError> {
    debug_assert!(commands::COMMANDS.contains(&name));
    let mut cfg = config::load(args.config.as_deref(), &args.set)?;
    if let Some(o) = &args.output {
        cfg.output = Some(o.clone());
    }
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if let Some(t) = args.tol {
        cfg.tol = Some(t);
    }
    let dir = cfg.output.clone().unwrap_or_else(|| {
        let parent = std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("spatperm-out"));
        parent.join(name)
    });
    let out = commands::run(name, &mut cfg)?;
    // the directory is recorded only when it was configured, so moving a
    // config between machines leaves the manifest config unchanged
    let written = output::write_run(&dir, name, &cfg, &out)?;
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = cli.command.split();
    let result = match (&cli.command, args) {
        (Cmd::Report { paths }, _) => report::report(paths).map(|s| print!("{s}")),
        (_, Some(a)) => execute(name, a),
        _ => unreachable!("every run command carries arguments"),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record(name));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
