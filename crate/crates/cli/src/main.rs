//! Batch driver: simulate the truncated dynamics, run the identity suite,
//! sweep the inequality probes, or run the Taylor-Green benchmark.
//!
//! Exit codes: 0 success (a blow-up stop is a reported outcome, not an
//! error), 1 verification failure, 2 configuration error, 3 numeric
//! overflow.

mod config;
mod run;

use clap::{Args, Parser, Subcommand};
use config::{load_config_file, parse_config, Form, Mode, Overrides};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "saltns", version, about = "Spectral Galerkin solver and verification harness for stochastically transported Navier-Stokes on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the truncated velocity or vorticity dynamics
    Simulate(CommonArgs),
    /// Run the operator identity suite and write a report
    Verify(CommonArgs),
    /// Sweep the fitted-constant inequality probes
    Probe(CommonArgs),
    /// Deterministic Taylor-Green decay benchmark
    TaylorGreen(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Spatial dimension
    #[arg(long = "N", value_parser = clap::value_parser!(usize))]
    n_dim: Option<usize>,
    /// Spectral cutoff
    #[arg(long = "K")]
    cutoff: Option<i64>,
    /// Galerkin rank (0 = full basis at the cutoff)
    #[arg(long = "n")]
    rank: Option<usize>,
    /// Viscosity
    #[arg(long)]
    nu: Option<f64>,
    /// Equation form: velocity-ito | velocity-strat | vorticity-ito
    #[arg(long, value_parser = Form::parse)]
    form: Option<Form>,
    /// Number of noise correlations
    #[arg(long = "M")]
    noise_count: Option<usize>,
    /// Correlation amplitude decay exponent
    #[arg(long)]
    gamma: Option<f64>,
    /// Correlation field band
    #[arg(long = "K-xi")]
    noise_cutoff: Option<i64>,
    /// Time step
    #[arg(long)]
    dt: Option<f64>,
    /// Integration horizon
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Blow-up functional stop threshold
    #[arg(long = "blowup-threshold")]
    blowup_threshold: Option<f64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Steps between snapshots (simulate)
    #[arg(long = "snapshot-stride")]
    snapshot_stride: Option<usize>,
    /// Fan out this many consecutive seeds across workers (simulate);
    /// SALT_THREADS caps the worker count
    #[arg(long)]
    ensemble: Option<usize>,
    /// Restart from a field snapshot (simulate)
    #[arg(long = "initial-snapshot")]
    initial_snapshot: Option<PathBuf>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            n_dim: self.n_dim,
            cutoff: self.cutoff,
            rank: self.rank,
            nu: self.nu,
            form: self.form,
            noise_count: self.noise_count,
            gamma: self.gamma,
            noise_cutoff: self.noise_cutoff,
            dt: self.dt,
            t_end: self.t_end,
            blowup_threshold: self.blowup_threshold,
            seed: self.seed,
            out: self.out.clone(),
            snapshot_stride: self.snapshot_stride,
            ensemble: self.ensemble,
            initial_snapshot: self.initial_snapshot.clone(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match &cli.command {
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::Verify(a) => (Mode::Verify, a),
        Command::Probe(a) => (Mode::Probe, a),
        Command::TaylorGreen(a) => (Mode::TaylorGreen, a),
    };

    let file = match &args.config {
        Some(path) => match load_config_file(path) {
            Ok(f) => Some(f),
            Err(err) => {
                eprintln!("config error: {err:#}");
                return ExitCode::from(run::EXIT_CONFIG as u8);
            }
        },
        None => None,
    };
    let config = match parse_config(mode, file, args.overrides()) {
        Ok(c) => c,
        Err(err) => {
            eprintln!("config error: {err:#}");
            return ExitCode::from(run::EXIT_CONFIG as u8);
        }
    };

    match run::execute(&config) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(run::exit_code_for_error(&err) as u8)
        }
    }
}
