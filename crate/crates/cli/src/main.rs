use std::path::PathBuf;
use std::process::ExitCode;

use amg_upscale::experiment::{run, Command, ExperimentConfig};
use amg_upscale::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "amg-upscale", version, about = "Spectral AMG coarse spaces with energy-accurate upscaling")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write A, D, P, P_perp and every modified P~ and A_c with a summary.
    Build(Flags),
    /// One row per (method, nu): eta_s, sparsity, complexity, iterations.
    SweepNu(Flags),
    /// eta_s over the configured contrast list with a shared aggregation.
    SweepEps(Flags),
    /// Two-grid solves with convergence histories.
    Solve(Flags),
    /// Full measurement report as CSV and JSON.
    Report(Flags),
}

#[derive(clap::Args)]
struct Flags {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluate independent sweep points on all cores.
    #[arg(long)]
    parallel: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Invariant(_) | Error::NotSymmetric { .. } | Error::NotPositiveDefinite(_) | Error::NonFinite(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, flags) = match cli.command {
        Cmd::Build(f) => (Command::Build, f),
        Cmd::SweepNu(f) => (Command::SweepNu, f),
        Cmd::SweepEps(f) => (Command::SweepEps, f),
        Cmd::Solve(f) => (Command::Solve, f),
        Cmd::Report(f) => (Command::Report, f),
    };
    let result = ExperimentConfig::load(&flags.config).and_then(|mut cfg| {
        if let Some(seed) = flags.seed {
            cfg.seed = seed;
        }
        if let Some(out) = flags.out {
            cfg.out = out;
        }
        cfg.parallel |= flags.parallel;
        run(cmd, &cfg)
    });
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
