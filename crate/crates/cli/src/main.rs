//! Command-line front end: stability checks, controller synthesis, robust
//! verification, time-domain simulation, benchmark reproduction, and SDPA
//! export.
//!
//! Exit codes are a stable contract:
//!
//! - 0: success (for `synth`: feasible, exact recovery, verified stable)
//! - 1: `synth` feasible and verified stable, but recovery was inexact
//! - 2: input or precondition error (parse failure, bad dimensions,
//!   rank-deficient output matrix, unknown solver backend)
//! - 3: `check` found an unstable realization
//! - 4: `synth` LMI infeasible
//! - 5: `synth` feasible but sampled verification failed
//! - 6: numerical failure (solver, recovery, or stepping)

mod commands;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fraclmi::Error;

#[derive(Parser)]
#[command(
    name = "fraclmi",
    version,
    about = "Robust output-feedback stabilization of fractional-order systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the eigenvalue argument criterion for the nominal system
    /// and every uncertainty vertex; write spectra and boundary rays.
    Check {
        /// System description JSON file.
        system: std::path::PathBuf,
        /// Override the fractional order of the file.
        #[arg(long)]
        alpha: Option<f64>,
        /// Output directory.
        #[arg(long, default_value = "fraclmi_out")]
        out: std::path::PathBuf,
    },
    /// Synthesize a fixed-order dynamic output feedback controller and
    /// verify it over sampled uncertainties.
    Synth {
        system: std::path::PathBuf,
        /// Controller order n_c.
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[arg(long, default_value = "fraclmi_out")]
        out: std::path::PathBuf,
        /// Print the assembled block structure before solving.
        #[arg(long)]
        explain: bool,
        /// Seed for the random verification samples.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Number of random verification samples (plus all vertices).
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Simulate the closed loop for the nominal system and every vertex.
    Simulate {
        system: std::path::PathBuf,
        /// Controller JSON (bare controller or a synth report).
        controller: std::path::PathBuf,
        /// Initial plant state, comma separated; controller states are
        /// padded with zeros when omitted.
        #[arg(long, default_value = "1,-1,0.5")]
        x0: String,
        /// Step size.
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
        /// Horizon in seconds.
        #[arg(long = "T", default_value_t = 10.0)]
        horizon: f64,
        #[arg(long, default_value = "fraclmi_out")]
        out: std::path::PathBuf,
    },
    /// Regenerate a bundled benchmark example (ex1: order 0.65,
    /// ex2: order 1.25): open-loop spectra, synthesis at orders 0..2,
    /// closed-loop spectra, trajectories, and a summary.
    Repro {
        /// `ex1` or `ex2`.
        example: String,
        #[arg(long, default_value = "fraclmi_out")]
        out: std::path::PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Export the synthesis feasibility program in SDPA sparse format.
    ExportSdpa {
        system: std::path::PathBuf,
        #[arg(long, default_value_t = 1)]
        order: usize,
        /// `auto`, `1`, `2`, or `certain`.
        #[arg(long, default_value = "auto")]
        theorem: String,
        /// Output file (`.dat-s`).
        #[arg(long)]
        out: std::path::PathBuf,
    },
}

fn error_exit_code(e: &Error) -> u8 {
    match e {
        Error::SolverFailure(_) | Error::RecoveryFailure(_) | Error::StepFailure => 6,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { system, alpha, out } => commands::check::run(&system, alpha, &out),
        Command::Synth {
            system,
            order,
            out,
            explain,
            seed,
            samples,
        } => commands::synth::run(&system, order, &out, explain, seed, samples),
        Command::Simulate {
            system,
            controller,
            x0,
            h,
            horizon,
            out,
        } => commands::simulate::run(&system, &controller, &x0, h, horizon, &out),
        Command::Repro { example, out, seed } => commands::repro::run(&example, &out, seed),
        Command::ExportSdpa {
            system,
            order,
            theorem,
            out,
        } => commands::export::run(&system, order, &theorem, &out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e))
        }
    }
}
