//! `paradis`: decision procedures for parallel distinguishability of quantum
//! operations, with JSON matrices in and JSON reports (or CSV scans) out.
//!
//! Exit status: 0 decided, 2 indeterminate or at a boundary, 64 usage,
//! 65 unreadable input, 70 size cap exceeded.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::io::{Failure, RunReport, EXIT_DECIDED, EXIT_INDETERMINATE, EXIT_USAGE};

const SEED_VAR: &str = "PARADIS_SEED";

#[derive(Parser, Debug)]
#[command(name = "paradis", version, about = "Parallel distinguishability of quantum operations")]
pub struct Cli {
    /// Read angles as multiples of π.
    #[arg(long, global = true)]
    pub pi_units: bool,

    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true, value_name = "K", value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: Option<u16>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Field angle Θ(A) and the minimal copy count for span{A}.
    FieldAngle {
        #[arg(long, value_name = "FILE")]
        matrix: PathBuf,
        /// Angles below this count as zero.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Witness density operator for span{A} at N copies.
    Onedim {
        #[arg(long, value_name = "FILE")]
        matrix: PathBuf,
        /// Defaults to the optimal copy count.
        #[arg(long, value_name = "N")]
        copies: Option<usize>,
    },
    /// Witness or positive definite certificate for a Hermitian-closed space.
    Hermitian(Generators),
    /// Feasibility of S^{⊗n} for n = 1..=N, stopping at the first witness.
    Check {
        #[command(flatten)]
        generators: Generators,
        #[arg(long, value_name = "N")]
        max_copies: usize,
        /// Also write the witness found, if any.
        #[arg(long, value_name = "FILE")]
        witness_out: Option<PathBuf>,
    },
    /// Channel pair E, F with span{E_j†F_k} equal to the given space.
    Synthesize {
        #[command(flatten)]
        generators: Generators,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Runs the parallel discrimination scheme on a synthesized pair.
    Simulate {
        #[arg(long, value_name = "DIR")]
        pair: PathBuf,
        #[arg(long, value_name = "N")]
        copies: usize,
        /// Input witness; computed when absent.
        #[arg(long, value_name = "FILE")]
        witness: Option<PathBuf>,
    },
    /// The diagonal family S_α.
    #[command(subcommand)]
    Salpha(Salpha),
}

#[derive(Args, Debug)]
pub struct Generators {
    /// Matrix files, each holding one matrix or an array of them.
    #[arg(long, value_name = "FILE", num_args = 1.., required = true)]
    pub generators: Vec<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Salpha {
    /// Nonnegative solution of the reduced system at one α.
    Solve {
        #[arg(long, value_name = "N")]
        n: usize,
        #[arg(long, value_name = "A", allow_negative_numbers = true)]
        alpha: f64,
    },
    /// Feasibility profile over [π/2, π] and the refined threshold.
    Scan {
        #[arg(long, value_name = "N")]
        n: usize,
        /// Grid step in radians (or multiples of π with --pi-units).
        #[arg(long, default_value_t = 1e-3)]
        grid: f64,
        #[arg(long, default_value_t = 1e-6)]
        refine_tol: f64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Checks the closed-form three- and four-copy solutions.
    Verify {
        #[arg(long, value_name = "N", value_parser = clap::value_parser!(u8).range(3..=4))]
        n: u8,
        #[arg(long, value_name = "A", allow_negative_numbers = true)]
        alpha: f64,
    },
    /// No diagonal witness at α = π/2 for any copy count up to N.
    Counterexample {
        #[arg(long, value_name = "N")]
        max_n: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

fn seed() -> Result<u64, Failure> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{SEED_VAR} must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(paradis::FeasibilityOptions::default().seed),
    }
}

fn run(cli: Cli, argv: Vec<String>) -> Result<u8, Failure> {
    let seed = seed()?;
    let start = Instant::now();
    let output = match cli.jobs {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k as usize)
            .build()
            .map_err(|e| Failure::Usage(e.to_string()))?
            .install(|| commands::dispatch(&cli, seed)),
        None => commands::dispatch(&cli, seed),
    }?;
    let code = if output.indeterminate {
        EXIT_INDETERMINATE
    } else {
        EXIT_DECIDED
    };
    if let Some(csv) = output.csv {
        print!("{csv}");
        return Ok(code);
    }
    let report = RunReport {
        command: argv,
        inputs_digest: output.digest,
        outcome: output.outcome,
        residuals: output.residuals,
        wall_time_s: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION"),
        seed,
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    Ok(code)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_DECIDED });
        }
    };
    match run(cli, argv.into_iter().skip(1).collect()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
