//! `quadsum`: exact decompositions of column-finite operators into sums of
//! quadratic operators, with stratification tables, verification reports,
//! and impossibility oracles.
//!
//! Exit codes: 0 all checks pass, 1 a check failed or the construction
//! refused, 2 usage or input errors, 3 internal invariant violations.

mod artifacts;
mod commands;
mod spec_io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "quadsum",
    version,
    about = "Exact sums of quadratic operators on the countable coordinate space"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and validate a stratification of an operator's module structure.
    Stratify {
        /// Operator spec JSON file.
        #[arg(long)]
        input: PathBuf,
        /// Verification window (columns checked exactly).
        #[arg(long, default_value_t = 64)]
        window: usize,
        /// heuristic | certified
        #[arg(long, default_value = "heuristic")]
        mode: String,
        /// Output path (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Pretty-print the JSON artifact.
        #[arg(long)]
        pretty: bool,
    },
    /// Decompose an operator into 2 or 4 quadratic summands.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        /// Preset (squarezero, idempotents, squarezero-preset-2,
        /// idempotents-preset-2) or a JSON list of monic coefficient
        /// triples like [["1","0","0"],["1","-1","0"]].
        #[arg(long)]
        polys: String,
        #[arg(long, default_value_t = 64)]
        window: usize,
        #[arg(long, default_value = "heuristic")]
        mode: String,
        /// Recorded in the artifact for reproducibility.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        pretty: bool,
    },
    /// Re-check a decomposition file against its operator.
    Verify {
        #[arg(long)]
        input: PathBuf,
        /// dec.json produced by `decompose`.
        #[arg(long)]
        decomposition: PathBuf,
        /// Window override (defaults to the file's window).
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        pretty: bool,
    },
    /// Brute-force finite-dimensional oracles behind the impossibility
    /// certificates.
    Oracle {
        /// 3squarezero | 3idem
        #[arg(long)]
        prop: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Trials for the randomized square-zero oracle.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Q or Fp:<p>; defaults to $QUADSUM_FIELD, then Q.
        #[arg(long)]
        field: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        pretty: bool,
    },
    /// Run the canned examples end to end and print pass/fail lines.
    Demo,
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Stratify {
            input,
            window,
            mode,
            out,
            pretty,
        } => commands::stratify(&input, window, &mode, &out, pretty),
        Command::Decompose {
            input,
            polys,
            window,
            mode,
            seed,
            out,
            pretty,
        } => commands::decompose(&input, &polys, window, &mode, seed, &out, pretty),
        Command::Verify {
            input,
            decomposition,
            window,
            out,
            pretty,
        } => commands::verify(&input, &decomposition, window, &out, pretty),
        Command::Oracle {
            prop,
            dim,
            trials,
            field,
            seed,
            out,
            pretty,
        } => commands::oracle(&prop, dim, trials, &field, seed, &out, pretty),
        Command::Demo => commands::demo(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(move || run(cli)) {
        Ok(Ok(code)) => ExitCode::from(code as u8),
        Ok(Err(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            eprintln!("internal invariant violation: {message}");
            ExitCode::from(3)
        }
    }
}
