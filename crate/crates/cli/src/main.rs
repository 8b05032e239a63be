//! `fredet`: Fredholm determinants of discretized integral operators.

mod commands;
mod config;
mod error;
mod examples;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{cmd_converge, cmd_det, cmd_eigs, cmd_identity, finish_identity, IdentityConfig, RouteArg};
use crate::config::{Format, RunArgs, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::emit;

#[derive(Debug, Parser)]
#[command(
    name = "fredet",
    version,
    about = "Modified Fredholm determinants of integral operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate det_p(I + sign z K_N) at points or on a grid.
    Det {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = RouteArg::Lu)]
        route: RouteArg,
    },
    /// Error against an analytic reference over an N sweep, with fitted slopes.
    Converge {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Locate eigenvalues as reciprocal zeros of the determinant in a disc.
    Eigs {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Check the squared-operator determinant identities.
    Identity(IdentityArgs),
    /// Reproduce one of the four worked examples into a directory.
    Example {
        /// 1 green, 2 bernoulli, 3 sign, 4 abs_pow.
        id: u8,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct IdentityArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Det { run, route } => {
            let cfg = RunConfig::from_args(&run)?;
            let (t, s) = cmd_det(&cfg, route)?;
            emit(&t, &s, cfg.format.unwrap_or(Format::Csv), cfg.out.as_deref())
        }
        Command::Converge { run } => {
            let cfg = RunConfig::from_args(&run)?;
            let (t, s) = cmd_converge(&cfg)?;
            for (k, v) in &s.slopes {
                eprintln!("slope {k}: {v}");
            }
            emit(&t, &s, cfg.format.unwrap_or(Format::Csv), cfg.out.as_deref())
        }
        Command::Eigs { run } => {
            let cfg = RunConfig::from_args(&run)?;
            let (t, s) = cmd_eigs(&cfg)?;
            emit(&t, &s, cfg.format.unwrap_or(Format::Json), cfg.out.as_deref())
        }
        Command::Identity(a) => {
            let ic = IdentityConfig {
                trials: a.trials,
                n: a.n,
                seed: a.seed,
            };
            let (t, s) = cmd_identity(&ic)?;
            finish_identity(&t, &s, a.format.unwrap_or(Format::Csv), a.out.as_deref())
        }
        Command::Example { id, out } => {
            let dir = out.unwrap_or_else(|| PathBuf::from(format!("example{id}")));
            let summary = examples::cmd_example(id, &dir)?;
            let text = serde_json::to_string_pretty(&summary.to_json(None)).expect("summary serializes");
            println!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Numeric { source, .. } = &e {
                let mut cause = std::error::Error::source(source);
                while let Some(c) = cause {
                    eprintln!("  caused by: {c}");
                    cause = c.source();
                }
            }
            e.exit_code()
        }
    }
}
