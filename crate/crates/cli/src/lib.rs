//! Library side of the `tae` command: flag and config handling, reports,
//! synthetic corpora and the subcommands themselves.
//!
//! Exit codes: 0 on success, 1 when input or configuration is invalid, 2
//! when the run itself fails (endpoints, I/O while writing).

pub mod args;
pub mod commands;
pub mod report;
pub mod synth;

use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use args::{Cli, Command, RunConfig};

/// Bad input or configuration; maps to exit code 1.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct ValidationError(pub String);

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(ValidationError(msg.into()))
}

pub fn is_validation(err: &anyhow::Error) -> bool {
    err.chain().any(|e| e.is::<ValidationError>())
}

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_env("TAE_LOG")
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

pub fn dispatch(cli: &Cli) -> anyhow::Result<()> {
    let config = RunConfig::resolve(&cli.command, &cli.run)?;
    match &cli.command {
        Command::Extract(a) => commands::cmd_extract(&config, a),
        Command::Score => commands::cmd_score(&config),
        Command::Generate(a) => commands::cmd_generate(&config, a),
        Command::Bench(a) => commands::cmd_bench(&config, a),
        Command::Correlate(a) => commands::cmd_correlate(&config, a),
        Command::Agreement(a) => commands::cmd_agreement(&config, &a.annotations),
        Command::Synth(a) => commands::cmd_synth(&config, a),
    }
}

/// Parse `argv`, run, and turn the outcome into an exit code.
pub fn run<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    init_logging(cli.verbose);
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if is_validation(&err) {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::from(EXIT_RUNTIME)
            }
        }
    }
}
