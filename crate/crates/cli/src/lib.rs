//! Command-line front end: argument handling, configuration and output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;

use clap::{CommandFactory, Parser};
use wba_core::PrecisionConfig;

use config::{read_config_file, Cli, RunConfig};
use error::{CliError, CliResult};

fn execute(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::config("--jobs must be positive"));
        }
        // Fails only if a pool already exists, which leaves the old one in place.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let (kind, flags) = cli.command.split();
    let opts = match &cli.config {
        Some(path) => flags.or(read_config_file(path)?),
        None => flags,
    };
    let precision = PrecisionConfig::from_env().map_err(|e| CliError::config(e.to_string()))?;
    let cfg = RunConfig::resolve(kind, opts, precision).map_err(|e| match e {
        CliError::Config { message, .. } => {
            let mut cmd = Cli::command();
            cmd.build();
            let usage = cmd
                .find_subcommand_mut(kind.name())
                .map(|c| c.render_usage().to_string());
            CliError::Config { message, usage }
        }
        other => other,
    })?;
    log::info!("running {}", kind.name());
    let report = commands::run(&cfg)?;
    output::emit(&report, &cfg)
}

/// Runs the command line `argv` and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Config { usage: Some(u), .. } = &e {
                eprintln!("\n{u}");
            }
            e.exit_code()
        }
    }
}
