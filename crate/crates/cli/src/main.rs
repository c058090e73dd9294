//! `aiou`: command-line front end for Attention-IoU bias analysis.
//!
//! Exit status is 0 on success, 1 when the output was produced but carries
//! analysis-level warnings (printed to standard error), and 2 on input or
//! usage errors.

mod args;
mod config;
mod run;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;
use crate::config::RunConfig;

const THREADS_VAR: &str = "AIOU_THREADS";

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_VAR} must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let cfg = RunConfig::resolve(&cli.command);
    match run::run(&cli.command, &cfg) {
        Ok(warnings) if warnings.0.is_empty() => ExitCode::SUCCESS,
        Ok(warnings) => {
            for w in &warnings.0 {
                eprintln!("warning: {w}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
