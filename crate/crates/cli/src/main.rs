#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use lis_core::{Error, Result};
use serde_json::json;

use args::{Cli, Command};
use commands::Context;
use config::{pick, FileConfig};

/// Exit status for a library error: 2 invalid input, 3 numerical, 4 I/O.
fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::InvalidInput(_) => 2,
        Error::BudgetExceeded { .. } | Error::Numerical(_) => 3,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => 4,
        Error::Trial { .. } => unreachable!("root() unwraps trial errors"),
    }
}

fn kind(e: &Error) -> &'static str {
    match e.root() {
        Error::InvalidInput(_) => "invalid_input",
        Error::BudgetExceeded { .. } => "budget_exceeded",
        Error::Numerical(_) => "numerical",
        Error::Io(_) => "io",
        Error::Csv(_) => "csv",
        Error::Json(_) => "json",
        Error::Trial { .. } => unreachable!(),
    }
}

fn report(kind: &str, code: u8, message: String, trial: Option<u64>) -> ExitCode {
    let record = json!({
        "error": {"kind": kind, "exit_code": code, "message": message, "trial": trial}
    });
    eprintln!("{record}");
    ExitCode::from(code)
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    if let Some(n) = cli.threads.or(file.threads) {
        if n == 0 {
            return Err(Error::InvalidInput("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    let ctx = Context {
        out_dir: pick(cli.out_dir.clone(), file.out_dir.clone(), PathBuf::from("lis-out")),
        bits: cli.bits || file.bits.unwrap_or(false),
        file,
    };
    match &cli.command {
        Command::SincAudit(a) => commands::sinc_audit(&ctx, a),
        Command::Gram(a) => commands::gram(&ctx, a),
        Command::Capacity1d(a) => commands::capacity_1d(&ctx, a),
        Command::Capacity2d(a) => commands::capacity_2d_cmd(&ctx, a),
        Command::Dims(a) => commands::dims(&ctx, a),
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Preset(a) => commands::preset(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                _ => report("usage", 2, e.to_string().trim().to_string(), None),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let trial = match &e {
                Error::Trial { trial, .. } => Some(*trial),
                _ => None,
            };
            report(kind(&e), exit_code(&e), e.to_string(), trial)
        }
    }
}
