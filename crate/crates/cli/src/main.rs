// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

//! `fas`: key generation, enrolment, single authentications, scenario
//! simulation, rate sweeps and known-answer self-checks.
//!
//! Machine-readable JSON goes to stdout on every exit path; a short
//! human-readable summary goes to stderr. Exit codes: 0 success, 1 denied
//! authentication, 2 configuration or parameter error, 3 internal invariant
//! violation.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "fas", version, about = "Frictionless authentication toolkit")]
pub struct Cli {
    /// More detail on stderr; repeat for per-trial lines.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    /// No summary on stderr.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Trusted-dealer threshold key generation.
    Keygen {
        #[arg(long, default_value = "sim-q32")]
        group: String,
        #[arg(long, default_value_t = 1)]
        t: u32,
        #[arg(long, default_value_t = 3)]
        n: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Enrols one user and shows what each party stores.
    Enroll {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Runs one authentication; exits 1 when access is denied.
    Auth {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Behavioural score of each dumb device, in index order.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        scores: Option<Vec<f64>>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Runs a scenario file and prints its report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Report file; a directory when `--transcript` is given.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write `transcript.jsonl` next to `report.json`.
        #[arg(long, requires = "output")]
        transcript: bool,
        /// Run trials on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// FRR and FAR across a sweep of template noise levels.
    Rates {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "0,0.02,0.05,0.1,0.2")]
        sweep: Vec<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
    /// Runs the built-in known-answer checks.
    VerifyKat {
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Scenario flags shared by `enroll` and `auth`. `--config` supplies a
/// base scenario; explicit flags override it.
#[derive(Args, Debug, Clone)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// 1, 2 or 3.
    #[arg(long)]
    pub case: Option<u8>,
    #[arg(long)]
    pub t: Option<u32>,
    #[arg(long)]
    pub n: Option<u32>,
    /// The PD keeps share 1 of the threshold key (cases 2 and 3).
    #[arg(long)]
    pub pd_share: bool,
    /// Repetition factor of the case 3 code.
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    /// local, cloud-plain or cloud-encrypted.
    #[arg(long)]
    pub scoring: Option<String>,
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn emit(value: &serde_json::Value) {
    let mut out = std::io::stdout().lock();
    let text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    // a closed stdout leaves nothing to report to
    let _ = writeln!(out, "{text}");
}

fn error_json(e: &CliError) -> serde_json::Value {
    json!({
        "error": {
            "kind": e.kind,
            "path": e.path,
            "message": e.message,
        },
        "exit_code": e.code,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            eprint!("{}", e.render());
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    emit(&json!({ "help": e.to_string() }));
                    ExitCode::SUCCESS
                }
                _ => {
                    let first = e.to_string().lines().next().unwrap_or_default().to_string();
                    let err = CliError::usage(first.trim_start_matches("error: ").to_string());
                    emit(&error_json(&err));
                    ExitCode::from(err.code)
                }
            };
        }
    };
    let verbose = cli.verbose;
    let quiet = cli.quiet;
    let result = std::panic::catch_unwind(move || commands::run(cli.command, verbose))
        .unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            Err(CliError::internal(message))
        });
    match result {
        Ok(outcome) => {
            emit(&outcome.json);
            if !quiet {
                eprintln!("{}", outcome.summary);
            }
            ExitCode::from(outcome.exit)
        }
        Err(err) => {
            emit(&error_json(&err));
            if !quiet {
                eprintln!("error: {}", err);
            }
            ExitCode::from(err.code)
        }
    }
}
