pub mod bench;
pub mod cli;
pub mod commands;
pub mod error;
pub mod ingest;
pub mod report;

use std::ffi::OsString;
use std::time::Instant;

use clap::Parser;

pub use cli::Cli;
pub use error::{CliError, ErrorKind};
pub use ingest::{ingest_csv, DatasetSpec};
pub use report::RunReport;

/// What a run prints and how it exits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn failure(err: &CliError) -> Output {
    Output {
        code: err.exit_code(),
        stdout: String::new(),
        stderr: format!("{}\n", err.to_json()),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion) {
                return Output {
                    code: 0,
                    stdout: e.render().to_string(),
                    stderr: String::new(),
                };
            }
            return failure(&CliError::argument(e.render().to_string().trim_end()));
        }
    };
    run_cli(&cli)
}

pub fn run_cli(cli: &Cli) -> Output {
    let start = Instant::now();
    let outcome = match commands::execute(cli) {
        Ok(o) => o,
        Err(e) => return failure(&e),
    };
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let workers = match &cli.command {
        cli::Command::Bench { threads, .. } => threads.iter().copied().max().unwrap_or(1),
        _ => cli.partitions,
    };
    let report = commands::report(cli, outcome, elapsed, workers);
    let stdout = if cli.json {
        let mut s = serde_json::to_string_pretty(&report.to_json()).expect("serializable report");
        s.push('\n');
        s
    } else if report.command == "bench" {
        bench::text_table(&report.result)
    } else {
        report.to_text()
    };
    Output {
        code: if report.converged { 0 } else { 2 },
        stdout,
        stderr: String::new(),
    }
}
