mod args;
mod commands;
mod format;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::{Report, EXIT_USAGE};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let outcome = match &cli.command {
        Command::Compile(a) => commands::run_compile(a),
        Command::Query(a) => commands::run_query(a),
        Command::Sensitivity(a) => commands::run_sensitivity(a),
        Command::Tweak(a) => commands::run_tweak(a),
        Command::Stats(a) => commands::run_stats(a),
        Command::Oracle(a) => commands::run_oracle(a),
    };
    match outcome {
        Ok(Report { lines, failure }) => {
            let mut out = std::io::stdout().lock();
            for line in lines {
                let _ = writeln!(out, "{line}");
            }
            match failure {
                None => ExitCode::SUCCESS,
                Some(f) => ExitCode::from(f.code),
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
