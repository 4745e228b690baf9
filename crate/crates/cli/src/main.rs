//! `chainvar` command-line tool.

mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Ctx;

pub enum Failure {
    /// Bad flags or flag combinations; exit code 1.
    Usage(String),
    /// Unreadable or inconsistent inputs, or a failed computation; exit code 2.
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

fn run(argv: Vec<String>) -> Result<(), Failure> {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let msg = e.render().to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            return Err(Failure::Usage(first.to_string()));
        }
    };
    let ctx = Ctx { argv: &argv[1..], command: &cli.command };
    match &cli.command {
        Command::Generate(a) => commands::generate(&ctx, a)?,
        Command::Exact(a) => commands::exact(&ctx, a)?,
        Command::Fit(a) => {
            commands::validate_fit(a)?;
            commands::fit(&ctx, a)?
        }
        Command::Benchmark(a) => commands::benchmark(&ctx, a)?,
        Command::Plot(a) => commands::plot(&ctx, a)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            let mut chain: Vec<String> = Vec::new();
            for c in e.chain().map(|c| c.to_string()) {
                if !chain.last().is_some_and(|l| l.contains(&c)) {
                    chain.push(c);
                }
            }
            eprintln!("error: {}", chain.join(": "));
            ExitCode::from(2)
        }
    }
}
