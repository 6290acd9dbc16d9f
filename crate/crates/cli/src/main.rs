mod args;
mod commands;
mod error;
mod output;

use std::fs;
use std::io::{self, Write};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Outcome;
use error::{exit, CliError};

fn run(cli: &Cli) -> Result<(), CliError> {
    let Outcome {
        table,
        notes,
        failure,
    } = match &cli.command {
        Command::Measures(a) => commands::measures(a)?,
        Command::Curve(a) => commands::curve(a)?,
        Command::Fit(a) => commands::fit_csv(a)?,
        Command::Simulate(a) => commands::simulate(a)?,
        Command::Verify(a) => commands::verify(a)?,
    };
    for note in notes {
        eprintln!("{note}");
    }
    let text = table.render(cli.format);
    match &cli.output {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?,
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io(format!("cannot write to standard output: {e}")))?,
    }
    failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let first = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("error: {first}");
            return ExitCode::from(exit::USAGE);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
