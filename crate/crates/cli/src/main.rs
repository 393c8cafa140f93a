use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use quasipower::error::{EXIT_NON_CONVERGENCE, EXIT_OK, EXIT_USAGE};
use quasipower::{run, Cli, CliError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                EXIT_USAGE as u8
            } else {
                EXIT_OK as u8
            });
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let outcome = run(cli)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    match &cli.out {
        Some(path) => std::fs::write(path, &outcome.text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?,
        None => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(outcome.text.as_bytes());
        }
    }
    Ok(if outcome.non_converged {
        EXIT_NON_CONVERGENCE
    } else {
        EXIT_OK
    })
}
