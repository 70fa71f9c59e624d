mod args;
mod commands;
mod error;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, FileConfig, Format};
use error::CliError;

/// Only environment knob: worker threads for sweeps and the acceptance suite.
const THREADS_VAR: &str = "FRACGJMS_THREADS";

fn configure_threads() -> Result<(), CliError> {
    let Ok(text) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_VAR} must be a positive integer, got `{text}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<commands::Failures, CliError> {
    configure_threads()?;
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let format = cli.out.or(file.out).unwrap_or(Format::Csv);
    let target = cli.output.clone().or_else(|| file.output.clone());
    // buffer the table so a failed computation leaves no partial file
    let mut buf = Vec::new();
    let failures = match &cli.command {
        Command::Spectrum(a) => commands::spectrum(a, &file, format, &mut buf)?,
        Command::Sobolev(a) => commands::sobolev(a, &file, format, &mut buf)?,
        Command::Onofri(a) => commands::onofri(a, &file, format, &mut buf)?,
        Command::Defining(a) => commands::defining(a, &file, format, &mut buf)?,
        Command::Continuation(a) => commands::continuation(a, &file, format, &mut buf)?,
        Command::VerifyAll(a) => commands::verify_all(a, &file, format, &mut buf)?,
    };
    match target {
        Some(path) => {
            let mut w = BufWriter::new(File::create(&path)?);
            w.write_all(&buf)?;
            w.flush()?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&buf)?;
            stdout.flush()?;
        }
    }
    Ok(failures)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            eprintln!("{} check(s) failed:", failures.len());
            for f in &failures {
                eprintln!("  {f}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
