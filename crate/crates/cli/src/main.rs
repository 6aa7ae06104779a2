mod args;
mod commands;
mod inputs;
mod report;

use std::fs;
use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Parser;

use args::Cli;
use inputs::Usage;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_status(&err))
        }
    }
}

/// Bad input exits with 2, numerical failures with 1.
fn exit_status(err: &anyhow::Error) -> u8 {
    if err.is::<Usage>() {
        return 2;
    }
    match err.downcast_ref::<lightcone::Error>() {
        Some(
            lightcone::Error::Parse { .. }
            | lightcone::Error::InvalidParameters(_)
            | lightcone::Error::DimensionMismatch { .. }
            | lightcone::Error::Unsupported(_)
            | lightcone::Error::GridTooCoarse { .. }
            | lightcone::Error::NotCompact(_),
        ) => 2,
        _ => 1,
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let start = Instant::now();
    let mut report = commands::run(&cli.command)?;
    if !cli.output.no_meta {
        report.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    let text = report.render(cli.output.format)?;
    match &cli.output.out {
        Some(path) => fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    if !cli.output.quiet {
        let verdict = if report.pass { "pass" } else { "FAIL" };
        eprintln!("{}: {verdict}: {}", report.command, report.summary);
    }
    Ok(report.pass)
}
