use std::process::ExitCode;

use clap::Parser;
use curvlab::report::{to_json, to_text};
use curvlab::{run, Cli, CliError, Format, RunConfig};

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("curvlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    let cfg = RunConfig::from_cli(cli)?;
    let reports = run(&cfg)?;
    let body = match cfg.format {
        Format::Json => to_json(&reports)?,
        Format::Text => to_text(&reports),
    };
    match &cfg.out {
        Some(path) => std::fs::write(path, body)?,
        None => print!("{body}"),
    }
    Ok(reports.iter().all(|r| r.passed()))
}
