mod args;
mod commands;
mod config;
mod inputs;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

use args::{Cli, Command};
use commands::Tally;
use config::FileConfig;

fn run(cli: &Cli) -> Result<Tally> {
    let file = match &cli.global.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let g = &cli.global;
    match &cli.command {
        Command::Defend(a) => commands::defend(a, g, &file),
        Command::Simulate(a) => commands::simulate(a, g, &file),
        Command::Evaluate(a) => commands::evaluate(a, g, &file),
        Command::Inspect(a) => commands::inspect(a, g, &file),
        Command::Batch(a) => commands::batch(a, g),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(t) if t.success() => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
