use std::process::ExitCode;

use clap::Parser;
use ivbounds::cli::{cmd_fit, cmd_simulate, render_mc, Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Fit(args) => cmd_fit(args).map(|(_, table)| print!("{table}")),
        Command::Simulate(args) => cmd_simulate(args).map(|r| print!("{}", render_mc(&r))),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
