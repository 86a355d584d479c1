mod args;
mod commands;
mod config;
mod error;
mod output;

use clap::Parser;

use args::{Cli, Command};
use commands::Timer;
use error::CliError;

fn run(cli: &Cli) -> Result<(), CliError> {
    let timer = Timer::new(cli.record_timing);
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a, &timer),
        Command::Analytic(a) => commands::analytic(a, &timer),
        Command::Verify(v) => {
            if commands::verify(v, &timer)? {
                Ok(())
            } else {
                Err(CliError::numeric("check outside tolerance"))
            }
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("vcorr: {e}");
        if let CliError::Numeric { partial: Some(best), .. } = &e {
            let body = serde_json::json!({ "best_estimate": best });
            println!("{}", serde_json::to_string_pretty(&body).unwrap_or_default());
        }
        std::process::exit(e.exit_code());
    }
}
