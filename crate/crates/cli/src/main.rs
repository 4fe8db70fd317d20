use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = owc_cli::Cli::parse();
    match owc_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
