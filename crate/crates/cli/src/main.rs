use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = coreview::cli::Cli::parse();
    match coreview::cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
