use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = imtl_cli::Cli::parse();
    match imtl_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
