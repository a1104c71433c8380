//! Command implementations behind the `imtl` binary.

pub mod args;
pub mod commands;
pub mod output;
pub mod rewards;

pub use args::{Cli, Command};
pub use commands::{cmd_curriculum, cmd_report, cmd_train, cmd_transfer};

/// Runs one parsed command, printing its results to stdout.
pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train(a) => {
            let dir = cmd_train(&a)?;
            println!("artifacts: {}", dir.display());
        }
        Command::Transfer(a) => {
            let dir = cmd_transfer(&a)?;
            println!("artifacts: {}", dir.display());
        }
        Command::Curriculum(a) => {
            let dir = cmd_curriculum(&a)?;
            println!("artifacts: {}", dir.display());
        }
        Command::Report(a) => {
            let r = cmd_report(&a)?;
            print!("{}", r.table);
            println!("warnings: {} malformed rows skipped", r.skipped);
            println!("artifacts: {}", r.dir.display());
        }
    }
    Ok(())
}
