use std::process::ExitCode;

use clap::Parser;
use spellcap::cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spellcap: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
