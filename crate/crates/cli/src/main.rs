use std::process::ExitCode;

use clap::Parser;
use geolog_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("geolog: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
