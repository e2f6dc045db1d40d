use std::process::ExitCode;

use clap::Parser;
use ruas::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli, &mut std::io::stdout().lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
