use std::io::Write;
use std::process::ExitCode;

use chaoscum_cli::{exit_code, run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = run(cli, &mut out);
    let _ = out.flush();
    if let Err(e) = &result {
        eprintln!("chaoscum: {e}");
    }
    ExitCode::from(exit_code(&result) as u8)
}
