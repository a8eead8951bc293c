use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use minicudak::{main_with, Cli, EXIT_USAGE};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let inv = main_with(&cli);
    let _ = std::io::stdout().write_all(&inv.stdout);
    let _ = std::io::stdout().flush();
    eprint!("{}", inv.stderr);
    ExitCode::from(inv.exit_code as u8)
}
