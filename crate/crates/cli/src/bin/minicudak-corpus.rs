use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use minicudak::corpus::run_corpus;

/// Run every `.cu` fixture in a directory against its sidecar files.
#[derive(Parser)]
#[command(name = "minicudak-corpus", version)]
struct Args {
    dir: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run_corpus(&args.dir) {
        Ok(summary) => {
            print!("{}", summary.table());
            if summary.failed() == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("minicudak-corpus: {}: {e}", args.dir.display());
            ExitCode::from(2)
        }
    }
}
