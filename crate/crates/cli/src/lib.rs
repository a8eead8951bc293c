//! Command-line driver: option parsing, one interpreter run, and the files
//! a run leaves next to its input.

pub mod corpus;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, ValueEnum};
use thiserror::Error;

use minicudak_core::diag::PREFIX;
use minicudak_core::frontend::{compile_file, FrontendError};
use minicudak_core::machine::{self, Policy, RunOptions, RunResult, DEFAULT_STEP_LIMIT};
use minicudak_core::runtime_api::{ArchError, ArchParams};

/// Exit status for usage and frontend errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Schedule {
    Random,
    Roundrobin,
}

#[derive(Clone, Debug, Parser)]
#[command(name = "minicudak", version, about = "Interpret a CUDA-C program and check it for races, deadlocks and illegal memory accesses")]
pub struct Cli {
    /// Disable shared-memory race detection.
    #[arg(long)]
    pub no_race_check: bool,
    /// Scheduler seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Schedule::Random)]
    pub schedule: Schedule,
    /// Write barrier and stream events to `<input>.cudak-trace.txt`.
    #[arg(long)]
    pub trace: bool,
    /// Stop after this many transitions.
    #[arg(long, default_value_t = DEFAULT_STEP_LIMIT)]
    pub step_limit: u64,
    /// Architecture parameters, one `key = integer` per line.
    #[arg(long, value_name = "FILE")]
    pub arch: Option<PathBuf>,
    /// Write an `a.out` script that runs the program instead of running it.
    #[arg(long)]
    pub emit_script: bool,
    pub input: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error("cannot read {path}: {source}")]
    ReadArch { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Arch { path: String, source: ArchError },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: io::Error },
}

impl Cli {
    pub fn run_options(&self) -> Result<RunOptions, CliError> {
        let arch = match &self.arch {
            None => ArchParams::default(),
            Some(p) => {
                let path = p.display().to_string();
                let text = fs::read_to_string(p).map_err(|source| CliError::ReadArch {
                    path: path.clone(),
                    source,
                })?;
                ArchParams::parse(&text).map_err(|source| CliError::Arch { path, source })?
            }
        };
        Ok(RunOptions {
            policy: match self.schedule {
                Schedule::Random => Policy::SeededRandom,
                Schedule::Roundrobin => Policy::RoundRobin,
            },
            seed: self.seed,
            race_check: !self.no_race_check,
            step_limit: self.step_limit,
            trace: self.trace,
            audit: false,
            arch,
        })
    }
}

/// What a run shows the user.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Invocation {
    pub stdout: Vec<u8>,
    pub stderr: String,
    pub exit_code: i32,
}

impl Invocation {
    fn failed(e: &CliError) -> Self {
        Invocation {
            stdout: Vec::new(),
            stderr: format!("{PREFIX}{e}\n"),
            exit_code: EXIT_USAGE,
        }
    }
}

/// Compiles and interprets the input without touching the file system
/// beyond reading it.
pub fn execute(cli: &Cli) -> Result<RunResult, CliError> {
    let options = cli.run_options()?;
    let path = cli.input.to_string_lossy();
    let program = compile_file(&path)?;
    Ok(machine::run(Arc::new(program), options))
}

pub fn invocation(result: &RunResult) -> Invocation {
    Invocation {
        stdout: result.output.clone(),
        stderr: result.stderr(),
        exit_code: result.exit_code,
    }
}

pub fn trace_path(input: &Path) -> PathBuf {
    sibling(input, ".cudak-trace.txt")
}

pub fn report_path(input: &Path) -> PathBuf {
    sibling(input, ".cudak-report.txt")
}

fn sibling(input: &Path, suffix: &str) -> PathBuf {
    let mut name = input.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// The whole command: run, then write the trace and stuck-state report.
pub fn main_with(cli: &Cli) -> Invocation {
    if cli.emit_script {
        return match emit_script(cli) {
            Ok(()) => Invocation::default(),
            Err(e) => Invocation::failed(&e),
        };
    }
    let result = match execute(cli) {
        Ok(r) => r,
        Err(e) => return Invocation::failed(&e),
    };
    let mut inv = invocation(&result);
    let mut artifacts = Vec::new();
    if cli.trace {
        let mut body = result.trace.join("\n");
        body.push('\n');
        artifacts.push((trace_path(&cli.input), body));
    }
    if let Some(report) = &result.report {
        artifacts.push((report_path(&cli.input), report.clone()));
    }
    for (path, body) in artifacts {
        if let Err(e) = write(&path, &body) {
            inv.stderr.push_str(&format!("{PREFIX}{e}\n"));
        }
    }
    inv
}

/// Writes `a.out` in the working directory, a script that interprets
/// the input with the same options.
fn emit_script(cli: &Cli) -> Result<(), CliError> {
    cli.run_options()?;
    compile_file(&cli.input.to_string_lossy())?;
    let input = fs::canonicalize(&cli.input).unwrap_or_else(|_| cli.input.clone());
    let mut args = Vec::new();
    if cli.no_race_check {
        args.push("--no-race-check".to_string());
    }
    args.push(format!("--seed {}", cli.seed));
    if cli.schedule == Schedule::Roundrobin {
        args.push("--schedule roundrobin".to_string());
    }
    if cli.trace {
        args.push("--trace".to_string());
    }
    args.push(format!("--step-limit {}", cli.step_limit));
    if let Some(a) = &cli.arch {
        let a = fs::canonicalize(a).unwrap_or_else(|_| a.clone());
        args.push(format!("--arch '{}'", a.display()));
    }
    let exe = std::env::current_exe().map_or_else(|_| "minicudak".to_string(), |p| p.display().to_string());
    let script = format!(
        "#!/bin/sh\nexec '{exe}' {} '{}'\n",
        args.join(" "),
        input.display()
    );
    let path = Path::new("a.out");
    write(path, &script)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let _ = fs::set_permissions(path, fs::Permissions::from_mode(0o755));
    }
    Ok(())
}
