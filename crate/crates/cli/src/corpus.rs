//! Runs a directory of `.cu` fixtures against their sidecar expectations.
//!
//! For `name.cu`: `name.stdout` holds the exact expected stdout,
//! `name.stderr` one anchored regex per expected stderr line, `name.exit`
//! the expected exit code (default 0) and `name.args` extra options.
//! Missing `.stdout`/`.stderr` sidecars are not checked.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::Parser;
use rayon::prelude::*;
use regex::Regex;

use crate::{execute, invocation, Cli, Invocation, EXIT_USAGE};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixtureOutcome {
    pub name: String,
    /// Empty when the fixture passed.
    pub failures: Vec<String>,
}

impl FixtureOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Summary {
    pub outcomes: Vec<FixtureOutcome>,
}

impl Summary {
    pub fn failed(&self) -> usize {
        self.outcomes.iter().filter(|o| !o.passed()).count()
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        for o in &self.outcomes {
            if o.passed() {
                out.push_str(&format!("PASS {}\n", o.name));
            } else {
                out.push_str(&format!("FAIL {}: {}\n", o.name, o.failures.join("; ")));
            }
        }
        out.push_str(&format!(
            "{} passed, {} failed\n",
            self.outcomes.len() - self.failed(),
            self.failed()
        ));
        out
    }
}

pub fn fixtures(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut found: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "cu"))
        .collect();
    found.sort();
    Ok(found)
}

fn sidecar(fixture: &Path, ext: &str) -> io::Result<Option<String>> {
    match fs::read_to_string(fixture.with_extension(ext)) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e),
    }
}

/// Runs one fixture in-process with its options.
pub fn run_fixture(fixture: &Path) -> io::Result<Invocation> {
    let extra = sidecar(fixture, "args")?.unwrap_or_default();
    let argv = std::iter::once("minicudak".to_string())
        .chain(extra.split_whitespace().map(str::to_string))
        .chain(std::iter::once(fixture.display().to_string()));
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            return Ok(Invocation {
                stdout: Vec::new(),
                stderr: e.to_string(),
                exit_code: EXIT_USAGE,
            })
        }
    };
    Ok(match execute(&cli) {
        Ok(r) => invocation(&r),
        Err(e) => Invocation {
            stdout: Vec::new(),
            stderr: format!("{}{e}\n", minicudak_core::diag::PREFIX),
            exit_code: EXIT_USAGE,
        },
    })
}

pub fn check_fixture(fixture: &Path) -> FixtureOutcome {
    let name = fixture
        .file_name()
        .map_or_else(|| fixture.display().to_string(), |n| n.to_string_lossy().into_owned());
    let failures = match compare(fixture) {
        Ok(f) => f,
        Err(e) => vec![format!("cannot read fixture: {e}")],
    };
    FixtureOutcome { name, failures }
}

fn compare(fixture: &Path) -> io::Result<Vec<String>> {
    let inv = run_fixture(fixture)?;
    let mut failures = Vec::new();
    let expected_exit = match sidecar(fixture, "exit")? {
        None => 0,
        Some(s) => match s.trim().parse::<i32>() {
            Ok(v) => v,
            Err(_) => return Ok(vec![format!("bad .exit sidecar `{}`", s.trim())]),
        },
    };
    if inv.exit_code != expected_exit {
        failures.push(format!("exit code {} (expected {expected_exit})", inv.exit_code));
    }
    if let Some(want) = sidecar(fixture, "stdout")? {
        if inv.stdout != want.as_bytes() {
            failures.push(format!(
                "stdout differs: got {:?}",
                String::from_utf8_lossy(&inv.stdout)
            ));
        }
    }
    if let Some(patterns) = sidecar(fixture, "stderr")? {
        let got: Vec<&str> = inv.stderr.lines().collect();
        let want: Vec<&str> = patterns.lines().collect();
        if got.len() != want.len() {
            failures.push(format!("{} stderr lines (expected {}): {:?}", got.len(), want.len(), got));
        } else {
            for (line, pat) in got.iter().zip(&want) {
                match Regex::new(&format!("^(?:{pat})$")) {
                    Ok(re) if re.is_match(line) => {}
                    Ok(_) => failures.push(format!("stderr line {line:?} does not match /{pat}/")),
                    Err(e) => failures.push(format!("bad stderr pattern /{pat}/: {e}")),
                }
            }
        }
    }
    Ok(failures)
}

/// Runs every fixture of a directory; independent fixtures run in parallel.
pub fn run_corpus(dir: &Path) -> io::Result<Summary> {
    let outcomes = fixtures(dir)?.par_iter().map(|f| check_fixture(f)).collect();
    Ok(Summary { outcomes })
}
