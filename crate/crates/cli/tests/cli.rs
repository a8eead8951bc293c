use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_minicudak");
const CORPUS_BIN: &str = env!("CARGO_BIN_EXE_minicudak-corpus");

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn copy_in(dir: &TempDir, name: &str) -> PathBuf {
    let to = dir.path().join(name);
    fs::copy(corpus().join(name), &to).unwrap();
    to
}

fn minicudak(args: &[&str], input: &Path) -> Output {
    Command::new(BIN).args(args).arg(input).output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn clean_run_prints_the_transcript() {
    let out = minicudak(&[], &corpus().join("sum.cu"));
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(text(&out.stdout), fs::read_to_string(corpus().join("sum.stdout")).unwrap());
    assert!(out.stderr.is_empty());
}

#[test]
fn race_report_and_opt_out() {
    let input = corpus().join("sum_race.cu");
    let checked = minicudak(&[], &input);
    assert_eq!(checked.status.code(), Some(1));
    let err = text(&checked.stderr);
    assert!(err.starts_with("cudak: Possible race on shared device memory detected at "), "{err}");
    assert!(err.ends_with("sum_race.cu:17.\n"), "{err}");
    let unchecked = minicudak(&["--no-race-check"], &input);
    assert_eq!(unchecked.status.code(), Some(0));
    assert!(unchecked.stderr.is_empty());
    assert_eq!(unchecked.stdout, checked.stdout);
}

#[test]
fn usage_errors_exit_with_two() {
    let out = Command::new(BIN).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(BIN).args(["--schedule", "fair", "x.cu"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = minicudak(&[], Path::new("/nonexistent/none.cu"));
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).starts_with("cudak: "));
}

#[test]
fn frontend_errors_exit_with_two() {
    let out = minicudak(&[], &corpus().join("parse_error.cu"));
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn trace_file_is_written_next_to_the_input() {
    let dir = TempDir::new().unwrap();
    let input = copy_in(&dir, "sum.cu");
    let out = minicudak(&["--trace", "--schedule", "roundrobin"], &input);
    assert_eq!(out.status.code(), Some(0));
    let trace = fs::read_to_string(dir.path().join("sum.cu.cudak-trace.txt")).unwrap();
    assert!(!trace.is_empty());
    let again = minicudak(&["--trace", "--schedule", "roundrobin"], &input);
    assert_eq!(again.stdout, out.stdout);
    assert_eq!(fs::read_to_string(dir.path().join("sum.cu.cudak-trace.txt")).unwrap(), trace);
}

#[test]
fn deadlock_leaves_a_report() {
    let dir = TempDir::new().unwrap();
    let input = copy_in(&dir, "sum_deadlock.cu");
    let out = minicudak(&[], &input);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(
        text(&out.stderr),
        "cudak: Detected a deadlock caused by misplaced __syncthreads().\n"
    );
    let report = fs::read_to_string(dir.path().join("sum_deadlock.cu.cudak-report.txt")).unwrap();
    assert!(report.contains("memory:"), "{report}");
    assert!(!dir.path().join("sum_deadlock.cu.cudak-trace.txt").exists());
}

#[test]
fn step_limit_exits_with_three() {
    let out = minicudak(&["--step-limit", "50"], &corpus().join("sum.cu"));
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(text(&out.stderr), "cudak: Step limit of 50 exceeded; execution stopped.\n");
}

#[test]
fn emit_script_writes_a_runnable_a_out() {
    let dir = TempDir::new().unwrap();
    let input = copy_in(&dir, "sum.cu");
    let out = Command::new(BIN)
        .current_dir(dir.path())
        .args(["--emit-script", "--seed", "7"])
        .arg(&input)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let script = dir.path().join("a.out");
    let body = fs::read_to_string(&script).unwrap();
    assert!(body.starts_with("#!/bin/sh\n"), "{body}");
    assert!(body.contains("--seed"), "{body}");
    let run = Command::new(&script).current_dir(dir.path()).output().unwrap();
    assert_eq!(run.status.code(), Some(0));
    assert_eq!(text(&run.stdout), fs::read_to_string(corpus().join("sum.stdout")).unwrap());
}

#[test]
fn arch_file_changes_the_launch_limit() {
    let dir = TempDir::new().unwrap();
    let input = copy_in(&dir, "sum.cu");
    let arch = dir.path().join("arch.txt");
    fs::write(&arch, "maxThreadsPerBlock = 4\n").unwrap();
    let out = minicudak(&["--arch", arch.to_str().unwrap()], &input);
    assert_ne!(out.status.code(), Some(0));
    assert!(text(&out.stderr).contains("cudaErrorInvalidConfiguration"), "{}", text(&out.stderr));
    fs::write(&arch, "maxThreadsPerBlock = many\n").unwrap();
    let bad = minicudak(&["--arch", arch.to_str().unwrap()], &input);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn corpus_runner_passes_the_shipped_corpus() {
    let out = Command::new(CORPUS_BIN).arg(corpus()).output().unwrap();
    let table = text(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{table}");
    assert!(table.lines().last().unwrap().ends_with(" passed, 0 failed"), "{table}");
}

#[test]
fn corpus_runner_on_an_empty_directory() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(CORPUS_BIN).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(text(&out.stdout).trim_end(), "0 passed, 0 failed");
}

#[test]
fn corpus_runner_names_failing_fixtures() {
    let dir = TempDir::new().unwrap();
    copy_in(&dir, "sum.cu");
    copy_in(&dir, "sum.stdout");
    fs::write(dir.path().join("sum.exit"), "5\n").unwrap();
    copy_in(&dir, "stream_fifo.cu");
    copy_in(&dir, "stream_fifo.stdout");
    let out = Command::new(CORPUS_BIN).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let table = text(&out.stdout);
    assert!(table.lines().any(|l| l.starts_with("FAIL sum.cu: exit code 0")), "{table}");
    assert!(table.lines().any(|l| l == "PASS stream_fifo.cu"), "{table}");
    assert!(table.ends_with("1 passed, 1 failed\n"), "{table}");
}
