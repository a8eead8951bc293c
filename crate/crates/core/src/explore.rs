//! Exhaustive interleaving exploration of tiny kernels: the ground truth
//! the per-byte race detector is checked against.
//!
//! Steps that touch only the stepping thread's own state commute with
//! everything else, so they are taken eagerly; the search branches only
//! where a device thread touches memory it does not own or a stream
//! dispatches.

use std::sync::Arc;

use thiserror::Error;

use crate::diag::Category;
use crate::machine::{Configuration, RunOptions, SharedAccess, Transition};
use crate::memory::{AccessKind, ThreadKey};
use crate::program::Program;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_threads: u64,
    pub max_accesses: usize,
    pub max_interleavings: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_threads: 3,
            max_accesses: 8,
            max_interleavings: 1_000_000,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExploreError {
    #[error("a launch of {0} threads exceeds the limit of {1}")]
    TooManyThreads(u64, u64),
    #[error("thread {0:?} made more than {1} shared accesses")]
    TooManyAccesses(ThreadKey, usize),
    #[error("more than {0} interleavings")]
    TooManyInterleavings(u64),
    #[error("step limit exceeded on some interleaving")]
    StepLimit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Race,
    NoRace,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exploration {
    /// Some interleaving has two conflicting accesses in one epoch.
    pub oracle: Verdict,
    /// Some interleaving made the detector report a race.
    pub detector: Verdict,
    pub interleavings: u64,
}

/// Two accesses to a common byte by different threads of one block,
/// between the same pair of barriers, at least one a write.
pub fn conflicting(a: &SharedAccess, b: &SharedAccess) -> bool {
    a.object == b.object
        && a.thread != b.thread
        && a.epoch == b.epoch
        && (a.kind == AccessKind::Write || b.kind == AccessKind::Write)
        && a.offset < b.offset + b.len
        && b.offset < a.offset + a.len
}

pub fn log_has_race(log: &[SharedAccess]) -> bool {
    log.iter()
        .enumerate()
        .any(|(i, a)| log[i + 1..].iter().any(|b| conflicting(a, b)))
}

/// The race verdict over every interleaving.
pub fn oracle_race(program: Arc<Program>, max_interleavings: u64) -> Result<Verdict, ExploreError> {
    let limits = Limits {
        max_interleavings,
        ..Limits::default()
    };
    explore(program, RunOptions::default(), limits).map(|e| e.oracle)
}

/// Runs every interleaving of the program to its end.
pub fn explore(program: Arc<Program>, options: RunOptions, limits: Limits) -> Result<Exploration, ExploreError> {
    let mut root = Configuration::new(program, options);
    root.access_log = Some(Vec::new());
    let mut stack = vec![root];
    let mut result = Exploration {
        oracle: Verdict::NoRace,
        detector: Verdict::NoRace,
        interleavings: 0,
    };
    while let Some(mut cfg) = stack.pop() {
        let successors = loop {
            check_limits(&cfg, &limits)?;
            if cfg.host_fault {
                break Vec::new();
            }
            let enabled = cfg.enabled();
            if enabled.is_empty() {
                break Vec::new();
            }
            if cfg.steps >= cfg.options.step_limit {
                return Err(ExploreError::StepLimit);
            }
            match advance_invisible(&mut cfg, &enabled) {
                Some(branches) => break branches,
                None => continue,
            }
        };
        if successors.is_empty() {
            result.interleavings += 1;
            if result.interleavings > limits.max_interleavings {
                return Err(ExploreError::TooManyInterleavings(limits.max_interleavings));
            }
            let log = cfg.access_log.as_deref().unwrap_or(&[]);
            if log_has_race(log) {
                result.oracle = Verdict::Race;
            }
            if cfg.diagnostics.iter().any(|d| d.category == Category::Race) {
                result.detector = Verdict::Race;
            }
        } else {
            stack.extend(successors.into_iter().rev());
        }
    }
    Ok(result)
}

/// Takes one step that commutes with all others, if there is one, and
/// returns None. Otherwise returns one successor per enabled transition.
fn advance_invisible(cfg: &mut Configuration, enabled: &[Transition]) -> Option<Vec<Configuration>> {
    let mut branches = Vec::with_capacity(enabled.len());
    for &t in enabled {
        match t {
            Transition::Barrier { .. } => {
                cfg.step(t);
                return None;
            }
            Transition::Thread(key) if key.is_host() => {
                cfg.step(t);
                return None;
            }
            Transition::Thread(_) => {
                let mut next = cfg.clone();
                next.step(t);
                if next.shared_steps == cfg.shared_steps {
                    *cfg = next;
                    return None;
                }
                branches.push(next);
            }
            Transition::Stream(_) => {
                let mut next = cfg.clone();
                next.step(t);
                branches.push(next);
            }
        }
    }
    Some(branches)
}

fn check_limits(cfg: &Configuration, limits: &Limits) -> Result<(), ExploreError> {
    for g in cfg.grids.values() {
        let n = u64::from(g.spec.grid_dim) * u64::from(g.spec.block_dim);
        if n > limits.max_threads {
            return Err(ExploreError::TooManyThreads(n, limits.max_threads));
        }
    }
    if let Some(log) = &cfg.access_log {
        if log.len() > limits.max_accesses {
            let mut counts = std::collections::BTreeMap::<ThreadKey, usize>::new();
            for a in log {
                let c = counts.entry(a.thread).or_default();
                *c += 1;
                if *c > limits.max_accesses {
                    return Err(ExploreError::TooManyAccesses(a.thread, limits.max_accesses));
                }
            }
        }
    }
    Ok(())
}
