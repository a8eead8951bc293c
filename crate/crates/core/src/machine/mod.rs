//! The whole-machine configuration and its small-step driver.

mod exec;
mod printf;

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::deadlock::{self, StuckReport};
use crate::device::Grid;
use crate::diag::{Category, Diagnostic, SourceLoc};
use crate::memory::{AccessKind, Memory, MemSpace, ObjKind, ThreadKey};
use crate::program::{ApiFn, BarrierKind, FuncId, GlobalSpace, LocalId, Program};
use crate::racecheck::RaceState;
use crate::runtime_api::{ArchParams, ErrorCode};
use crate::streams::{Completion, Event, Stream, SyncTarget};
use crate::value::{Location, ObjectId, Value};

pub(crate) use exec::{Kont, Stop};
pub use printf::format_printf;

pub const DEFAULT_STEP_LIMIT: u64 = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    SeededRandom,
    RoundRobin,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub policy: Policy,
    pub seed: u64,
    pub race_check: bool,
    pub step_limit: u64,
    pub trace: bool,
    /// Keep a log of every space check made by dereferences.
    pub audit: bool,
    pub arch: ArchParams,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            policy: Policy::SeededRandom,
            seed: 0,
            race_check: true,
            step_limit: DEFAULT_STEP_LIMIT,
            trace: false,
            audit: false,
            arch: ArchParams::default(),
        }
    }
}

/// One scheduler-visible move of the machine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Transition {
    Thread(ThreadKey),
    Barrier { gid: u32, bid: u32 },
    Stream(u32),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BarrierPhase {
    #[default]
    Idle,
    Waiting {
        token: u8,
        kind: BarrierKind,
        operand: i64,
    },
}

impl BarrierPhase {
    pub fn token(&self) -> Option<u8> {
        match self {
            BarrierPhase::Idle => None,
            BarrierPhase::Waiting { token, .. } => Some(*token),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ThreadStatus {
    #[default]
    Running,
    Finished,
    /// Stopped by an error it could not continue past.
    Halted,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Frame {
    pub func: Option<FuncId>,
    pub slots: Vec<Option<Location>>,
    pub decls: Vec<LocalId>,
}

#[derive(Clone, Debug, Default)]
pub struct ThreadState {
    pub key: ThreadKey,
    pub(crate) k: Vec<Kont>,
    pub(crate) vals: Vec<Value>,
    pub(crate) frames: Vec<Frame>,
    pub barrier: BarrierPhase,
    pub status: ThreadStatus,
    /// Barrier episodes this thread has completed.
    pub epoch: u64,
}

impl ThreadState {
    pub fn is_runnable(&self) -> bool {
        self.status == ThreadStatus::Running && self.barrier == BarrierPhase::Idle
    }

    /// What the host is blocked on, if anything.
    pub fn waiting_on(&self) -> Option<SyncTarget> {
        match self.k.last() {
            Some(Kont::HostWait(t, _)) => Some(*t),
            _ => None,
        }
    }
}

/// A shared-memory access as seen by the exhaustive explorer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedAccess {
    pub thread: ThreadKey,
    pub object: ObjectId,
    pub offset: u64,
    pub len: u64,
    pub kind: AccessKind,
    pub epoch: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ApiRecord {
    pub func: ApiFn,
    pub code: ErrorCode,
}

#[derive(Clone, Debug)]
pub struct Configuration {
    pub program: Arc<Program>,
    pub options: RunOptions,
    pub host: ThreadState,
    pub grids: BTreeMap<u32, Grid>,
    pub next_gid: u32,
    pub streams: BTreeMap<u32, Stream>,
    pub next_sid: u32,
    pub events: BTreeMap<u32, Event>,
    pub next_eid: u32,
    pub memory: Memory,
    pub race: RaceState,
    pub output: Vec<u8>,
    pub diagnostics: Vec<Diagnostic>,
    seen_messages: HashSet<String>,
    pub globals: Vec<Location>,
    pub last_error: ErrorCode,
    pub(crate) error_strings: BTreeMap<i128, Location>,
    pub api_log: Vec<ApiRecord>,
    pub trace: Vec<String>,
    pub completions: Vec<Completion>,
    pub access_log: Option<Vec<SharedAccess>>,
    pub steps: u64,
    /// Device accesses to memory the accessing thread does not own.
    pub shared_steps: u64,
    /// `main`'s return value once the host has finished.
    pub exit: Option<i32>,
    pub host_fault: bool,
    pub(crate) next_item: u64,
    pub(crate) stepping_epoch: u64,
    rng: ChaCha8Rng,
    rr_last: Option<Transition>,
}

/// How a run ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Exited(i32),
    Stuck(Vec<StuckReport>),
    StepLimit,
    HostFault,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub exit_code: i32,
    pub output: Vec<u8>,
    pub diagnostics: Vec<Diagnostic>,
    pub outcome: Outcome,
    pub steps: u64,
    pub trace: Vec<String>,
    pub api_log: Vec<ApiRecord>,
    pub completions: Vec<Completion>,
    /// The final-configuration dump, written for stuck runs.
    pub report: Option<String>,
}

impl RunResult {
    pub fn stdout(&self) -> String {
        String::from_utf8_lossy(&self.output).into_owned()
    }

    pub fn stderr(&self) -> String {
        self.diagnostics.iter().map(|d| d.line() + "\n").collect()
    }

    pub fn has(&self, category: Category) -> bool {
        self.diagnostics.iter().any(|d| d.category == category)
    }
}

/// Exit status: stuck runs outrank runtime errors, which outrank warnings,
/// which outrank `main`'s own value.
pub fn exit_code(diagnostics: &[Diagnostic], main_value: Option<i32>) -> i32 {
    let any = |cats: &[Category]| diagnostics.iter().any(|d| cats.contains(&d.category));
    if any(&[Category::Deadlock, Category::StepLimit]) {
        3
    } else if any(&[Category::MemBoundary, Category::UndefinedBehavior]) {
        4
    } else if !diagnostics.is_empty() {
        1
    } else {
        main_value.unwrap_or(0)
    }
}

/// Interprets a program to completion.
pub fn run(program: Arc<Program>, options: RunOptions) -> RunResult {
    let mut config = Configuration::new(program, options);
    config.run_to_end();
    config.finish()
}

impl Configuration {
    pub fn new(program: Arc<Program>, options: RunOptions) -> Self {
        let memory = if options.audit {
            Memory::with_audit()
        } else {
            Memory::new()
        };
        let mut config = Configuration {
            host: ThreadState::default(),
            grids: BTreeMap::new(),
            next_gid: 1,
            streams: BTreeMap::from([(0, Stream::new(0))]),
            next_sid: 1,
            events: BTreeMap::new(),
            next_eid: 1,
            memory,
            race: RaceState::new(options.race_check),
            output: Vec::new(),
            diagnostics: Vec::new(),
            seen_messages: HashSet::new(),
            globals: Vec::new(),
            last_error: ErrorCode::Success,
            error_strings: BTreeMap::new(),
            api_log: Vec::new(),
            trace: Vec::new(),
            completions: Vec::new(),
            access_log: None,
            steps: 0,
            shared_steps: 0,
            exit: None,
            host_fault: false,
            next_item: 0,
            stepping_epoch: 0,
            rng: ChaCha8Rng::seed_from_u64(options.seed),
            rr_last: None,
            program,
            options,
        };
        config.allocate_globals();
        let main = config.program.main;
        let mut host = ThreadState::default();
        host.k.push(Kont::MainExit);
        // `main` takes no arguments, so entering it cannot fail.
        let _ = config.enter_function(&mut host, main, Vec::new());
        config.host = host;
        config
    }

    fn allocate_globals(&mut self) {
        let program = self.program.clone();
        for g in &program.globals {
            let space = match g.space {
                GlobalSpace::Host => MemSpace::Host,
                GlobalSpace::Device => MemSpace::DeviceGlobal,
            };
            let size = g.ty.size_of().unwrap_or(0);
            let loc = self.memory.alloc(space, size, ObjKind::Global, None);
            self.memory.zero_fill(loc.object);
            for (off, ty, v) in &g.init {
                // initializers were range-checked when lowered
                let _ = self.memory.store(loc.offset_by(*off as i64), ty, *v);
            }
            self.globals.push(loc);
        }
    }

    /// Adds a diagnostic unless an identical message was already reported.
    pub fn report(&mut self, d: Diagnostic) {
        if self.seen_messages.insert(d.message.clone()) {
            self.diagnostics.push(d);
        }
    }

    pub(crate) fn api_error(&mut self, func: ApiFn, code: ErrorCode, loc: &SourceLoc) {
        self.report(Diagnostic::new(
            Category::ApiError,
            format!(
                "CUDA API error: {} returned {} ({}) at {loc}.",
                func.name(),
                code.name(),
                code.description()
            ),
            Some(loc.clone()),
        ));
    }

    pub fn thread(&self, key: ThreadKey) -> Option<&ThreadState> {
        if key.is_host() {
            return Some(&self.host);
        }
        let g = self.grids.get(&key.gid)?;
        g.threads.get(g.index(key.bid, key.tid))
    }

    pub(crate) fn take_thread(&mut self, key: ThreadKey) -> ThreadState {
        if key.is_host() {
            return std::mem::take(&mut self.host);
        }
        let g = self.grids.get_mut(&key.gid).expect("thread of a live grid");
        let i = g.index(key.bid, key.tid);
        std::mem::take(&mut g.threads[i])
    }

    pub(crate) fn put_thread(&mut self, th: ThreadState) {
        if th.key.is_host() {
            self.host = th;
        } else if let Some(g) = self.grids.get_mut(&th.key.gid) {
            let i = g.index(th.key.bid, th.key.tid);
            g.threads[i] = th;
        }
    }

    pub fn host_done(&self) -> bool {
        self.exit.is_some() || self.host_fault
    }

    /// Every transition that may fire, in ascending order.
    pub fn enabled(&self) -> Vec<Transition> {
        let mut out = Vec::new();
        if self.host_fault {
            return out;
        }
        if self.exit.is_none() && self.host.status == ThreadStatus::Running {
            let ready = match self.host.waiting_on() {
                Some(target) => self.sync_satisfied(target),
                None => true,
            };
            if ready {
                out.push(Transition::Thread(ThreadKey::HOST));
            }
        }
        for (gid, g) in &self.grids {
            for th in &g.threads {
                if th.is_runnable() {
                    out.push(Transition::Thread(th.key));
                }
            }
            for bid in 0..g.spec.grid_dim {
                if g.barrier_rule(bid).is_some() {
                    out.push(Transition::Barrier { gid: *gid, bid });
                }
            }
        }
        for sid in self.streams.keys() {
            if self.dispatchable(*sid) {
                out.push(Transition::Stream(*sid));
            }
        }
        out
    }

    /// Applies one transition from `enabled()`.
    pub fn step(&mut self, t: Transition) {
        self.steps += 1;
        match t {
            Transition::Thread(key) => self.step_thread(key),
            Transition::Barrier { gid, bid } => self.barrier_step(gid, bid),
            Transition::Stream(sid) => self.dispatch(sid),
        }
    }

    pub fn choose(&mut self, enabled: &[Transition]) -> Transition {
        match self.options.policy {
            Policy::SeededRandom => enabled[self.rng.gen_range(0..enabled.len())],
            Policy::RoundRobin => {
                let next = match self.rr_last {
                    Some(last) => enabled.iter().find(|t| **t > last).copied(),
                    None => None,
                };
                let t = next.unwrap_or(enabled[0]);
                self.rr_last = Some(t);
                t
            }
        }
    }

    /// Steps until nothing is enabled, the host faults, or the step limit
    /// is hit. Returns false on the step limit.
    pub fn run_to_end(&mut self) -> bool {
        loop {
            if self.host_fault {
                return true;
            }
            let enabled = self.enabled();
            if enabled.is_empty() {
                return true;
            }
            if self.steps >= self.options.step_limit {
                let limit = self.options.step_limit;
                self.report(Diagnostic::new(
                    Category::StepLimit,
                    format!("Step limit of {limit} exceeded; execution stopped."),
                    None,
                ));
                return false;
            }
            let t = self.choose(&enabled);
            self.step(t);
        }
    }

    /// The host returned and nothing remains queued or running.
    pub fn drained(&self) -> bool {
        self.exit.is_some()
            && self.grids.is_empty()
            && self.streams.values().all(|s| s.is_idle())
    }

    /// Classifies the final configuration and builds the result.
    pub fn finish(mut self) -> RunResult {
        let outcome = if self.diagnostics.iter().any(|d| d.category == Category::StepLimit) {
            Outcome::StepLimit
        } else if self.host_fault {
            Outcome::HostFault
        } else if self.drained() {
            Outcome::Exited(self.exit.unwrap_or(0))
        } else {
            let reports = deadlock::scan_stuck(&self);
            for d in deadlock::diagnostics(&reports) {
                self.report(d);
            }
            Outcome::Stuck(reports)
        };
        let report = match &outcome {
            Outcome::Stuck(reports) => Some(deadlock::render_report(&self, reports)),
            _ => None,
        };
        let main_value = match outcome {
            Outcome::Exited(v) => Some(v),
            _ => None,
        };
        RunResult {
            exit_code: exit_code(&self.diagnostics, main_value),
            output: self.output,
            diagnostics: self.diagnostics,
            outcome,
            steps: self.steps,
            trace: self.trace,
            api_log: self.api_log,
            completions: self.completions,
            report,
        }
    }

    pub(crate) fn trace_line(&mut self, line: impl FnOnce() -> String) {
        if self.options.trace {
            self.trace.push(line());
        }
    }
}

#[cfg(test)]
mod tests;
