//! Classifies a configuration in which nothing can move.

use std::fmt::Write as _;

use crate::diag::{Category, Diagnostic};
use crate::machine::{BarrierPhase, Configuration, ThreadStatus};
use crate::program::ExprKind;
use crate::streams::{StreamItem, SyncTarget};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StuckReport {
    BarrierDeadlock {
        gid: u32,
        bid: u32,
        waiting: Vec<u32>,
        missing: Vec<u32>,
    },
    HostHang {
        reason: String,
    },
    StreamStall {
        sid: u32,
        eid: u32,
    },
}

impl StuckReport {
    pub fn describe(&self) -> String {
        match self {
            StuckReport::BarrierDeadlock {
                gid,
                bid,
                waiting,
                missing,
            } => format!(
                "barrier deadlock in grid {gid} block {bid}: waiting tids {waiting:?}, never arriving tids {missing:?}"
            ),
            StuckReport::HostHang { reason } => reason.clone(),
            StuckReport::StreamStall { sid, eid } => {
                format!("stream {sid} stalled waiting for event {eid}, which is never recorded")
            }
        }
    }
}

/// Every reason the configuration cannot move.
pub fn scan_stuck(cfg: &Configuration) -> Vec<StuckReport> {
    let mut reports = Vec::new();
    for (gid, grid) in &cfg.grids {
        for bid in 0..grid.spec.grid_dim {
            let mut waiting = Vec::new();
            let mut missing = Vec::new();
            for th in grid.block_threads(bid) {
                match (th.barrier, th.status) {
                    (BarrierPhase::Waiting { .. }, _) => waiting.push(th.key.tid),
                    (BarrierPhase::Idle, ThreadStatus::Running) => missing.push(th.key.tid),
                    _ => {}
                }
            }
            if !waiting.is_empty() {
                reports.push(StuckReport::BarrierDeadlock {
                    gid: *gid,
                    bid,
                    waiting,
                    missing,
                });
            }
        }
    }
    for (sid, stream) in &cfg.streams {
        if stream.running.is_none() {
            if let Some(StreamItem::Wait(eid)) = stream.queue.front().map(|q| &q.item) {
                reports.push(StuckReport::StreamStall { sid: *sid, eid: *eid });
            }
        }
    }
    if let Some(target) = cfg.host.waiting_on() {
        if cfg.exit.is_none() && !cfg.sync_satisfied(target) {
            let call = match cfg.host.k.last() {
                Some(crate::machine::Kont::HostWait(_, e)) => match &cfg.program.expr(*e).kind {
                    ExprKind::Api(f, _) => f.name(),
                    _ => "a synchronizing call",
                },
                _ => "a synchronizing call",
            };
            let what = match target {
                SyncTarget::Device => "the device to become idle".to_string(),
                SyncTarget::Stream(s) => format!("stream {s} to drain"),
                SyncTarget::Event(e) => format!("event {e} to be recorded"),
            };
            reports.push(StuckReport::HostHang {
                reason: format!("host blocked in {call} waiting for {what}"),
            });
        }
    }
    reports
}

/// The headline diagnostics for a stuck run: the barrier message once if
/// any block deadlocked, otherwise one line per hang.
pub fn diagnostics(reports: &[StuckReport]) -> Vec<Diagnostic> {
    if reports
        .iter()
        .any(|r| matches!(r, StuckReport::BarrierDeadlock { .. }))
    {
        return vec![Diagnostic::barrier_deadlock()];
    }
    let mut out: Vec<Diagnostic> = reports
        .iter()
        .map(|r| Diagnostic::new(Category::Deadlock, format!("Detected a hang: {}.", r.describe()), None))
        .collect();
    if out.is_empty() {
        out.push(Diagnostic::new(
            Category::Deadlock,
            "Detected a hang: no thread or stream can make progress.",
            None,
        ));
    }
    out
}

/// The report file body: the findings, then the frozen configuration.
pub fn render_report(cfg: &Configuration, reports: &[StuckReport]) -> String {
    let mut out = String::from("stuck configuration\n");
    for r in reports {
        let _ = writeln!(out, "  {}", r.describe());
    }
    let _ = writeln!(out, "host: {}", thread_summary(cfg.host.status, cfg.host.barrier, cfg.exit));
    for (gid, grid) in &cfg.grids {
        let name = &cfg.program.function(grid.spec.kernel).name;
        let _ = writeln!(
            out,
            "grid {gid}: kernel {name} <<<{}, {}, {}>>> stream {} live threads {}",
            grid.spec.grid_dim, grid.spec.block_dim, grid.spec.shmem, grid.spec.stream, grid.live_threads
        );
        for th in &grid.threads {
            let _ = writeln!(
                out,
                "  thread bid={} tid={}: {}",
                th.key.bid,
                th.key.tid,
                thread_summary(th.status, th.barrier, None)
            );
        }
    }
    for (sid, s) in &cfg.streams {
        let items: Vec<&str> = s.queue.iter().map(|q| q.item.name()).collect();
        let _ = writeln!(out, "stream {sid}: queue {items:?} running {:?}", s.running);
    }
    for (eid, e) in &cfg.events {
        let _ = writeln!(out, "event {eid}: {:?}", e.status);
    }
    out.push_str("memory:\n");
    out.push_str(&cfg.memory.dump());
    out
}

fn thread_summary(status: ThreadStatus, barrier: BarrierPhase, exit: Option<i32>) -> String {
    match (status, barrier, exit) {
        (_, _, Some(v)) => format!("returned {v}"),
        (_, BarrierPhase::Waiting { token, kind, operand }, _) => {
            format!("waiting at {kind:?} barrier, token {token}, operand {operand}")
        }
        (ThreadStatus::Running, _, _) => "running".to_string(),
        (ThreadStatus::Finished, _, _) => "finished".to_string(),
        (ThreadStatus::Halted, _, _) => "halted".to_string(),
    }
}
