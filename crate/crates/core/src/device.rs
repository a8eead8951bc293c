//! Kernel launches, grids, device builtins and the token-passing barrier.

use std::collections::BTreeMap;

use crate::diag::{Category, Diagnostic, SourceLoc};
use crate::machine::{BarrierPhase, Configuration, Kont, ThreadState, ThreadStatus};
use crate::memory::{MemSpace, ObjKind, ThreadKey};
use crate::program::{BarrierKind, Builtin, Dim, ExecSpace, FuncId, SharedId};
use crate::runtime_api::ErrorCode;
use crate::streams::{Completion, StreamItem};
use crate::value::{Location, ObjectId, Value};

/// The largest grid accepted by a launch.
pub const MAX_GRID_DIM: i128 = 65_535;

#[derive(Clone, Debug, PartialEq)]
pub struct LaunchSpec {
    pub kernel: FuncId,
    pub grid_dim: u32,
    pub block_dim: u32,
    pub shmem: u64,
    pub stream: u32,
    pub args: Vec<Value>,
    pub loc: SourceLoc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BarrierRule {
    Up,
    Turn,
    Down,
    Release,
}

impl BarrierRule {
    pub fn name(self) -> &'static str {
        match self {
            BarrierRule::Up => "up",
            BarrierRule::Turn => "turn",
            BarrierRule::Down => "down",
            BarrierRule::Release => "release",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Block {
    /// The object every `extern __shared__` array of the block names.
    pub dynamic: Location,
    pub statics: BTreeMap<SharedId, Location>,
    /// The thread holding the block's nonzero token, if any.
    pub holder: Option<u32>,
    pub kind: BarrierKind,
    pub acc: i64,
}

impl Block {
    pub fn objects(&self) -> Vec<ObjectId> {
        std::iter::once(self.dynamic.object)
            .chain(self.statics.values().map(|l| l.object))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Grid {
    pub gid: u32,
    pub spec: LaunchSpec,
    /// Sequence number of the stream item that launched the grid.
    pub item: u64,
    pub live_threads: u64,
    pub threads: Vec<ThreadState>,
    pub blocks: Vec<Block>,
}

impl Grid {
    pub fn index(&self, bid: u32, tid: u32) -> usize {
        (bid * self.spec.block_dim + tid) as usize
    }

    pub fn block_threads(&self, bid: u32) -> &[ThreadState] {
        let start = self.index(bid, 0);
        &self.threads[start..start + self.spec.block_dim as usize]
    }

    fn token(&self, bid: u32, tid: u32) -> Option<u8> {
        self.threads[self.index(bid, tid)].barrier.token()
    }

    /// The barrier rule that can fire in a block, if any.
    pub fn barrier_rule(&self, bid: u32) -> Option<BarrierRule> {
        let h = self.blocks[bid as usize].holder?;
        let last = self.spec.block_dim - 1;
        match self.token(bid, h)? {
            1 if h == last => Some(BarrierRule::Turn),
            1 if self.token(bid, h + 1) == Some(0) => Some(BarrierRule::Up),
            2 if h == 0 => Some(BarrierRule::Release),
            2 if self.token(bid, h - 1) == Some(0) => Some(BarrierRule::Down),
            _ => None,
        }
    }
}

fn set_token(th: &mut ThreadState, new: u8) {
    if let BarrierPhase::Waiting { token, .. } = &mut th.barrier {
        *token = new;
    }
}

impl Configuration {
    fn launch_error(&mut self, kernel: FuncId, code: ErrorCode, loc: &SourceLoc) {
        self.last_error = code;
        let name = &self.program.function(kernel).name;
        let message = format!(
            "CUDA API error: launch of `{name}` failed with {} ({}) at {loc}.",
            code.name(),
            code.description()
        );
        self.report(Diagnostic::new(Category::ApiError, message, Some(loc.clone())));
    }

    /// Validates a launch and queues it on its stream; the host goes on.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn launch(
        &mut self,
        kernel: FuncId,
        grid: i128,
        block: i128,
        shmem: i128,
        stream: i128,
        args: Vec<Value>,
        loc: &SourceLoc,
    ) {
        if self.program.function(kernel).space != ExecSpace::Kernel {
            return self.launch_error(kernel, ErrorCode::InvalidValue, loc);
        }
        let max_block = i128::from(self.options.arch.max_threads_per_block);
        if !(1..=MAX_GRID_DIM).contains(&grid) || !(1..=max_block).contains(&block) {
            return self.launch_error(kernel, ErrorCode::InvalidConfiguration, loc);
        }
        let Some(sid) = self.valid_stream(stream) else {
            return self.launch_error(kernel, ErrorCode::InvalidResourceHandle, loc);
        };
        let spec = LaunchSpec {
            kernel,
            grid_dim: grid as u32,
            block_dim: block as u32,
            shmem: shmem as u64,
            stream: sid,
            args,
            loc: loc.clone(),
        };
        self.enqueue(sid, StreamItem::Launch(spec));
    }

    /// Creates the grid's threads and shared objects. Returns the grid id.
    pub(crate) fn spawn_grid(&mut self, spec: LaunchSpec, item: u64) -> u32 {
        let gid = self.next_gid;
        self.next_gid += 1;
        let mut blocks = Vec::new();
        for bid in 0..spec.grid_dim {
            let dynamic = self
                .memory
                .alloc(MemSpace::DeviceShared { gid, bid }, spec.shmem, ObjKind::Shared, None);
            blocks.push(Block {
                dynamic,
                statics: BTreeMap::new(),
                holder: None,
                kind: BarrierKind::Plain,
                acc: 0,
            });
        }
        let mut threads = Vec::with_capacity((spec.grid_dim * spec.block_dim) as usize);
        for bid in 0..spec.grid_dim {
            for tid in 0..spec.block_dim {
                let mut th = ThreadState {
                    key: ThreadKey::new(gid, bid, tid),
                    ..ThreadState::default()
                };
                th.k.push(Kont::KernelExit);
                if self.enter_function(&mut th, spec.kernel, spec.args.clone()).is_err() {
                    th.status = ThreadStatus::Halted;
                }
                threads.push(th);
            }
        }
        let halted = threads.iter().filter(|t| t.status != ThreadStatus::Running).count() as u64;
        let live = threads.len() as u64 - halted;
        self.grids.insert(
            gid,
            Grid {
                gid,
                spec,
                item,
                live_threads: live,
                threads,
                blocks,
            },
        );
        if live == 0 {
            self.complete_grid(gid);
        }
        gid
    }

    /// The location a `__shared__` variable names in a thread's block.
    pub(crate) fn shared_location(&mut self, key: ThreadKey, s: SharedId) -> Location {
        let var = &self.program.shared[s.index()];
        let size = var.ty.size_of().unwrap_or(0);
        let dynamic = var.dynamic;
        let grid = self.grids.get_mut(&key.gid).expect("live grid");
        let block = &mut grid.blocks[key.bid as usize];
        if dynamic {
            return block.dynamic;
        }
        if let Some(loc) = block.statics.get(&s) {
            return *loc;
        }
        let space = MemSpace::DeviceShared {
            gid: key.gid,
            bid: key.bid,
        };
        let loc = self.memory.alloc(space, size, ObjKind::Shared, None);
        let grid = self.grids.get_mut(&key.gid).expect("live grid");
        grid.blocks[key.bid as usize].statics.insert(s, loc);
        loc
    }

    pub fn builtin_value(&self, key: ThreadKey, b: Builtin, d: Dim) -> i128 {
        let g = &self.grids[&key.gid];
        let x = match b {
            Builtin::ThreadIdx => key.tid,
            Builtin::BlockIdx => key.bid,
            Builtin::BlockDim => g.spec.block_dim,
            Builtin::GridDim => g.spec.grid_dim,
        };
        match (d, b) {
            (Dim::X, _) => i128::from(x),
            (_, Builtin::ThreadIdx | Builtin::BlockIdx) => 0,
            (_, Builtin::BlockDim | Builtin::GridDim) => 1,
        }
    }

    /// A thread reaches a barrier: tid 0 takes the up-sweep token.
    pub(crate) fn barrier_arrive(&mut self, th: &mut ThreadState, kind: BarrierKind, operand: i64) {
        let token = u8::from(th.key.tid == 0);
        th.barrier = BarrierPhase::Waiting { token, kind, operand };
        th.k.push(Kont::BarrierWait);
        if token == 1 {
            let grid = self.grids.get_mut(&th.key.gid).expect("live grid");
            let block = &mut grid.blocks[th.key.bid as usize];
            block.holder = Some(0);
            block.kind = kind;
            block.acc = kind.initial(operand);
        }
    }

    /// Fires the enabled barrier rule of one block.
    pub(crate) fn barrier_step(&mut self, gid: u32, bid: u32) {
        let grid = self.grids.get_mut(&gid).expect("live grid");
        let rule = grid.barrier_rule(bid).expect("enabled barrier rule");
        let h = grid.blocks[bid as usize].holder.expect("token holder");
        let (tid, token) = match rule {
            BarrierRule::Up => {
                let (a, b) = (grid.index(bid, h), grid.index(bid, h + 1));
                set_token(&mut grid.threads[a], 0);
                set_token(&mut grid.threads[b], 1);
                let BarrierPhase::Waiting { operand, .. } = grid.threads[b].barrier else {
                    unreachable!("up-sweep to a thread that has not arrived")
                };
                let block = &mut grid.blocks[bid as usize];
                block.acc = block.kind.accumulate(block.acc, operand);
                block.holder = Some(h + 1);
                (h + 1, 1)
            }
            BarrierRule::Turn => {
                let i = grid.index(bid, h);
                set_token(&mut grid.threads[i], 2);
                let objects = grid.blocks[bid as usize].objects();
                self.race.clear_epoch(&objects);
                (h, 2)
            }
            BarrierRule::Down => {
                let (a, b) = (grid.index(bid, h - 1), grid.index(bid, h));
                let block = &grid.blocks[bid as usize];
                let result = release_value(block.kind, block.acc);
                release(&mut grid.threads[b], result);
                set_token(&mut grid.threads[a], 2);
                grid.blocks[bid as usize].holder = Some(h - 1);
                (h - 1, 2)
            }
            BarrierRule::Release => {
                let i = grid.index(bid, 0);
                let block = &grid.blocks[bid as usize];
                let result = release_value(block.kind, block.acc);
                release(&mut grid.threads[i], result);
                grid.blocks[bid as usize].holder = None;
                (0, 0)
            }
        };
        self.trace_line(|| format!("sync gid={gid} bid={bid} rule={} tid={tid} token={token}", rule.name()));
    }

    /// A device thread is done; the last one completes its grid.
    pub(crate) fn thread_finish(&mut self, key: ThreadKey) {
        let Some(grid) = self.grids.get_mut(&key.gid) else {
            return;
        };
        grid.live_threads -= 1;
        if grid.live_threads == 0 {
            self.complete_grid(key.gid);
        }
    }

    fn complete_grid(&mut self, gid: u32) {
        let Some(grid) = self.grids.remove(&gid) else {
            return;
        };
        for block in &grid.blocks {
            let objects = block.objects();
            for o in &objects {
                self.memory.kill(*o);
            }
            self.race.clear_epoch(&objects);
        }
        let sid = grid.spec.stream;
        if let Some(stream) = self.streams.get_mut(&sid) {
            if stream.running == Some(grid.item) {
                stream.running = None;
            }
        }
        self.completions.push(Completion {
            sid,
            item: grid.item,
            what: "kernel",
        });
        self.trace_line(|| format!("stream sid={sid} complete=kernel gid={gid}"));
    }
}

fn release_value(kind: BarrierKind, acc: i64) -> Value {
    match kind {
        BarrierKind::Plain => Value::Void,
        _ => Value::Int(i128::from(acc)),
    }
}

fn release(th: &mut ThreadState, result: Value) {
    th.barrier = BarrierPhase::Idle;
    let marker = th.k.pop();
    debug_assert_eq!(marker, Some(Kont::BarrierWait));
    th.vals.push(result);
    th.epoch += 1;
}
