//! One reduction of one thread: the continuation items and their rules.

use crate::diag::{Category, Diagnostic, SourceLoc};
use crate::memory::{AccessKind, Accessor, MemFault, MemSpace, ObjKind, ThreadKey};
use crate::program::{ExprId, ExprKind, FuncId, LogicOp, Op, StmtId, StmtKind, UnOp};
use crate::runtime_api;
use crate::streams::SyncTarget;
use crate::types::CType;
use crate::value::{self, ArithFault, Location, Value};

use super::{Configuration, Frame, SharedAccess, ThreadState, ThreadStatus};

/// Pending work on a thread's continuation; the last item runs next.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Kont {
    Stmt(StmtId),
    Eval(ExprId),
    /// All operands of the expression are on the value stack.
    Apply(ExprId),
    /// The left operand of `&&`/`||` is on the value stack.
    Logic(ExprId),
    LogicEnd,
    CondPick(ExprId),
    /// Second half of a read-modify-write: value stack holds result, address, new value.
    WriteBack(ExprId),
    Discard,
    IfPick(StmtId),
    LoopCond(StmtId),
    LoopTest(StmtId),
    LoopNext(StmtId),
    LoopEnd,
    /// Ends the lifetime of locals declared after this many declarations.
    ScopeExit(usize),
    DoReturn(bool),
    CallReturn(ExprId),
    KernelExit,
    MainExit,
    /// Blocks a device thread until its barrier releases it.
    BarrierWait,
    /// Blocks the host until the target is reached.
    HostWait(SyncTarget, ExprId),
    PushValue(Value),
    /// `cudaFree` completes after the device is idle.
    FreeAfterSync(Option<Location>, ExprId),
}

/// The thread cannot continue; its diagnostic has been reported.
pub(crate) struct Stop;

type Step = Result<(), Stop>;

impl Configuration {
    pub(crate) fn step_thread(&mut self, key: ThreadKey) {
        let mut th = self.take_thread(key);
        self.stepping_epoch = th.epoch;
        let result = self.reduce(&mut th);
        if result.is_err() {
            th.status = ThreadStatus::Halted;
        }
        let done = th.status != ThreadStatus::Running;
        self.put_thread(th);
        if done {
            if key.is_host() {
                if self.exit.is_none() {
                    self.host_fault = true;
                }
            } else {
                self.thread_finish(key);
            }
        }
    }

    fn reduce(&mut self, th: &mut ThreadState) -> Step {
        let Some(item) = th.k.pop() else {
            th.status = ThreadStatus::Finished;
            return Ok(());
        };
        match item {
            Kont::Stmt(s) => self.exec_stmt(th, s),
            Kont::Eval(e) => self.eval(th, e),
            Kont::Apply(e) => self.apply(th, e),
            Kont::Logic(e) => {
                let lhs = th.vals.pop().expect("logic operand").is_true();
                let ExprKind::Logical(op, _, rhs) = self.program.expr(e).kind else {
                    unreachable!("Logic on a non-logical expression")
                };
                match (op, lhs) {
                    (LogicOp::And, false) => th.vals.push(Value::Int(0)),
                    (LogicOp::Or, true) => th.vals.push(Value::Int(1)),
                    _ => {
                        th.k.push(Kont::LogicEnd);
                        th.k.push(Kont::Eval(rhs));
                    }
                }
                Ok(())
            }
            Kont::LogicEnd => {
                let v = th.vals.pop().expect("logic operand").is_true();
                th.vals.push(Value::Int(i128::from(v)));
                Ok(())
            }
            Kont::CondPick(e) => {
                let c = th.vals.pop().expect("condition").is_true();
                let ExprKind::Cond(_, a, b) = self.program.expr(e).kind else {
                    unreachable!("CondPick on a non-conditional")
                };
                th.k.push(Kont::Eval(if c { a } else { b }));
                Ok(())
            }
            Kont::WriteBack(e) => {
                let new = th.vals.pop().expect("new value");
                let addr = th.vals.pop().expect("address");
                let expr = self.program.expr(e);
                let (ty, loc) = (expr.ty.clone(), expr.loc.clone());
                self.write(th.key, addr, &ty, new, &loc)
            }
            Kont::Discard => {
                th.vals.pop();
                Ok(())
            }
            Kont::IfPick(s) => {
                let c = th.vals.pop().expect("condition").is_true();
                let StmtKind::If(_, t, e) = self.program.stmt(s).kind else {
                    unreachable!("IfPick on a non-if")
                };
                if c {
                    th.k.push(Kont::Stmt(t));
                } else if let Some(e) = e {
                    th.k.push(Kont::Stmt(e));
                }
                Ok(())
            }
            Kont::LoopCond(s) => {
                match self.loop_parts(s).0 {
                    Some(c) => {
                        th.k.push(Kont::LoopTest(s));
                        th.k.push(Kont::Eval(c));
                    }
                    None => self.enter_body(th, s),
                }
                Ok(())
            }
            Kont::LoopTest(s) => {
                if th.vals.pop().expect("loop condition").is_true() {
                    self.enter_body(th, s);
                } else {
                    let end = th.k.pop();
                    debug_assert_eq!(end, Some(Kont::LoopEnd));
                }
                Ok(())
            }
            Kont::LoopNext(s) => {
                th.k.push(Kont::LoopCond(s));
                if let Some(step) = self.loop_parts(s).1 {
                    th.k.push(Kont::Discard);
                    th.k.push(Kont::Eval(step));
                }
                Ok(())
            }
            Kont::LoopEnd => Ok(()),
            Kont::ScopeExit(mark) => {
                self.exit_scope(th, mark);
                Ok(())
            }
            Kont::DoReturn(has_value) => {
                let v = if has_value {
                    th.vals.pop().expect("return value")
                } else {
                    Value::Void
                };
                loop {
                    match th.k.pop() {
                        Some(Kont::CallReturn(_)) => {
                            self.leave_function(th);
                            th.vals.push(v);
                            return Ok(());
                        }
                        Some(Kont::KernelExit) => {
                            self.leave_function(th);
                            th.status = ThreadStatus::Finished;
                            return Ok(());
                        }
                        Some(Kont::MainExit) => return self.main_exit(th, v),
                        Some(_) => {}
                        None => unreachable!("return outside a function"),
                    }
                }
            }
            Kont::CallReturn(e) => {
                let func = self.current_function(th);
                let f = self.program.function(func);
                if f.ret != CType::Void {
                    let what = format!("reaching the end of non-void function `{}` without a return", f.name);
                    let loc = self.program.expr(e).loc.clone();
                    return self.fail(Diagnostic::undefined(what, &loc));
                }
                self.leave_function(th);
                th.vals.push(Value::Void);
                Ok(())
            }
            Kont::KernelExit => {
                self.leave_function(th);
                th.status = ThreadStatus::Finished;
                Ok(())
            }
            Kont::MainExit => self.main_exit(th, Value::Int(0)),
            Kont::BarrierWait => unreachable!("stepped a thread waiting at a barrier"),
            Kont::HostWait(..) => Ok(()),
            Kont::PushValue(v) => {
                th.vals.push(v);
                Ok(())
            }
            Kont::FreeAfterSync(ptr, e) => {
                let code = match self.memory.free_device(ptr) {
                    Ok(()) => crate::runtime_api::ErrorCode::Success,
                    Err(c) => c,
                };
                let loc = self.program.expr(e).loc.clone();
                let code = self.api_finish(crate::program::ApiFn::Free, code, &loc);
                th.vals.push(Value::Int(code.code()));
                Ok(())
            }
        }
    }

    fn main_exit(&mut self, th: &mut ThreadState, v: Value) -> Step {
        self.leave_function(th);
        th.status = ThreadStatus::Finished;
        th.k.clear();
        self.exit = Some(v.as_int().unwrap_or(0) as i32);
        Ok(())
    }

    fn loop_parts(&self, s: StmtId) -> (Option<ExprId>, Option<ExprId>, StmtId) {
        match self.program.stmt(s).kind {
            StmtKind::While(c, body) => (Some(c), None, body),
            StmtKind::For { cond, step, body } => (cond, step, body),
            _ => unreachable!("loop item on a non-loop"),
        }
    }

    fn enter_body(&self, th: &mut ThreadState, s: StmtId) {
        th.k.push(Kont::LoopNext(s));
        th.k.push(Kont::Stmt(self.loop_parts(s).2));
    }

    pub(crate) fn report_fail(&mut self, d: Diagnostic) -> Stop {
        self.report(d);
        Stop
    }

    fn fail(&mut self, d: Diagnostic) -> Step {
        Err(self.report_fail(d))
    }

    fn current_function(&self, th: &ThreadState) -> FuncId {
        th.frames.last().and_then(|f| f.func).expect("active frame")
    }

    fn exec_stmt(&mut self, th: &mut ThreadState, s: StmtId) -> Step {
        let program = self.program.clone();
        let stmt = program.stmt(s);
        match &stmt.kind {
            StmtKind::Block(items) => {
                let declares = items
                    .iter()
                    .any(|i| matches!(program.stmt(*i).kind, StmtKind::Decl(_)));
                if declares {
                    let mark = th.frames.last().map_or(0, |f| f.decls.len());
                    th.k.push(Kont::ScopeExit(mark));
                }
                th.k.extend(items.iter().rev().map(|i| Kont::Stmt(*i)));
            }
            StmtKind::Decl(l) => {
                let func = self.current_function(th);
                let ty = program.function(func).locals[l.index()].ty.clone();
                let loc = self.alloc_local(th.key, &ty);
                let frame = th.frames.last_mut().expect("active frame");
                if let Some(old) = frame.slots[l.index()].replace(loc) {
                    self.memory.kill(old.object);
                }
                frame.decls.push(*l);
            }
            StmtKind::Nop => {}
            StmtKind::Expr(e) => {
                th.k.push(Kont::Discard);
                th.k.push(Kont::Eval(*e));
            }
            StmtKind::If(c, _, _) => {
                th.k.push(Kont::IfPick(s));
                th.k.push(Kont::Eval(*c));
            }
            StmtKind::While(..) | StmtKind::For { .. } => {
                th.k.push(Kont::LoopEnd);
                th.k.push(Kont::LoopCond(s));
            }
            StmtKind::Return(v) => {
                th.k.push(Kont::DoReturn(v.is_some()));
                if let Some(v) = v {
                    th.k.push(Kont::Eval(*v));
                }
            }
            StmtKind::Break => loop {
                match th.k.pop().expect("break inside a loop") {
                    Kont::LoopEnd => break,
                    Kont::ScopeExit(mark) => self.exit_scope(th, mark),
                    _ => {}
                }
            },
            StmtKind::Continue => loop {
                match th.k.last().expect("continue inside a loop") {
                    Kont::LoopNext(_) => break,
                    Kont::ScopeExit(mark) => {
                        let mark = *mark;
                        th.k.pop();
                        self.exit_scope(th, mark);
                    }
                    _ => {
                        th.k.pop();
                    }
                }
            },
        }
        Ok(())
    }

    fn exit_scope(&mut self, th: &mut ThreadState, mark: usize) {
        let frame = th.frames.last_mut().expect("active frame");
        for l in frame.decls.drain(mark..) {
            if let Some(loc) = frame.slots[l.index()].take() {
                self.memory.kill(loc.object);
            }
        }
    }

    fn alloc_local(&mut self, key: ThreadKey, ty: &CType) -> Location {
        let space = if key.is_host() {
            MemSpace::Host
        } else {
            MemSpace::DeviceGlobal
        };
        let size = ty.size_of().unwrap_or(0);
        self.memory.alloc(space, size, ObjKind::Local, Some(key))
    }

    /// Binds parameters in a fresh frame and starts the body. The caller
    /// has already pushed the item that receives the return.
    pub(crate) fn enter_function(&mut self, th: &mut ThreadState, f: FuncId, args: Vec<Value>) -> Step {
        let program = self.program.clone();
        let func = program.function(f);
        let mut frame = Frame {
            func: Some(f),
            slots: vec![None; func.locals.len()],
            decls: Vec::new(),
        };
        for (p, v) in func.params.iter().zip(args) {
            let ty = &func.locals[p.index()].ty;
            let loc = self.alloc_local(th.key, ty);
            let _ = self.memory.store(loc, ty, v);
            frame.slots[p.index()] = Some(loc);
        }
        th.frames.push(frame);
        match func.body {
            Some(body) => {
                th.k.push(Kont::Stmt(body));
                Ok(())
            }
            None => {
                let what = format!("call to undefined function `{}`", func.name);
                self.fail(Diagnostic::undefined(what, &func.loc))
            }
        }
    }

    fn leave_function(&mut self, th: &mut ThreadState) {
        if let Some(frame) = th.frames.pop() {
            for loc in frame.slots.into_iter().flatten() {
                self.memory.kill(loc.object);
            }
        }
    }

    fn eval(&mut self, th: &mut ThreadState, e: ExprId) -> Step {
        let program = self.program.clone();
        let expr = program.expr(e);
        match &expr.kind {
            ExprKind::Const(v) => th.vals.push(*v),
            ExprKind::Local(l) => {
                let slot = th.frames.last().and_then(|f| f.slots[l.index()]);
                match slot {
                    Some(loc) => th.vals.push(Value::Ptr(Some(loc))),
                    None => {
                        let what = "use of a variable outside its lifetime";
                        return self.fail(Diagnostic::undefined(what, &expr.loc));
                    }
                }
            }
            ExprKind::Global(g) => th.vals.push(Value::Ptr(Some(self.globals[g.index()]))),
            ExprKind::Shared(s) => {
                if th.key.is_host() {
                    let what = format!("host code names __shared__ variable `{}`", program.shared[s.index()].name);
                    return self.fail(Diagnostic::undefined(what, &expr.loc));
                }
                let loc = self.shared_location(th.key, *s);
                th.vals.push(Value::Ptr(Some(loc)));
            }
            ExprKind::Builtin(b, d) => {
                if th.key.is_host() {
                    let what = format!("host code reads `{}`", b.name());
                    return self.fail(Diagnostic::undefined(what, &expr.loc));
                }
                th.vals.push(Value::Int(self.builtin_value(th.key, *b, *d)));
            }
            ExprKind::WarpSize => {
                if th.key.is_host() {
                    return self.fail(Diagnostic::undefined("host code reads `warpSize`", &expr.loc));
                }
                th.vals.push(Value::Int(i128::from(self.options.arch.warp_size)));
            }
            ExprKind::AddrOf(a) | ExprKind::Deref(a) => th.k.push(Kont::Eval(*a)),
            ExprKind::Logical(_, a, _) => {
                th.k.push(Kont::Logic(e));
                th.k.push(Kont::Eval(*a));
            }
            ExprKind::Cond(c, _, _) => {
                th.k.push(Kont::CondPick(e));
                th.k.push(Kont::Eval(*c));
            }
            _ => {
                th.k.push(Kont::Apply(e));
                th.k.extend(program.children(e).into_iter().rev().map(Kont::Eval));
            }
        }
        Ok(())
    }

    fn pop_n(th: &mut ThreadState, n: usize) -> Vec<Value> {
        th.vals.split_off(th.vals.len() - n)
    }

    fn arith(&mut self, r: Result<Value, ArithFault>, loc: &SourceLoc) -> Result<Value, Stop> {
        match r {
            Ok(v) => Ok(v),
            Err(ArithFault::SignedOverflow(wrapped)) => {
                self.report(Diagnostic::undefined(ArithFault::SignedOverflow(wrapped), loc));
                Ok(wrapped)
            }
            Err(fault) => Err(self.report_fail(Diagnostic::undefined(fault, loc))),
        }
    }

    fn apply(&mut self, th: &mut ThreadState, e: ExprId) -> Step {
        let program = self.program.clone();
        let expr = program.expr(e);
        let loc = &expr.loc;
        let ty = &expr.ty;
        match &expr.kind {
            ExprKind::Load(_) => {
                let addr = th.vals.pop().expect("address");
                let v = self.read(th.key, addr, ty, loc)?;
                th.vals.push(v);
            }
            ExprKind::Unary(op, _) => {
                let v = th.vals.pop().expect("operand");
                let r = match (op, v) {
                    (UnOp::Not, v) => Ok(Value::Int(i128::from(!v.is_true()))),
                    (UnOp::Neg, Value::Float(x)) => Ok(Value::Float(-x)),
                    (UnOp::Neg, Value::Int(x)) if ty.is_signed() => value::fit_int(-x, ty),
                    (UnOp::Neg, Value::Int(x)) => Ok(Value::Int(value::wrap_int(-x, ty))),
                    (UnOp::BitNot, Value::Int(x)) => Ok(Value::Int(value::wrap_int(!x, ty))),
                    _ => Err(ArithFault::BadOperands),
                };
                let v = self.arith(r, loc)?;
                th.vals.push(v);
            }
            ExprKind::Binary(op, a, _) => {
                let b = th.vals.pop().expect("rhs");
                let a_val = th.vals.pop().expect("lhs");
                let operand = &program.expr(*a).ty;
                let v = self.arith(value::binary(*op, operand, a_val, b), loc)?;
                th.vals.push(v);
            }
            ExprKind::Convert(_) => {
                let v = th.vals.pop().expect("operand");
                th.vals.push(value::convert(v, ty));
            }
            ExprKind::Assign(..) => {
                let v = th.vals.pop().expect("value");
                let addr = th.vals.pop().expect("address");
                self.write(th.key, addr, ty, v, loc)?;
                th.vals.push(v);
            }
            ExprKind::Compound { op, calc, .. } => {
                let rhs = th.vals.pop().expect("rhs");
                let addr = th.vals.pop().expect("address");
                let old = self.read(th.key, addr, ty, loc)?;
                let r = value::binary(*op, calc, value::convert(old, calc), rhs);
                let new = value::convert(self.arith(r, loc)?, ty);
                th.vals.extend([new, addr, new]);
                th.k.push(Kont::WriteBack(e));
            }
            ExprKind::IncDec { delta, prefix, .. } => {
                let addr = th.vals.pop().expect("address");
                let old = self.read(th.key, addr, ty, loc)?;
                let d = i128::from(*delta);
                let r = match old {
                    Value::Ptr(_) => value::binary(Op::PtrAdd, ty, old, Value::Int(d)),
                    Value::Float(x) => Ok(value::convert(Value::Float(x + d as f64), ty)),
                    Value::Int(_) => {
                        let calc = ty.promoted();
                        value::binary(Op::Add, &calc, old, Value::Int(d)).map(|v| value::convert(v, ty))
                    }
                    Value::Void => Err(ArithFault::BadOperands),
                };
                let new = self.arith(r, loc)?;
                th.vals.extend([if *prefix { new } else { old }, addr, new]);
                th.k.push(Kont::WriteBack(e));
            }
            ExprKind::Call(f, args) => {
                let args = Self::pop_n(th, args.len());
                th.k.push(Kont::CallReturn(e));
                self.enter_function(th, *f, args)?;
            }
            ExprKind::Api(api, args) => {
                let args = Self::pop_n(th, args.len());
                runtime_api::call(self, th, *api, args, e)?;
            }
            ExprKind::Printf(fmt, args) => {
                let args = Self::pop_n(th, args.len());
                let key = th.key;
                let accessor = Accessor::for_thread(key);
                let memory = &mut self.memory;
                let formatted = super::format_printf(program.string(*fmt), &args, |p| {
                    memory.read_c_string(p, accessor).map_err(|f| f.to_string())
                });
                match formatted {
                    Ok(bytes) => {
                        th.vals.push(Value::Int(bytes.len() as i128));
                        self.output.extend_from_slice(&bytes);
                    }
                    Err(what) => return self.fail(Diagnostic::undefined(format!("printf {what}"), loc)),
                }
            }
            ExprKind::Sync(kind, arg) => {
                let operand = match arg {
                    Some(_) => th.vals.pop().and_then(|v| v.as_int()).unwrap_or(0) as i64,
                    None => 0,
                };
                self.barrier_arrive(th, *kind, operand);
            }
            ExprKind::Launch { kernel, shmem, stream, args, .. } => {
                let args = Self::pop_n(th, args.len());
                let stream_v = if stream.is_some() { th.vals.pop() } else { None };
                let shmem_v = if shmem.is_some() { th.vals.pop() } else { None };
                let block = th.vals.pop().expect("block dimension");
                let grid = th.vals.pop().expect("grid dimension");
                let int = |v: Option<Value>| v.and_then(|v| v.as_int()).unwrap_or(0);
                self.launch(*kernel, int(Some(grid)), int(Some(block)), int(shmem_v), int(stream_v), args, loc);
                th.vals.push(Value::Void);
            }
            ExprKind::Const(_)
            | ExprKind::Local(_)
            | ExprKind::Global(_)
            | ExprKind::Shared(_)
            | ExprKind::AddrOf(_)
            | ExprKind::Deref(_)
            | ExprKind::Builtin(..)
            | ExprKind::WarpSize
            | ExprKind::Logical(..)
            | ExprKind::Cond(..) => unreachable!("no Apply for {:?}", expr.kind),
        }
        Ok(())
    }

    fn fault_diagnostic(fault: MemFault, loc: &SourceLoc) -> Diagnostic {
        match fault {
            MemFault::Boundary { accessor, kind, space } => Diagnostic::new(
                Category::MemBoundary,
                format!(
                    "Illegal device or host memory access: {accessor} attempted a {kind} of {} at {loc}.",
                    match space {
                        MemSpace::Host => "host memory".to_string(),
                        MemSpace::DeviceGlobal => "device global memory".to_string(),
                        MemSpace::DeviceShared { gid, bid } => format!("the shared memory of grid {gid} block {bid}"),
                    }
                ),
                Some(loc.clone()),
            ),
            other => Diagnostic::undefined(other, loc),
        }
    }

    fn access_hook(&mut self, key: ThreadKey, loc: Location, ty: &CType, kind: AccessKind, src: &SourceLoc) {
        let MemSpace::DeviceShared { .. } = self.memory.object(loc.object).space else {
            return;
        };
        let len = ty.size_of().unwrap_or(0);
        let offset = loc.offset as u64;
        let found = self.race.record(loc.object, offset, len, key, kind, src);
        for d in found {
            self.report(d);
        }
        if let Some(log) = &mut self.access_log {
            log.push(SharedAccess {
                thread: key,
                object: loc.object,
                offset,
                len,
                kind,
                epoch: self.stepping_epoch,
            });
        }
    }

    /// Counts device accesses to memory the thread does not own, whether
    /// or not they succeed.
    fn note_visible(&mut self, key: ThreadKey, ptr: Option<Location>) {
        if key.is_host() {
            return;
        }
        let owned = ptr.is_some_and(|l| self.memory.object(l.object).owner == Some(key));
        if !owned {
            self.shared_steps += 1;
        }
    }

    pub(crate) fn read(&mut self, key: ThreadKey, addr: Value, ty: &CType, src: &SourceLoc) -> Result<Value, Stop> {
        let ptr = addr.as_ptr().expect("address value");
        self.note_visible(key, ptr);
        match self.memory.read(ptr, ty, Accessor::for_thread(key)) {
            Ok(v) => {
                self.access_hook(key, ptr.expect("non-null"), ty, AccessKind::Read, src);
                Ok(v)
            }
            Err(f) => Err(self.report_fail(Self::fault_diagnostic(f, src))),
        }
    }

    pub(crate) fn write(&mut self, key: ThreadKey, addr: Value, ty: &CType, v: Value, src: &SourceLoc) -> Step {
        let ptr = addr.as_ptr().expect("address value");
        self.note_visible(key, ptr);
        match self.memory.write(ptr, ty, v, Accessor::for_thread(key)) {
            Ok(()) => {
                self.access_hook(key, ptr.expect("non-null"), ty, AccessKind::Write, src);
                Ok(())
            }
            Err(f) => Err(self.report_fail(Self::fault_diagnostic(f, src))),
        }
    }
}
