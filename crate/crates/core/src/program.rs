//! The resolved program representation: flat arenas of typed expressions and
//! statements, a function table, and the file-scope variables.

use std::fmt;
use std::sync::Arc;

use crate::diag::SourceLoc;
use crate::types::CType;
use crate::value::Value;

macro_rules! id_type {
    ($name:ident) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_type!(ExprId);
id_type!(StmtId);
id_type!(FuncId);
id_type!(LocalId);
id_type!(GlobalId);
id_type!(SharedId);
id_type!(StrId);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExecSpace {
    HostOnly,
    DeviceOnly,
    HostAndDevice,
    Kernel,
}

impl ExecSpace {
    pub fn runs_on_host(self) -> bool {
        matches!(self, ExecSpace::HostOnly | ExecSpace::HostAndDevice)
    }

    pub fn runs_on_device(self) -> bool {
        !matches!(self, ExecSpace::HostOnly)
    }
}

impl fmt::Display for ExecSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExecSpace::HostOnly => "__host__",
            ExecSpace::DeviceOnly => "__device__",
            ExecSpace::HostAndDevice => "__host__ __device__",
            ExecSpace::Kernel => "__global__",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Shl,
    Shr,
    BitAnd,
    BitOr,
    BitXor,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    /// pointer + integer, scaled by the pointee size
    PtrAdd,
    /// pointer - integer
    PtrSub,
    /// pointer - pointer, in elements
    PtrDiff,
}

impl Op {
    pub fn is_comparison(self) -> bool {
        matches!(self, Op::Lt | Op::Le | Op::Gt | Op::Ge | Op::Eq | Op::Ne)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
    BitNot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LogicOp {
    And,
    Or,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Builtin {
    ThreadIdx,
    BlockIdx,
    BlockDim,
    GridDim,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::ThreadIdx => "threadIdx",
            Builtin::BlockIdx => "blockIdx",
            Builtin::BlockDim => "blockDim",
            Builtin::GridDim => "gridDim",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "threadIdx" => Builtin::ThreadIdx,
            "blockIdx" => Builtin::BlockIdx,
            "blockDim" => Builtin::BlockDim,
            "gridDim" => Builtin::GridDim,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dim {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BarrierKind {
    Plain,
    And,
    Or,
    Count,
}

impl BarrierKind {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "__syncthreads" => BarrierKind::Plain,
            "__syncthreads_and" => BarrierKind::And,
            "__syncthreads_or" => BarrierKind::Or,
            "__syncthreads_count" => BarrierKind::Count,
            _ => return None,
        })
    }

    /// Folds one more arrival operand into the running reduction.
    pub fn accumulate(self, acc: i64, operand: i64) -> i64 {
        match self {
            BarrierKind::Plain => 0,
            BarrierKind::And => i64::from(acc != 0 && operand != 0),
            BarrierKind::Or => i64::from(acc != 0 || operand != 0),
            BarrierKind::Count => acc + i64::from(operand != 0),
        }
    }

    /// The reduction value a lone first arrival starts from.
    pub fn initial(self, operand: i64) -> i64 {
        match self {
            BarrierKind::Plain => 0,
            BarrierKind::And | BarrierKind::Or | BarrierKind::Count => i64::from(operand != 0),
        }
    }
}

/// The supported runtime API calls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ApiFn {
    Malloc,
    Free,
    Memcpy,
    MemcpyAsync,
    Memset,
    DeviceSynchronize,
    StreamCreate,
    StreamDestroy,
    StreamSynchronize,
    StreamQuery,
    StreamWaitEvent,
    EventCreate,
    EventDestroy,
    EventRecord,
    EventSynchronize,
    EventQuery,
    EventElapsedTime,
    GetLastError,
    GetErrorString,
    DeviceGetAttribute,
    DriverGetVersion,
    RuntimeGetVersion,
}

/// How an API argument is checked and converted at lowering.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApiParam {
    /// Any pointer.
    Ptr,
    /// A `size_t` byte count.
    Size,
    /// An `int`-sized handle, enumerator or flag.
    Int,
}

impl ApiFn {
    pub const ALL: [ApiFn; 22] = [
        ApiFn::Malloc,
        ApiFn::Free,
        ApiFn::Memcpy,
        ApiFn::MemcpyAsync,
        ApiFn::Memset,
        ApiFn::DeviceSynchronize,
        ApiFn::StreamCreate,
        ApiFn::StreamDestroy,
        ApiFn::StreamSynchronize,
        ApiFn::StreamQuery,
        ApiFn::StreamWaitEvent,
        ApiFn::EventCreate,
        ApiFn::EventDestroy,
        ApiFn::EventRecord,
        ApiFn::EventSynchronize,
        ApiFn::EventQuery,
        ApiFn::EventElapsedTime,
        ApiFn::GetLastError,
        ApiFn::GetErrorString,
        ApiFn::DeviceGetAttribute,
        ApiFn::DriverGetVersion,
        ApiFn::RuntimeGetVersion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ApiFn::Malloc => "cudaMalloc",
            ApiFn::Free => "cudaFree",
            ApiFn::Memcpy => "cudaMemcpy",
            ApiFn::MemcpyAsync => "cudaMemcpyAsync",
            ApiFn::Memset => "cudaMemset",
            ApiFn::DeviceSynchronize => "cudaDeviceSynchronize",
            ApiFn::StreamCreate => "cudaStreamCreate",
            ApiFn::StreamDestroy => "cudaStreamDestroy",
            ApiFn::StreamSynchronize => "cudaStreamSynchronize",
            ApiFn::StreamQuery => "cudaStreamQuery",
            ApiFn::StreamWaitEvent => "cudaStreamWaitEvent",
            ApiFn::EventCreate => "cudaEventCreate",
            ApiFn::EventDestroy => "cudaEventDestroy",
            ApiFn::EventRecord => "cudaEventRecord",
            ApiFn::EventSynchronize => "cudaEventSynchronize",
            ApiFn::EventQuery => "cudaEventQuery",
            ApiFn::EventElapsedTime => "cudaEventElapsedTime",
            ApiFn::GetLastError => "cudaGetLastError",
            ApiFn::GetErrorString => "cudaGetErrorString",
            ApiFn::DeviceGetAttribute => "cudaDeviceGetAttribute",
            ApiFn::DriverGetVersion => "cudaDriverGetVersion",
            ApiFn::RuntimeGetVersion => "cudaRuntimeGetVersion",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        ApiFn::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Parameter kinds, and how many trailing ones may be omitted
    /// (they default to zero, as the C++ headers declare).
    pub fn signature(self) -> (&'static [ApiParam], usize) {
        use ApiParam::*;
        match self {
            ApiFn::Malloc => (&[Ptr, Size], 0),
            ApiFn::Free => (&[Ptr], 0),
            ApiFn::Memcpy => (&[Ptr, Ptr, Size, Int], 0),
            ApiFn::MemcpyAsync => (&[Ptr, Ptr, Size, Int, Int], 1),
            ApiFn::Memset => (&[Ptr, Int, Size], 0),
            ApiFn::DeviceSynchronize | ApiFn::GetLastError => (&[], 0),
            ApiFn::StreamCreate | ApiFn::EventCreate => (&[Ptr], 0),
            ApiFn::StreamDestroy
            | ApiFn::StreamSynchronize
            | ApiFn::StreamQuery
            | ApiFn::EventDestroy
            | ApiFn::EventSynchronize
            | ApiFn::EventQuery
            | ApiFn::GetErrorString => (&[Int], 0),
            ApiFn::StreamWaitEvent => (&[Int, Int, Int], 1),
            ApiFn::EventRecord => (&[Int, Int], 1),
            ApiFn::EventElapsedTime => (&[Ptr, Int, Int], 0),
            ApiFn::DeviceGetAttribute => (&[Ptr, Int, Int], 0),
            ApiFn::DriverGetVersion | ApiFn::RuntimeGetVersion => (&[Ptr], 0),
        }
    }

    pub fn return_type(self) -> CType {
        match self {
            ApiFn::GetErrorString => CType::ptr_to(CType::Char),
            _ => CType::Int,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Const(Value),
    /// Address of a local variable of the current frame.
    Local(LocalId),
    /// Address of a file-scope variable.
    Global(GlobalId),
    /// Address of a `__shared__` variable in the executing thread's block.
    Shared(SharedId),
    /// Reinterprets an address as a pointer value (`&x`, array decay).
    AddrOf(ExprId),
    /// Turns a pointer value into an address (`*p`).
    Deref(ExprId),
    /// Reads the object at an address.
    Load(ExprId),
    Builtin(Builtin, Dim),
    WarpSize,
    Unary(UnOp, ExprId),
    Binary(Op, ExprId, ExprId),
    Logical(LogicOp, ExprId, ExprId),
    Cond(ExprId, ExprId, ExprId),
    /// Converts the operand's value to this expression's type.
    Convert(ExprId),
    Assign(ExprId, ExprId),
    /// `target op= rhs`, computed in `calc` and converted back.
    Compound {
        op: Op,
        target: ExprId,
        rhs: ExprId,
        calc: CType,
    },
    IncDec {
        target: ExprId,
        delta: i8,
        prefix: bool,
    },
    Call(FuncId, Vec<ExprId>),
    Api(ApiFn, Vec<ExprId>),
    Printf(StrId, Vec<ExprId>),
    Sync(BarrierKind, Option<ExprId>),
    Launch {
        kernel: FuncId,
        grid: ExprId,
        block: ExprId,
        shmem: Option<ExprId>,
        stream: Option<ExprId>,
        args: Vec<ExprId>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    /// For address-yielding nodes (`Local`, `Global`, `Shared`, `Deref`) the
    /// type of the designated object; otherwise the type of the value.
    pub ty: CType,
    pub loc: SourceLoc,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    Block(Vec<StmtId>),
    /// Allocates storage for a local; its bytes start undefined.
    Decl(LocalId),
    Nop,
    Expr(ExprId),
    If(ExprId, StmtId, Option<StmtId>),
    While(ExprId, StmtId),
    For {
        cond: Option<ExprId>,
        step: Option<ExprId>,
        body: StmtId,
    },
    Return(Option<ExprId>),
    Break,
    Continue,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub loc: SourceLoc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalVar {
    pub name: String,
    pub ty: CType,
    pub loc: SourceLoc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Function {
    pub name: String,
    pub space: ExecSpace,
    pub ret: CType,
    pub params: Vec<LocalId>,
    pub locals: Vec<LocalVar>,
    /// `None` for a function that is declared but never defined.
    pub body: Option<StmtId>,
    pub loc: SourceLoc,
}

impl Function {
    pub fn param_types(&self) -> impl Iterator<Item = &CType> {
        self.params.iter().map(|p| &self.locals[p.index()].ty)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlobalSpace {
    Host,
    Device,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Global {
    pub name: String,
    pub ty: CType,
    pub space: GlobalSpace,
    /// Explicitly initialized scalars as (byte offset, type, value); every
    /// other byte starts as zero.
    pub init: Vec<(u64, CType, Value)>,
    pub loc: SourceLoc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SharedVar {
    pub name: String,
    pub ty: CType,
    /// `extern __shared__ T x[]`: bound to the block's dynamic allocation.
    pub dynamic: bool,
    pub loc: SourceLoc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub file: Arc<str>,
    pub exprs: Vec<Expr>,
    pub stmts: Vec<Stmt>,
    pub functions: Vec<Function>,
    pub globals: Vec<Global>,
    pub shared: Vec<SharedVar>,
    pub strings: Vec<Vec<u8>>,
    pub main: FuncId,
}

impl Program {
    pub fn expr(&self, id: ExprId) -> &Expr {
        &self.exprs[id.index()]
    }

    pub fn stmt(&self, id: StmtId) -> &Stmt {
        &self.stmts[id.index()]
    }

    pub fn function(&self, id: FuncId) -> &Function {
        &self.functions[id.index()]
    }

    pub fn string(&self, id: StrId) -> &[u8] {
        &self.strings[id.index()]
    }

    pub fn function_named(&self, name: &str) -> Option<FuncId> {
        self.functions
            .iter()
            .position(|f| f.name == name)
            .map(|i| FuncId(i as u32))
    }

    pub fn kernels(&self) -> impl Iterator<Item = &Function> {
        self.functions.iter().filter(|f| f.space == ExecSpace::Kernel)
    }

    /// The dynamic-shared symbols a kernel declares in its own body.
    pub fn dynamic_shared_of(&self, kernel: FuncId) -> Vec<SharedId> {
        let mut found = Vec::new();
        if let Some(body) = self.function(kernel).body {
            self.collect_shared(body, &mut found);
        }
        found.retain(|s| self.shared[s.index()].dynamic);
        found
    }

    fn collect_shared(&self, stmt: StmtId, out: &mut Vec<SharedId>) {
        match &self.stmt(stmt).kind {
            StmtKind::Block(items) => items.iter().for_each(|s| self.collect_shared(*s, out)),
            StmtKind::If(c, t, e) => {
                self.collect_shared_expr(*c, out);
                self.collect_shared(*t, out);
                if let Some(e) = e {
                    self.collect_shared(*e, out);
                }
            }
            StmtKind::While(c, b) => {
                self.collect_shared_expr(*c, out);
                self.collect_shared(*b, out);
            }
            StmtKind::For { cond, step, body } => {
                for e in cond.iter().chain(step.iter()) {
                    self.collect_shared_expr(*e, out);
                }
                self.collect_shared(*body, out);
            }
            StmtKind::Expr(e) | StmtKind::Return(Some(e)) => self.collect_shared_expr(*e, out),
            StmtKind::Decl(_)
            | StmtKind::Nop
            | StmtKind::Return(None)
            | StmtKind::Break
            | StmtKind::Continue => {}
        }
    }

    fn collect_shared_expr(&self, e: ExprId, out: &mut Vec<SharedId>) {
        if let ExprKind::Shared(s) = self.expr(e).kind {
            if !out.contains(&s) {
                out.push(s);
            }
        }
        for child in self.children(e) {
            self.collect_shared_expr(child, out);
        }
    }

    /// Direct sub-expressions in evaluation order.
    pub fn children(&self, e: ExprId) -> Vec<ExprId> {
        match &self.expr(e).kind {
            ExprKind::Const(_)
            | ExprKind::Local(_)
            | ExprKind::Global(_)
            | ExprKind::Shared(_)
            | ExprKind::Builtin(..)
            | ExprKind::WarpSize => Vec::new(),
            ExprKind::AddrOf(a)
            | ExprKind::Deref(a)
            | ExprKind::Load(a)
            | ExprKind::Unary(_, a)
            | ExprKind::Convert(a)
            | ExprKind::IncDec { target: a, .. } => vec![*a],
            ExprKind::Binary(_, a, b)
            | ExprKind::Logical(_, a, b)
            | ExprKind::Assign(a, b)
            | ExprKind::Compound {
                target: a, rhs: b, ..
            } => vec![*a, *b],
            ExprKind::Cond(a, b, c) => vec![*a, *b, *c],
            ExprKind::Call(_, args) | ExprKind::Api(_, args) | ExprKind::Printf(_, args) => {
                args.clone()
            }
            ExprKind::Sync(_, arg) => arg.iter().copied().collect(),
            ExprKind::Launch {
                grid,
                block,
                shmem,
                stream,
                args,
                ..
            } => {
                let mut v = vec![*grid, *block];
                v.extend(shmem.iter().chain(stream.iter()).copied());
                v.extend(args.iter().copied());
                v
            }
        }
    }
}
