//! Surface syntax tree produced by the parser.

use crate::diag::SourceLoc;

#[derive(Clone, Debug, PartialEq)]
pub struct TranslationUnit {
    pub file: String,
    pub items: Vec<ExternalDecl>,
}

impl TranslationUnit {
    pub fn functions(&self) -> impl Iterator<Item = &FunctionDef> {
        self.items.iter().filter_map(|item| match item {
            ExternalDecl::Function(f) => Some(f),
            _ => None,
        })
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions().find(|f| f.name == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExternalDecl {
    Vars(Vec<VarDecl>),
    Prototype(FunctionSig),
    Function(FunctionDef),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FnAttrs {
    pub host: bool,
    pub device: bool,
    pub global: bool,
    pub noinline: bool,
    pub forceinline: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct VarQuals {
    pub is_extern: bool,
    pub is_static: bool,
    pub shared: bool,
    pub device: bool,
    pub is_const: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaseType {
    Void,
    Char,
    Int,
    UInt,
    Long,
    ULong,
    Float,
    Double,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypeName {
    pub base: BaseType,
    pub pointer_depth: u32,
    /// Outermost dimension first; `None` for `[]`.
    pub array_dims: Vec<Option<Expr>>,
}

impl TypeName {
    pub fn scalar(base: BaseType) -> Self {
        TypeName {
            base,
            pointer_depth: 0,
            array_dims: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarDecl {
    pub quals: VarQuals,
    pub ty: TypeName,
    pub name: String,
    pub init: Option<Initializer>,
    pub loc: SourceLoc,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Initializer {
    Expr(Expr),
    List(Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub ty: TypeName,
    pub name: Option<String>,
    pub loc: SourceLoc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionSig {
    pub attrs: FnAttrs,
    pub ret: TypeName,
    pub name: String,
    pub params: Vec<Param>,
    pub loc: SourceLoc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionDef {
    pub attrs: FnAttrs,
    pub ret: TypeName,
    pub name: String,
    pub params: Vec<Param>,
    pub body: Block,
    pub loc: SourceLoc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub loc: SourceLoc,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    Decl(Vec<VarDecl>),
    Expr(Expr),
    Empty,
    Block(Block),
    If(Expr, Box<Stmt>, Option<Box<Stmt>>),
    While(Expr, Box<Stmt>),
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        step: Option<Expr>,
        body: Box<Stmt>,
    },
    Return(Option<Expr>),
    Break,
    Continue,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub loc: SourceLoc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    AddrOf,
    Deref,
    Neg,
    Plus,
    Not,
    BitNot,
    PreInc,
    PreDec,
    PostInc,
    PostDec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Shl,
    Shr,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    BitAnd,
    BitOr,
    BitXor,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::BitAnd => "&",
            BinaryOp::BitOr => "|",
            BinaryOp::BitXor => "^",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SizeofArg {
    Type(TypeName),
    Expr(Box<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    IntLit(String),
    FloatLit(String),
    CharLit(String),
    StrLit(String),
    Ident(String),
    /// `threadIdx.x` and friends.
    Member(Box<Expr>, String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Assign(Option<BinaryOp>, Box<Expr>, Box<Expr>),
    Cond(Box<Expr>, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Sizeof(SizeofArg),
    Cast(TypeName, Box<Expr>),
    Launch {
        kernel: String,
        config: Vec<Expr>,
        args: Vec<Expr>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub loc: SourceLoc,
}

impl Expr {
    pub fn new(kind: ExprKind, loc: SourceLoc) -> Self {
        Expr { kind, loc }
    }
}

/// Resets every source location in the tree, so that trees parsed from
/// differently laid out text can be compared structurally.
pub trait EraseLocs {
    fn erase_locs(&mut self);
}

impl EraseLocs for TranslationUnit {
    fn erase_locs(&mut self) {
        for item in &mut self.items {
            match item {
                ExternalDecl::Vars(vs) => vs.iter_mut().for_each(EraseLocs::erase_locs),
                ExternalDecl::Prototype(sig) => {
                    sig.loc = SourceLoc::default();
                    sig.ret.erase_locs();
                    sig.params.iter_mut().for_each(EraseLocs::erase_locs);
                }
                ExternalDecl::Function(f) => {
                    f.loc = SourceLoc::default();
                    f.ret.erase_locs();
                    f.params.iter_mut().for_each(EraseLocs::erase_locs);
                    f.body.erase_locs();
                }
            }
        }
    }
}

impl EraseLocs for Param {
    fn erase_locs(&mut self) {
        self.loc = SourceLoc::default();
        self.ty.erase_locs();
    }
}

impl EraseLocs for TypeName {
    fn erase_locs(&mut self) {
        for d in self.array_dims.iter_mut().flatten() {
            d.erase_locs();
        }
    }
}

impl EraseLocs for VarDecl {
    fn erase_locs(&mut self) {
        self.loc = SourceLoc::default();
        self.ty.erase_locs();
        match &mut self.init {
            Some(Initializer::Expr(e)) => e.erase_locs(),
            Some(Initializer::List(es)) => es.iter_mut().for_each(EraseLocs::erase_locs),
            None => {}
        }
    }
}

impl EraseLocs for Block {
    fn erase_locs(&mut self) {
        self.loc = SourceLoc::default();
        self.stmts.iter_mut().for_each(EraseLocs::erase_locs);
    }
}

impl EraseLocs for Stmt {
    fn erase_locs(&mut self) {
        self.loc = SourceLoc::default();
        match &mut self.kind {
            StmtKind::Decl(vs) => vs.iter_mut().for_each(EraseLocs::erase_locs),
            StmtKind::Expr(e) => e.erase_locs(),
            StmtKind::Empty | StmtKind::Break | StmtKind::Continue => {}
            StmtKind::Block(b) => b.erase_locs(),
            StmtKind::If(c, t, e) => {
                c.erase_locs();
                t.erase_locs();
                if let Some(e) = e {
                    e.erase_locs();
                }
            }
            StmtKind::While(c, b) => {
                c.erase_locs();
                b.erase_locs();
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                if let Some(i) = init {
                    i.erase_locs();
                }
                if let Some(c) = cond {
                    c.erase_locs();
                }
                if let Some(s) = step {
                    s.erase_locs();
                }
                body.erase_locs();
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    e.erase_locs();
                }
            }
        }
    }
}

impl EraseLocs for Expr {
    fn erase_locs(&mut self) {
        self.loc = SourceLoc::default();
        match &mut self.kind {
            ExprKind::IntLit(_)
            | ExprKind::FloatLit(_)
            | ExprKind::CharLit(_)
            | ExprKind::StrLit(_)
            | ExprKind::Ident(_) => {}
            ExprKind::Member(e, _) | ExprKind::Unary(_, e) => e.erase_locs(),
            ExprKind::Binary(_, a, b) | ExprKind::Assign(_, a, b) | ExprKind::Index(a, b) => {
                a.erase_locs();
                b.erase_locs();
            }
            ExprKind::Cond(a, b, c) => {
                a.erase_locs();
                b.erase_locs();
                c.erase_locs();
            }
            ExprKind::Call(_, args) => args.iter_mut().for_each(EraseLocs::erase_locs),
            ExprKind::Sizeof(SizeofArg::Type(t)) => t.erase_locs(),
            ExprKind::Sizeof(SizeofArg::Expr(e)) => e.erase_locs(),
            ExprKind::Cast(t, e) => {
                t.erase_locs();
                e.erase_locs();
            }
            ExprKind::Launch { config, args, .. } => {
                config.iter_mut().for_each(EraseLocs::erase_locs);
                args.iter_mut().for_each(EraseLocs::erase_locs);
            }
        }
    }
}
