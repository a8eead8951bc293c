//! Name resolution, typing and static checks, producing a [`Program`].

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use super::ast::{
    self, BaseType, BinaryOp, ExprKind as A, ExternalDecl, FnAttrs, Initializer, SizeofArg,
    StmtKind as S, TypeName, UnaryOp, VarDecl,
};
use super::lexer::unescape;
use super::FrontendError;
use crate::diag::SourceLoc;
use crate::program::*;
use crate::runtime_api::named_constant;
use crate::types::CType;
use crate::value::{self, Value};

type Result<T> = std::result::Result<T, FrontendError>;

fn err<T>(loc: &SourceLoc, message: impl Into<String>) -> Result<T> {
    Err(FrontendError::Semantic {
        loc: loc.clone(),
        message: message.into(),
    })
}

#[derive(Clone, Copy)]
enum Sym {
    Local(LocalId),
    Global(GlobalId),
    Shared(SharedId),
}

struct Lowerer {
    file: Arc<str>,
    exprs: Vec<Expr>,
    stmts: Vec<Stmt>,
    functions: Vec<Function>,
    param_types: Vec<Vec<CType>>,
    defined: HashSet<String>,
    globals: Vec<Global>,
    shared: Vec<SharedVar>,
    strings: Vec<Vec<u8>>,
    fn_index: HashMap<String, FuncId>,
    scopes: Vec<HashMap<String, Sym>>,
    cur: Option<FuncId>,
    locals: Vec<LocalVar>,
    loops: u32,
    calls: Vec<(FuncId, SourceLoc)>,
}

/// Resolves and checks a parsed translation unit.
pub fn lower(tu: &ast::TranslationUnit) -> Result<Program> {
    let mut l = Lowerer {
        file: Arc::from(tu.file.as_str()),
        exprs: Vec::new(),
        stmts: Vec::new(),
        functions: Vec::new(),
        param_types: Vec::new(),
        defined: HashSet::new(),
        globals: Vec::new(),
        shared: Vec::new(),
        strings: Vec::new(),
        fn_index: HashMap::new(),
        scopes: vec![HashMap::new()],
        cur: None,
        locals: Vec::new(),
        loops: 0,
        calls: Vec::new(),
    };
    for item in &tu.items {
        match item {
            ExternalDecl::Prototype(sig) => {
                l.declare_fn(sig.attrs, &sig.ret, &sig.name, &sig.params, &sig.loc, false)?;
            }
            ExternalDecl::Function(f) => {
                l.declare_fn(f.attrs, &f.ret, &f.name, &f.params, &f.loc, true)?;
            }
            ExternalDecl::Vars(_) => {}
        }
    }
    for item in &tu.items {
        match item {
            ExternalDecl::Vars(vars) => {
                for v in vars {
                    l.global_var(v)?;
                }
            }
            ExternalDecl::Function(f) => l.function_body(f)?,
            ExternalDecl::Prototype(_) => {}
        }
    }
    for (f, loc) in &l.calls {
        let func = &l.functions[f.index()];
        if func.body.is_none() {
            return err(loc, format!("function `{}` is declared but never defined", func.name));
        }
    }
    let end = SourceLoc::new(l.file.clone(), 1, 1);
    let Some(&main) = l.fn_index.get("main") else {
        return err(&end, "program has no `main` function");
    };
    let m = &l.functions[main.index()];
    if m.space != ExecSpace::HostOnly || m.ret != CType::Int || !m.params.is_empty() {
        return err(&m.loc, "`main` must be declared as `int main(void)`");
    }
    if m.body.is_none() {
        return err(&m.loc, "`main` is declared but never defined");
    }
    Ok(Program {
        file: l.file,
        exprs: l.exprs,
        stmts: l.stmts,
        functions: l.functions,
        globals: l.globals,
        shared: l.shared,
        strings: l.strings,
        main,
    })
}

fn exec_space(attrs: FnAttrs, name: &str, loc: &SourceLoc) -> Result<ExecSpace> {
    if attrs.global {
        if attrs.host || attrs.device {
            return err(loc, format!("conflicting execution space attributes on `{name}`"));
        }
        return Ok(ExecSpace::Kernel);
    }
    Ok(match (attrs.host, attrs.device) {
        (true, true) => ExecSpace::HostAndDevice,
        (false, true) => ExecSpace::DeviceOnly,
        _ => ExecSpace::HostOnly,
    })
}

fn base_ctype(b: BaseType) -> CType {
    match b {
        BaseType::Void => CType::Void,
        BaseType::Char => CType::Char,
        BaseType::Int => CType::Int,
        BaseType::UInt => CType::UInt,
        BaseType::Long => CType::Long,
        BaseType::ULong => CType::ULong,
        BaseType::Float => CType::Float,
        BaseType::Double => CType::Double,
    }
}

fn int_literal(text: &str, loc: &SourceLoc) -> Result<(Value, CType)> {
    let lower = text.to_ascii_lowercase();
    let body = lower.trim_end_matches(['u', 'l']);
    let suffix = &lower[body.len()..];
    let unsigned = suffix.contains('u');
    let long = suffix.contains('l');
    let (digits, radix) = if let Some(h) = body.strip_prefix("0x") {
        (h, 16)
    } else if body.len() > 1 && body.starts_with('0') {
        (&body[1..], 8)
    } else {
        (body, 10)
    };
    let Ok(v) = u128::from_str_radix(digits, radix) else {
        return err(loc, format!("invalid integer literal `{text}`"));
    };
    let candidates: &[CType] = match (unsigned, long, radix == 10) {
        (false, false, true) => &[CType::Int, CType::Long],
        (false, false, false) => &[CType::Int, CType::UInt, CType::Long, CType::ULong],
        (true, false, _) => &[CType::UInt, CType::ULong],
        (false, true, true) => &[CType::Long],
        (false, true, false) => &[CType::Long, CType::ULong],
        (true, true, _) => &[CType::ULong],
    };
    for ty in candidates {
        let (_, hi) = ty.int_range().unwrap_or((0, 0));
        if v <= hi as u128 {
            return Ok((Value::Int(v as i128), ty.clone()));
        }
    }
    err(loc, format!("integer literal `{text}` is too large"))
}

fn float_literal(text: &str, loc: &SourceLoc) -> Result<(Value, CType)> {
    let (body, ty) = match text.as_bytes().last() {
        Some(b'f' | b'F') => (&text[..text.len() - 1], CType::Float),
        Some(b'l' | b'L') => (&text[..text.len() - 1], CType::Double),
        _ => (text, CType::Double),
    };
    let Ok(v) = body.parse::<f64>() else {
        return err(loc, format!("invalid floating literal `{text}`"));
    };
    Ok((value::convert(Value::Float(v), &ty), ty))
}

impl Lowerer {
    fn push_expr(&mut self, kind: ExprKind, ty: CType, loc: &SourceLoc) -> ExprId {
        self.exprs.push(Expr {
            kind,
            ty,
            loc: loc.clone(),
        });
        ExprId(self.exprs.len() as u32 - 1)
    }

    fn push_stmt(&mut self, kind: StmtKind, loc: &SourceLoc) -> StmtId {
        self.stmts.push(Stmt {
            kind,
            loc: loc.clone(),
        });
        StmtId(self.stmts.len() as u32 - 1)
    }

    fn ty(&self, e: ExprId) -> &CType {
        &self.exprs[e.index()].ty
    }

    fn cur_space(&self) -> Option<ExecSpace> {
        self.cur.map(|f| self.functions[f.index()].space)
    }

    fn cur_name(&self) -> &str {
        self.cur.map_or("", |f| self.functions[f.index()].name.as_str())
    }

    fn bind(&mut self, name: &str, sym: Sym, loc: &SourceLoc) -> Result<()> {
        let scope = self.scopes.last_mut().expect("scope stack is never empty");
        if scope.insert(name.to_string(), sym).is_some() {
            return err(loc, format!("redeclaration of `{name}`"));
        }
        Ok(())
    }

    fn lookup(&self, name: &str) -> Option<Sym> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn resolve_type(&mut self, tn: &TypeName, allow_unsized: bool, loc: &SourceLoc) -> Result<CType> {
        let mut ty = base_ctype(tn.base);
        for _ in 0..tn.pointer_depth {
            ty = CType::ptr_to(ty);
        }
        if ty == CType::Void && !tn.array_dims.is_empty() {
            return err(loc, "array of void");
        }
        for (i, d) in tn.array_dims.iter().enumerate().rev() {
            let n = match d {
                Some(e) => {
                    let id = self.rvalue(e)?;
                    match self.const_eval(id) {
                        Some(Value::Int(n)) if n > 0 && self.ty(id).is_integer() => Some(n as u64),
                        Some(Value::Int(_)) => return err(&e.loc, "array size must be positive"),
                        _ => return err(&e.loc, "array size must be an integer constant"),
                    }
                }
                None if i == 0 && allow_unsized => None,
                None => return err(loc, "array size missing"),
            };
            ty = CType::Array(Box::new(ty), n);
        }
        Ok(ty)
    }

    fn declare_fn(
        &mut self,
        attrs: FnAttrs,
        ret: &TypeName,
        name: &str,
        params: &[ast::Param],
        loc: &SourceLoc,
        is_definition: bool,
    ) -> Result<()> {
        let space = exec_space(attrs, name, loc)?;
        let ret = self.resolve_type(ret, false, loc)?;
        if ret.is_array() {
            return err(loc, format!("function `{name}` cannot return an array"));
        }
        if space == ExecSpace::Kernel && ret != CType::Void {
            return err(loc, format!("__global__ function `{name}` must return void"));
        }
        let mut types = Vec::new();
        for p in params {
            let ty = self.resolve_type(&p.ty, true, &p.loc)?.decay();
            if ty == CType::Void {
                return err(&p.loc, "parameter has type void");
            }
            types.push(ty);
        }
        if is_definition && !self.defined.insert(name.to_string()) {
            return err(loc, format!("redefinition of `{name}`"));
        }
        if let Some(&id) = self.fn_index.get(name) {
            let f = &self.functions[id.index()];
            if f.space != space || f.ret != ret || self.param_types[id.index()] != types {
                return err(loc, format!("conflicting declaration of `{name}`"));
            }
            if is_definition {
                self.functions[id.index()].loc = loc.clone();
            }
            return Ok(());
        }
        let id = FuncId(self.functions.len() as u32);
        self.functions.push(Function {
            name: name.to_string(),
            space,
            ret,
            params: Vec::new(),
            locals: Vec::new(),
            body: None,
            loc: loc.clone(),
        });
        self.param_types.push(types);
        self.fn_index.insert(name.to_string(), id);
        Ok(())
    }

    fn shared_var(&mut self, v: &VarDecl) -> Result<SharedId> {
        if v.init.is_some() {
            return err(&v.loc, "__shared__ variables cannot have an initializer");
        }
        let ty = self.resolve_type(&v.ty, v.quals.is_extern, &v.loc)?;
        let dynamic = v.quals.is_extern;
        if dynamic && !matches!(ty, CType::Array(_, None)) {
            return err(&v.loc, "extern __shared__ variables must be unsized arrays");
        }
        if !dynamic && ty.size_of().is_none() {
            return err(&v.loc, format!("variable `{}` has incomplete type", v.name));
        }
        let id = SharedId(self.shared.len() as u32);
        self.shared.push(SharedVar {
            name: v.name.clone(),
            ty,
            dynamic,
            loc: v.loc.clone(),
        });
        self.bind(&v.name, Sym::Shared(id), &v.loc)?;
        Ok(id)
    }

    fn global_var(&mut self, v: &VarDecl) -> Result<()> {
        if v.quals.shared {
            self.shared_var(v)?;
            return Ok(());
        }
        if v.quals.is_extern {
            return err(&v.loc, "extern variables are not supported");
        }
        let ty = self.resolve_type(&v.ty, false, &v.loc)?;
        if ty.size_of().is_none() {
            return err(&v.loc, format!("variable `{}` has incomplete type", v.name));
        }
        let mut init = Vec::new();
        match &v.init {
            None => {}
            Some(Initializer::Expr(e)) => {
                if ty.is_array() {
                    return err(&e.loc, "array initializer must be a brace-enclosed list");
                }
                init.push((0, ty.clone(), self.constant_init(e, &ty)?));
            }
            Some(Initializer::List(items)) => {
                let (elem, len) = self.list_shape(&ty, items.len(), &v.loc)?;
                let size = elem.size_of().unwrap_or(0);
                for (i, e) in items.iter().enumerate() {
                    let _ = len;
                    init.push((i as u64 * size, elem.clone(), self.constant_init(e, &elem)?));
                }
            }
        }
        let id = GlobalId(self.globals.len() as u32);
        self.globals.push(Global {
            name: v.name.clone(),
            ty,
            space: if v.quals.device {
                GlobalSpace::Device
            } else {
                GlobalSpace::Host
            },
            init,
            loc: v.loc.clone(),
        });
        self.bind(&v.name, Sym::Global(id), &v.loc)
    }

    fn constant_init(&mut self, e: &ast::Expr, ty: &CType) -> Result<Value> {
        let id = self.rvalue(e)?;
        let id = self.convert_to(id, ty, false, &e.loc)?;
        match self.const_eval(id) {
            Some(v) => Ok(v),
            None => err(&e.loc, "initializer of a file-scope variable must be a constant"),
        }
    }

    /// Element type and length of an array initialized from a flat list.
    fn list_shape(&self, ty: &CType, n: usize, loc: &SourceLoc) -> Result<(CType, u64)> {
        match ty {
            CType::Array(elem, Some(len)) if elem.is_scalar() => {
                if n as u64 > *len {
                    return err(loc, "too many initializers");
                }
                Ok(((**elem).clone(), *len))
            }
            _ => err(loc, "brace initializers are only supported for one-dimensional arrays"),
        }
    }

    fn function_body(&mut self, f: &ast::FunctionDef) -> Result<()> {
        let id = self.fn_index[&f.name];
        self.cur = Some(id);
        self.locals.clear();
        self.scopes.push(HashMap::new());
        let mut params = Vec::new();
        for (p, ty) in f.params.iter().zip(self.param_types[id.index()].clone()) {
            let Some(name) = &p.name else {
                return err(&p.loc, "parameter name omitted in a function definition");
            };
            params.push(self.new_local(name, ty, &p.loc)?);
        }
        let body = self.block(&f.body)?;
        self.scopes.pop();
        let func = &mut self.functions[id.index()];
        func.params = params;
        func.locals = std::mem::take(&mut self.locals);
        func.body = Some(body);
        self.cur = None;
        Ok(())
    }

    fn new_local(&mut self, name: &str, ty: CType, loc: &SourceLoc) -> Result<LocalId> {
        let id = LocalId(self.locals.len() as u32);
        self.locals.push(LocalVar {
            name: name.to_string(),
            ty,
            loc: loc.clone(),
        });
        self.bind(name, Sym::Local(id), loc)?;
        Ok(id)
    }

    fn block(&mut self, b: &ast::Block) -> Result<StmtId> {
        self.scopes.push(HashMap::new());
        let mut items = Vec::new();
        for s in &b.stmts {
            self.stmt(s, &mut items)?;
        }
        self.scopes.pop();
        Ok(self.push_stmt(StmtKind::Block(items), &b.loc))
    }

    fn single(&mut self, s: &ast::Stmt) -> Result<StmtId> {
        let mut out = Vec::new();
        self.scopes.push(HashMap::new());
        self.stmt(s, &mut out)?;
        self.scopes.pop();
        Ok(match out.as_slice() {
            [one] => *one,
            [] => self.push_stmt(StmtKind::Nop, &s.loc),
            _ => self.push_stmt(StmtKind::Block(out), &s.loc),
        })
    }

    fn condition(&mut self, e: &ast::Expr) -> Result<ExprId> {
        let id = self.rvalue(e)?;
        if !self.ty(id).is_scalar() {
            return err(&e.loc, "condition must have scalar type");
        }
        Ok(id)
    }

    fn stmt(&mut self, s: &ast::Stmt, out: &mut Vec<StmtId>) -> Result<()> {
        let loc = &s.loc;
        let id = match &s.kind {
            S::Decl(vars) => {
                for v in vars {
                    self.local_decl(v, out)?;
                }
                return Ok(());
            }
            S::Expr(e) => {
                let e = self.rvalue(e)?;
                self.push_stmt(StmtKind::Expr(e), loc)
            }
            S::Empty => self.push_stmt(StmtKind::Nop, loc),
            S::Block(b) => self.block(b)?,
            S::If(c, t, e) => {
                let c = self.condition(c)?;
                let t = self.single(t)?;
                let e = match e {
                    Some(e) => Some(self.single(e)?),
                    None => None,
                };
                self.push_stmt(StmtKind::If(c, t, e), loc)
            }
            S::While(c, body) => {
                let c = self.condition(c)?;
                self.loops += 1;
                let body = self.single(body);
                self.loops -= 1;
                self.push_stmt(StmtKind::While(c, body?), loc)
            }
            S::For {
                init,
                cond,
                step,
                body,
            } => {
                self.scopes.push(HashMap::new());
                let mut items = Vec::new();
                if let Some(init) = init {
                    self.stmt(init, &mut items)?;
                }
                let cond = match cond {
                    Some(c) => Some(self.condition(c)?),
                    None => None,
                };
                let step = match step {
                    Some(st) => Some(self.rvalue(st)?),
                    None => None,
                };
                self.loops += 1;
                let body = self.single(body);
                self.loops -= 1;
                let body = body?;
                self.scopes.pop();
                items.push(self.push_stmt(StmtKind::For { cond, step, body }, loc));
                self.push_stmt(StmtKind::Block(items), loc)
            }
            S::Return(v) => {
                let ret = self.cur.map_or(CType::Void, |f| self.functions[f.index()].ret.clone());
                let v = match v {
                    None if ret != CType::Void => {
                        return err(loc, format!("non-void function `{}` must return a value", self.cur_name()));
                    }
                    None => None,
                    Some(e) => {
                        let id = self.rvalue(e)?;
                        if ret == CType::Void {
                            if *self.ty(id) != CType::Void {
                                return err(&e.loc, format!("void function `{}` returns a value", self.cur_name()));
                            }
                            Some(id)
                        } else {
                            Some(self.convert_to(id, &ret, false, &e.loc)?)
                        }
                    }
                };
                self.push_stmt(StmtKind::Return(v), loc)
            }
            S::Break | S::Continue => {
                if self.loops == 0 {
                    return err(loc, "`break` or `continue` outside of a loop");
                }
                let kind = if matches!(s.kind, S::Break) {
                    StmtKind::Break
                } else {
                    StmtKind::Continue
                };
                self.push_stmt(kind, loc)
            }
        };
        out.push(id);
        Ok(())
    }

    fn local_decl(&mut self, v: &VarDecl, out: &mut Vec<StmtId>) -> Result<()> {
        if v.quals.shared {
            if self.cur_space() == Some(ExecSpace::HostOnly) {
                return err(
                    &v.loc,
                    format!("__shared__ variable `{}` declared in host function `{}`", v.name, self.cur_name()),
                );
            }
            self.shared_var(v)?;
            out.push(self.push_stmt(StmtKind::Nop, &v.loc));
            return Ok(());
        }
        if v.quals.is_static {
            return err(&v.loc, "static local variables are not supported");
        }
        if v.quals.is_extern {
            return err(&v.loc, "extern variables are not supported");
        }
        if v.quals.device {
            return err(&v.loc, "__device__ variables must be declared at file scope");
        }
        let ty = self.resolve_type(&v.ty, false, &v.loc)?;
        if ty.size_of().is_none() {
            return err(&v.loc, format!("variable `{}` has incomplete type", v.name));
        }
        let local = self.new_local(&v.name, ty.clone(), &v.loc)?;
        out.push(self.push_stmt(StmtKind::Decl(local), &v.loc));
        match &v.init {
            None => {}
            Some(Initializer::Expr(e)) => {
                if ty.is_array() {
                    return err(&e.loc, "array initializer must be a brace-enclosed list");
                }
                let target = self.push_expr(ExprKind::Local(local), ty.clone(), &v.loc);
                let rhs = self.rvalue(e)?;
                let rhs = self.convert_to(rhs, &ty, false, &e.loc)?;
                let assign = self.push_expr(ExprKind::Assign(target, rhs), ty, &v.loc);
                out.push(self.push_stmt(StmtKind::Expr(assign), &v.loc));
            }
            Some(Initializer::List(items)) => {
                let (elem, len) = self.list_shape(&ty, items.len(), &v.loc)?;
                for i in 0..len {
                    let rhs = match items.get(i as usize) {
                        Some(e) => {
                            let r = self.rvalue(e)?;
                            self.convert_to(r, &elem, false, &e.loc)?
                        }
                        None => {
                            let zero = if elem.is_floating() {
                                Value::Float(0.0)
                            } else if elem.is_pointer() {
                                Value::NULL
                            } else {
                                Value::Int(0)
                            };
                            self.push_expr(ExprKind::Const(zero), elem.clone(), &v.loc)
                        }
                    };
                    let base = self.push_expr(ExprKind::Local(local), ty.clone(), &v.loc);
                    let ptr_ty = CType::ptr_to(elem.clone());
                    let decayed = self.push_expr(ExprKind::AddrOf(base), ptr_ty.clone(), &v.loc);
                    let idx = self.push_expr(ExprKind::Const(Value::Int(i as i128)), CType::Long, &v.loc);
                    let addr = self.push_expr(ExprKind::Binary(Op::PtrAdd, decayed, idx), ptr_ty, &v.loc);
                    let target = self.push_expr(ExprKind::Deref(addr), elem.clone(), &v.loc);
                    let assign = self.push_expr(ExprKind::Assign(target, rhs), elem.clone(), &v.loc);
                    out.push(self.push_stmt(StmtKind::Expr(assign), &v.loc));
                }
            }
        }
        Ok(())
    }

    /// Folds a constant expression; `None` when it reads memory or has effects.
    pub fn const_eval(&self, id: ExprId) -> Option<Value> {
        let e = &self.exprs[id.index()];
        match &e.kind {
            ExprKind::Const(v) => Some(*v),
            ExprKind::Convert(a) => Some(value::convert(self.const_eval(*a)?, &e.ty)),
            ExprKind::Unary(op, a) => {
                let v = self.const_eval(*a)?;
                match op {
                    UnOp::Not => Some(Value::Int(i128::from(!v.is_true()))),
                    UnOp::Neg => match v {
                        Value::Int(x) => value::fit_int(-x, &e.ty).ok(),
                        Value::Float(x) => Some(Value::Float(-x)),
                        _ => None,
                    },
                    UnOp::BitNot => Some(Value::Int(value::wrap_int(!v.as_int()?, &e.ty))),
                }
            }
            ExprKind::Binary(op, a, b) => {
                let operand = self.ty(*a).clone();
                value::binary(*op, &operand, self.const_eval(*a)?, self.const_eval(*b)?).ok()
            }
            ExprKind::Logical(op, a, b) => {
                let x = self.const_eval(*a)?.is_true();
                let r = match op {
                    LogicOp::And => x && self.const_eval(*b)?.is_true(),
                    LogicOp::Or => x || self.const_eval(*b)?.is_true(),
                };
                Some(Value::Int(i128::from(r)))
            }
            ExprKind::Cond(c, a, b) => {
                if self.const_eval(*c)?.is_true() {
                    self.const_eval(*a)
                } else {
                    self.const_eval(*b)
                }
            }
            _ => None,
        }
    }

    fn is_null_constant(&self, id: ExprId) -> bool {
        self.ty(id).is_integer() && self.const_eval(id) == Some(Value::Int(0))
    }

    fn convert_to(&mut self, id: ExprId, to: &CType, explicit: bool, loc: &SourceLoc) -> Result<ExprId> {
        let from = self.ty(id).clone();
        if from == *to {
            return Ok(id);
        }
        let ok = match (&from, to) {
            (_, CType::Void) => explicit,
            (CType::Void, _) => return err(loc, "void value not ignored as it ought to be"),
            (f, t) if f.is_arithmetic() && t.is_arithmetic() => true,
            (CType::Ptr(a), CType::Ptr(b)) => {
                explicit || **a == CType::Void || **b == CType::Void || a == b
            }
            (f, CType::Ptr(_)) if f.is_integer() => {
                if !self.is_null_constant(id) {
                    return err(loc, format!("cannot convert `{from}` to pointer type `{to}`"));
                }
                true
            }
            (CType::Ptr(_), t) if t.is_arithmetic() => {
                return err(loc, format!("cannot convert pointer type `{from}` to `{to}`"));
            }
            _ => false,
        };
        if !ok {
            return err(loc, format!("incompatible types: cannot convert `{from}` to `{to}`"));
        }
        Ok(self.push_expr(ExprKind::Convert(id), to.clone(), loc))
    }

    fn sym_expr(&mut self, sym: Sym, loc: &SourceLoc) -> ExprId {
        let (kind, ty) = match sym {
            Sym::Local(l) => (ExprKind::Local(l), self.locals[l.index()].ty.clone()),
            Sym::Global(g) => (ExprKind::Global(g), self.globals[g.index()].ty.clone()),
            Sym::Shared(s) => (ExprKind::Shared(s), self.shared[s.index()].ty.clone()),
        };
        self.push_expr(kind, ty, loc)
    }

    fn decayed(&mut self, lv: ExprId) -> ExprId {
        let ty = self.ty(lv).clone();
        let loc = self.exprs[lv.index()].loc.clone();
        match ty {
            CType::Array(elem, _) => self.push_expr(ExprKind::AddrOf(lv), CType::Ptr(elem), &loc),
            ty => self.push_expr(ExprKind::Load(lv), ty, &loc),
        }
    }

    fn unknown_ident(&self, name: &str, loc: &SourceLoc) -> FrontendError {
        let message = if self.fn_index.contains_key(name) {
            format!("function `{name}` used as a value")
        } else {
            format!("use of undeclared identifier `{name}`")
        };
        FrontendError::Semantic {
            loc: loc.clone(),
            message,
        }
    }

    fn lvalue(&mut self, e: &ast::Expr) -> Result<ExprId> {
        match &e.kind {
            A::Ident(name) => match self.lookup(name) {
                Some(sym) => Ok(self.sym_expr(sym, &e.loc)),
                None => Err(self.unknown_ident(name, &e.loc)),
            },
            A::Unary(UnaryOp::Deref, a) => {
                let p = self.rvalue(a)?;
                self.deref(p, &e.loc)
            }
            A::Index(a, i) => self.index(a, i, &e.loc),
            _ => err(&e.loc, "expression is not assignable"),
        }
    }

    fn deref(&mut self, p: ExprId, loc: &SourceLoc) -> Result<ExprId> {
        let pointee = match self.ty(p) {
            CType::Ptr(t) => (**t).clone(),
            other => return err(loc, format!("cannot dereference a value of type `{other}`")),
        };
        if pointee == CType::Void {
            return err(loc, "cannot dereference a void pointer");
        }
        Ok(self.push_expr(ExprKind::Deref(p), pointee, loc))
    }

    fn index(&mut self, a: &ast::Expr, i: &ast::Expr, loc: &SourceLoc) -> Result<ExprId> {
        let mut base = self.rvalue(a)?;
        let mut idx = self.rvalue(i)?;
        if self.ty(base).is_integer() && self.ty(idx).is_pointer() {
            std::mem::swap(&mut base, &mut idx);
        }
        if !self.ty(base).is_pointer() || !self.ty(idx).is_integer() {
            return err(loc, "subscript requires a pointer or array and an integer");
        }
        let idx = self.convert_to(idx, &CType::Long, false, loc)?;
        let ty = self.ty(base).clone();
        self.check_complete_pointee(&ty, loc)?;
        let addr = self.push_expr(ExprKind::Binary(Op::PtrAdd, base, idx), ty, loc);
        self.deref(addr, loc)
    }

    fn check_complete_pointee(&self, ptr: &CType, loc: &SourceLoc) -> Result<()> {
        match ptr.pointee().and_then(CType::size_of) {
            Some(_) => Ok(()),
            None => err(loc, format!("arithmetic on a pointer to an incomplete type `{ptr}`")),
        }
    }

    fn rvalue(&mut self, e: &ast::Expr) -> Result<ExprId> {
        let loc = &e.loc;
        match &e.kind {
            A::IntLit(t) => {
                let (v, ty) = int_literal(t, loc)?;
                Ok(self.push_expr(ExprKind::Const(v), ty, loc))
            }
            A::FloatLit(t) => {
                let (v, ty) = float_literal(t, loc)?;
                Ok(self.push_expr(ExprKind::Const(v), ty, loc))
            }
            A::CharLit(t) => {
                let bytes = unescape(t).or_else(|m| err(loc, m))?;
                let [b] = bytes.as_slice() else {
                    return err(loc, "character literal must hold exactly one character");
                };
                Ok(self.push_expr(ExprKind::Const(Value::Int(*b as i8 as i128)), CType::Int, loc))
            }
            A::StrLit(_) => err(loc, "string literals are only supported as the format argument of printf"),
            A::Ident(name) => {
                if let Some(sym) = self.lookup(name) {
                    let lv = self.sym_expr(sym, loc);
                    return Ok(self.decayed(lv));
                }
                if name == "warpSize" {
                    return Ok(self.push_expr(ExprKind::WarpSize, CType::Int, loc));
                }
                if name == "NULL" {
                    return Ok(self.push_expr(ExprKind::Const(Value::Int(0)), CType::Int, loc));
                }
                if let Some(v) = named_constant(name) {
                    return Ok(self.push_expr(ExprKind::Const(Value::Int(v)), CType::Int, loc));
                }
                if Builtin::from_name(name).is_some() {
                    return err(loc, format!("`{name}` must be used with a component (.x, .y or .z)"));
                }
                Err(self.unknown_ident(name, loc))
            }
            A::Member(base, field) => {
                let builtin = match &base.kind {
                    A::Ident(n) if self.lookup(n).is_none() => Builtin::from_name(n),
                    _ => None,
                };
                let Some(builtin) = builtin else {
                    return err(loc, "member access is only supported on threadIdx, blockIdx, blockDim and gridDim");
                };
                let dim = match field.as_str() {
                    "x" => Dim::X,
                    "y" => Dim::Y,
                    "z" => Dim::Z,
                    _ => return err(loc, format!("`{}` has no member `{field}`", builtin.name())),
                };
                Ok(self.push_expr(ExprKind::Builtin(builtin, dim), CType::UInt, loc))
            }
            A::Unary(op, a) => self.unary(*op, a, loc),
            A::Binary(BinaryOp::And, a, b) => self.logical(LogicOp::And, a, b, loc),
            A::Binary(BinaryOp::Or, a, b) => self.logical(LogicOp::Or, a, b, loc),
            A::Binary(op, a, b) => {
                let x = self.rvalue(a)?;
                let y = self.rvalue(b)?;
                self.binary(*op, x, y, loc)
            }
            A::Assign(None, a, b) => {
                let target = self.lvalue(a)?;
                let ty = self.ty(target).clone();
                if ty.is_array() {
                    return err(loc, "arrays are not assignable");
                }
                let rhs = self.rvalue(b)?;
                let rhs = self.convert_to(rhs, &ty, false, &b.loc)?;
                Ok(self.push_expr(ExprKind::Assign(target, rhs), ty, loc))
            }
            A::Assign(Some(op), a, b) => self.compound(*op, a, b, loc),
            A::Cond(c, a, b) => self.conditional(c, a, b, loc),
            A::Call(name, args) => self.call(name, args, loc),
            A::Index(a, i) => {
                let lv = self.index(a, i, loc)?;
                Ok(self.decayed(lv))
            }
            A::Sizeof(arg) => {
                let ty = match arg {
                    SizeofArg::Type(tn) => self.resolve_type(tn, false, loc)?,
                    SizeofArg::Expr(inner) => match self.lvalue(inner) {
                        Ok(lv) => self.ty(lv).clone(),
                        Err(_) => {
                            let id = self.rvalue(inner)?;
                            self.ty(id).clone()
                        }
                    },
                };
                let Some(size) = ty.size_of() else {
                    return err(loc, format!("sizeof applied to incomplete type `{ty}`"));
                };
                Ok(self.push_expr(ExprKind::Const(Value::Int(size as i128)), CType::ULong, loc))
            }
            A::Cast(tn, a) => {
                let to = self.resolve_type(tn, false, loc)?;
                if to.is_array() {
                    return err(loc, "cannot cast to an array type");
                }
                let x = self.rvalue(a)?;
                self.convert_to(x, &to, true, loc)
            }
            A::Launch {
                kernel,
                config,
                args,
            } => self.launch(kernel, config, args, loc),
        }
    }

    fn unary(&mut self, op: UnaryOp, a: &ast::Expr, loc: &SourceLoc) -> Result<ExprId> {
        match op {
            UnaryOp::AddrOf => {
                let lv = self.lvalue(a)?;
                let ty = CType::ptr_to(self.ty(lv).clone());
                Ok(self.push_expr(ExprKind::AddrOf(lv), ty, loc))
            }
            UnaryOp::Deref => {
                let p = self.rvalue(a)?;
                let lv = self.deref(p, loc)?;
                Ok(self.decayed(lv))
            }
            UnaryOp::Neg | UnaryOp::Plus | UnaryOp::BitNot => {
                let x = self.rvalue(a)?;
                let ty = self.ty(x).clone();
                let ok = if op == UnaryOp::BitNot {
                    ty.is_integer()
                } else {
                    ty.is_arithmetic()
                };
                if !ok {
                    return err(loc, format!("invalid operand of type `{ty}` to unary operator"));
                }
                let promoted = ty.promoted();
                let x = self.convert_to(x, &promoted, false, loc)?;
                Ok(match op {
                    UnaryOp::Neg => self.push_expr(ExprKind::Unary(UnOp::Neg, x), promoted, loc),
                    UnaryOp::BitNot => self.push_expr(ExprKind::Unary(UnOp::BitNot, x), promoted, loc),
                    _ => x,
                })
            }
            UnaryOp::Not => {
                let x = self.condition(a)?;
                Ok(self.push_expr(ExprKind::Unary(UnOp::Not, x), CType::Int, loc))
            }
            UnaryOp::PreInc | UnaryOp::PreDec | UnaryOp::PostInc | UnaryOp::PostDec => {
                let target = self.lvalue(a)?;
                let ty = self.ty(target).clone();
                if ty.is_pointer() {
                    self.check_complete_pointee(&ty, loc)?;
                } else if !ty.is_arithmetic() {
                    return err(loc, format!("cannot increment or decrement a value of type `{ty}`"));
                }
                let delta = if matches!(op, UnaryOp::PreInc | UnaryOp::PostInc) { 1 } else { -1 };
                let prefix = matches!(op, UnaryOp::PreInc | UnaryOp::PreDec);
                Ok(self.push_expr(
                    ExprKind::IncDec {
                        target,
                        delta,
                        prefix,
                    },
                    ty,
                    loc,
                ))
            }
        }
    }

    fn logical(&mut self, op: LogicOp, a: &ast::Expr, b: &ast::Expr, loc: &SourceLoc) -> Result<ExprId> {
        let x = self.condition(a)?;
        let y = self.condition(b)?;
        Ok(self.push_expr(ExprKind::Logical(op, x, y), CType::Int, loc))
    }

    fn arith_op(op: BinaryOp) -> Op {
        match op {
            BinaryOp::Add => Op::Add,
            BinaryOp::Sub => Op::Sub,
            BinaryOp::Mul => Op::Mul,
            BinaryOp::Div => Op::Div,
            BinaryOp::Rem => Op::Rem,
            BinaryOp::Shl => Op::Shl,
            BinaryOp::Shr => Op::Shr,
            BinaryOp::Lt => Op::Lt,
            BinaryOp::Le => Op::Le,
            BinaryOp::Gt => Op::Gt,
            BinaryOp::Ge => Op::Ge,
            BinaryOp::Eq => Op::Eq,
            BinaryOp::Ne => Op::Ne,
            BinaryOp::BitAnd => Op::BitAnd,
            BinaryOp::BitOr => Op::BitOr,
            BinaryOp::BitXor => Op::BitXor,
            BinaryOp::And | BinaryOp::Or => unreachable!("logical operators are lowered separately"),
        }
    }

    fn binary(&mut self, op: BinaryOp, x: ExprId, y: ExprId, loc: &SourceLoc) -> Result<ExprId> {
        let (tx, ty) = (self.ty(x).clone(), self.ty(y).clone());
        let sym = op.symbol();
        let op = Self::arith_op(op);
        if tx.is_pointer() || ty.is_pointer() {
            return match op {
                Op::Add if tx.is_pointer() && ty.is_integer() => self.ptr_offset(Op::PtrAdd, x, y, loc),
                Op::Add if tx.is_integer() && ty.is_pointer() => self.ptr_offset(Op::PtrAdd, y, x, loc),
                Op::Sub if tx.is_pointer() && ty.is_integer() => self.ptr_offset(Op::PtrSub, x, y, loc),
                Op::Sub if tx.is_pointer() && tx == ty => {
                    self.check_complete_pointee(&tx, loc)?;
                    Ok(self.push_expr(ExprKind::Binary(Op::PtrDiff, x, y), CType::Long, loc))
                }
                _ if op.is_comparison() => {
                    let (x, y) = if tx.is_pointer() && ty.is_pointer() {
                        let y = self.convert_to(y, &tx, false, loc)?;
                        (x, y)
                    } else if tx.is_pointer() && self.is_null_constant(y) {
                        (x, self.convert_to(y, &tx, false, loc)?)
                    } else if ty.is_pointer() && self.is_null_constant(x) {
                        (self.convert_to(x, &ty, false, loc)?, y)
                    } else {
                        return err(loc, format!("invalid operands `{tx}` and `{ty}` to `{sym}`"));
                    };
                    Ok(self.push_expr(ExprKind::Binary(op, x, y), CType::Int, loc))
                }
                _ => err(loc, format!("invalid operands `{tx}` and `{ty}` to `{sym}`")),
            };
        }
        let integer_only = matches!(op, Op::Rem | Op::Shl | Op::Shr | Op::BitAnd | Op::BitOr | Op::BitXor);
        if !tx.is_arithmetic() || !ty.is_arithmetic() || (integer_only && !(tx.is_integer() && ty.is_integer())) {
            return err(loc, format!("invalid operands `{tx}` and `{ty}` to `{sym}`"));
        }
        if matches!(op, Op::Shl | Op::Shr) {
            let lt = tx.promoted();
            let x = self.convert_to(x, &lt, false, loc)?;
            let rt = ty.promoted();
            let y = self.convert_to(y, &rt, false, loc)?;
            return Ok(self.push_expr(ExprKind::Binary(op, x, y), lt, loc));
        }
        let common = CType::common_arithmetic(&tx, &ty);
        let x = self.convert_to(x, &common, false, loc)?;
        let y = self.convert_to(y, &common, false, loc)?;
        let result = if op.is_comparison() { CType::Int } else { common };
        Ok(self.push_expr(ExprKind::Binary(op, x, y), result, loc))
    }

    fn ptr_offset(&mut self, op: Op, p: ExprId, n: ExprId, loc: &SourceLoc) -> Result<ExprId> {
        let ty = self.ty(p).clone();
        self.check_complete_pointee(&ty, loc)?;
        let n = self.convert_to(n, &CType::Long, false, loc)?;
        Ok(self.push_expr(ExprKind::Binary(op, p, n), ty, loc))
    }

    fn compound(&mut self, op: BinaryOp, a: &ast::Expr, b: &ast::Expr, loc: &SourceLoc) -> Result<ExprId> {
        let target = self.lvalue(a)?;
        let lt = self.ty(target).clone();
        let rhs = self.rvalue(b)?;
        let rt = self.ty(rhs).clone();
        let sym = op.symbol();
        let op = Self::arith_op(op);
        if lt.is_pointer() && matches!(op, Op::Add | Op::Sub) && rt.is_integer() {
            self.check_complete_pointee(&lt, loc)?;
            let rhs = self.convert_to(rhs, &CType::Long, false, loc)?;
            let op = if op == Op::Add { Op::PtrAdd } else { Op::PtrSub };
            return Ok(self.push_expr(
                ExprKind::Compound {
                    op,
                    target,
                    rhs,
                    calc: lt.clone(),
                },
                lt,
                loc,
            ));
        }
        let integer_only = matches!(op, Op::Rem | Op::Shl | Op::Shr | Op::BitAnd | Op::BitOr | Op::BitXor);
        if !lt.is_arithmetic() || !rt.is_arithmetic() || (integer_only && !(lt.is_integer() && rt.is_integer())) {
            return err(loc, format!("invalid operands `{lt}` and `{rt}` to `{sym}=`"));
        }
        let calc = if matches!(op, Op::Shl | Op::Shr) {
            lt.promoted()
        } else {
            CType::common_arithmetic(&lt, &rt)
        };
        let rhs = self.convert_to(rhs, &calc, false, loc)?;
        Ok(self.push_expr(
            ExprKind::Compound {
                op,
                target,
                rhs,
                calc,
            },
            lt,
            loc,
        ))
    }

    fn conditional(&mut self, c: &ast::Expr, a: &ast::Expr, b: &ast::Expr, loc: &SourceLoc) -> Result<ExprId> {
        let c = self.condition(c)?;
        let x = self.rvalue(a)?;
        let y = self.rvalue(b)?;
        let (tx, ty) = (self.ty(x).clone(), self.ty(y).clone());
        let result = if tx.is_arithmetic() && ty.is_arithmetic() {
            CType::common_arithmetic(&tx, &ty)
        } else if tx.is_pointer() && (ty.is_pointer() || self.is_null_constant(y)) {
            tx
        } else if ty.is_pointer() && self.is_null_constant(x) {
            ty
        } else if tx == CType::Void && ty == CType::Void {
            CType::Void
        } else {
            return err(loc, format!("incompatible operand types `{tx}` and `{ty}` in conditional"));
        };
        let x = self.convert_to(x, &result, false, loc)?;
        let y = self.convert_to(y, &result, false, loc)?;
        Ok(self.push_expr(ExprKind::Cond(c, x, y), result, loc))
    }

    fn call(&mut self, name: &str, args: &[ast::Expr], loc: &SourceLoc) -> Result<ExprId> {
        if name == "printf" {
            return self.printf(args, loc);
        }
        if let Some(kind) = BarrierKind::from_name(name) {
            return self.sync(kind, name, args, loc);
        }
        if let Some(api) = ApiFn::from_name(name) {
            return self.api(api, args, loc);
        }
        if name.starts_with("cuda") && !self.fn_index.contains_key(name) {
            return err(loc, format!("unsupported CUDA runtime function `{name}`"));
        }
        let Some(&callee) = self.fn_index.get(name) else {
            return err(loc, format!("call to undeclared function `{name}`"));
        };
        let callee_space = self.functions[callee.index()].space;
        match (self.cur_space(), callee_space) {
            (_, ExecSpace::Kernel) => {
                return err(loc, format!("kernel `{name}` must be launched with <<<...>>>"));
            }
            (None, _) => return err(loc, "function call in a constant expression"),
            (Some(ExecSpace::HostOnly), ExecSpace::DeviceOnly) => {
                return err(
                    loc,
                    format!("host function `{}` cannot call __device__ function `{name}`", self.cur_name()),
                );
            }
            (Some(ExecSpace::DeviceOnly | ExecSpace::Kernel), ExecSpace::HostOnly) => {
                return err(
                    loc,
                    format!("device function `{}` cannot call host function `{name}`", self.cur_name()),
                );
            }
            (Some(ExecSpace::HostAndDevice), s) if s != ExecSpace::HostAndDevice => {
                return err(
                    loc,
                    format!("__host__ __device__ function `{}` cannot call {s} function `{name}`", self.cur_name()),
                );
            }
            _ => {}
        }
        let params = self.param_types[callee.index()].clone();
        if params.len() != args.len() {
            return err(
                loc,
                format!("`{name}` expects {} arguments, got {}", params.len(), args.len()),
            );
        }
        let mut lowered = Vec::new();
        for (a, ty) in args.iter().zip(&params) {
            let x = self.rvalue(a)?;
            lowered.push(self.convert_to(x, ty, false, &a.loc)?);
        }
        self.calls.push((callee, loc.clone()));
        let ret = self.functions[callee.index()].ret.clone();
        Ok(self.push_expr(ExprKind::Call(callee, lowered), ret, loc))
    }

    fn printf(&mut self, args: &[ast::Expr], loc: &SourceLoc) -> Result<ExprId> {
        let Some(A::StrLit(text)) = args.first().map(|a| &a.kind) else {
            return err(loc, "the first argument of printf must be a string literal");
        };
        let bytes = unescape(text).or_else(|m| err(loc, m))?;
        self.strings.push(bytes);
        let fmt = StrId(self.strings.len() as u32 - 1);
        let mut lowered = Vec::new();
        for a in &args[1..] {
            let x = self.rvalue(a)?;
            let ty = self.ty(x).clone();
            let promoted = match ty {
                CType::Float => CType::Double,
                ref t if t.is_integer() => t.promoted(),
                CType::Ptr(_) => ty.clone(),
                CType::Double => ty.clone(),
                _ => return err(&a.loc, format!("cannot pass a value of type `{ty}` to printf")),
            };
            lowered.push(self.convert_to(x, &promoted, false, &a.loc)?);
        }
        Ok(self.push_expr(ExprKind::Printf(fmt, lowered), CType::Int, loc))
    }

    fn sync(&mut self, kind: BarrierKind, name: &str, args: &[ast::Expr], loc: &SourceLoc) -> Result<ExprId> {
        if self.cur_space().is_none_or(|s| s == ExecSpace::HostOnly) {
            return err(loc, format!("{name}() called from host function `{}`", self.cur_name()));
        }
        let expected = usize::from(kind != BarrierKind::Plain);
        if args.len() != expected {
            return err(loc, format!("{name}() expects {expected} arguments"));
        }
        let arg = match args.first() {
            Some(a) => {
                let x = self.condition(a)?;
                let zero = self.push_expr(ExprKind::Const(Value::Int(0)), CType::Int, loc);
                let ty = self.ty(x).clone();
                let zero = self.convert_to(zero, &ty, false, loc)?;
                Some(self.push_expr(ExprKind::Binary(Op::Ne, x, zero), CType::Int, loc))
            }
            None => None,
        };
        let ty = if kind == BarrierKind::Plain {
            CType::Void
        } else {
            CType::Int
        };
        Ok(self.push_expr(ExprKind::Sync(kind, arg), ty, loc))
    }

    fn api(&mut self, api: ApiFn, args: &[ast::Expr], loc: &SourceLoc) -> Result<ExprId> {
        if self.cur_space() != Some(ExecSpace::HostOnly) {
            return err(
                loc,
                format!("runtime API function `{}` called from device code", api.name()),
            );
        }
        let (params, optional) = api.signature();
        if args.len() > params.len() || args.len() + optional < params.len() {
            return err(
                loc,
                format!("`{}` expects {} arguments, got {}", api.name(), params.len(), args.len()),
            );
        }
        let mut lowered = Vec::new();
        for (i, param) in params.iter().enumerate() {
            let x = match args.get(i) {
                Some(a) => self.rvalue(a)?,
                None => self.push_expr(ExprKind::Const(Value::Int(0)), CType::Int, loc),
            };
            let aloc = args.get(i).map_or(loc, |a| &a.loc).clone();
            let ty = self.ty(x).clone();
            let x = match param {
                ApiParam::Ptr if ty.is_pointer() => x,
                ApiParam::Ptr if self.is_null_constant(x) => {
                    self.convert_to(x, &CType::ptr_to(CType::Void), false, &aloc)?
                }
                ApiParam::Ptr => {
                    return err(&aloc, format!("argument {} of `{}` must be a pointer", i + 1, api.name()));
                }
                ApiParam::Size if ty.is_arithmetic() => self.convert_to(x, &CType::ULong, false, &aloc)?,
                ApiParam::Int if ty.is_arithmetic() => self.convert_to(x, &CType::Int, false, &aloc)?,
                _ => {
                    return err(&aloc, format!("argument {} of `{}` must be an integer", i + 1, api.name()));
                }
            };
            lowered.push(x);
        }
        Ok(self.push_expr(ExprKind::Api(api, lowered), api.return_type(), loc))
    }

    fn launch(&mut self, kernel: &str, config: &[ast::Expr], args: &[ast::Expr], loc: &SourceLoc) -> Result<ExprId> {
        if self.cur_space() != Some(ExecSpace::HostOnly) {
            return err(loc, "kernel launches from device code are not supported");
        }
        let Some(&k) = self.fn_index.get(kernel) else {
            return err(loc, format!("launch of undeclared function `{kernel}`"));
        };
        let mut cfg = Vec::new();
        for (i, c) in config.iter().enumerate() {
            let x = self.rvalue(c)?;
            if !self.ty(x).is_integer() {
                return err(&c.loc, "launch configuration parameters must be integers");
            }
            let ty = match i {
                0 | 1 => CType::Long,
                2 => CType::ULong,
                _ => CType::Int,
            };
            cfg.push(self.convert_to(x, &ty, false, &c.loc)?);
        }
        let params = self.param_types[k.index()].clone();
        if params.len() != args.len() {
            return err(
                loc,
                format!("`{kernel}` expects {} arguments, got {}", params.len(), args.len()),
            );
        }
        let mut lowered = Vec::new();
        for (a, ty) in args.iter().zip(&params) {
            let x = self.rvalue(a)?;
            lowered.push(self.convert_to(x, ty, false, &a.loc)?);
        }
        self.calls.push((k, loc.clone()));
        Ok(self.push_expr(
            ExprKind::Launch {
                kernel: k,
                grid: cfg[0],
                block: cfg[1],
                shmem: cfg.get(2).copied(),
                stream: cfg.get(3).copied(),
                args: lowered,
            },
            CType::Void,
            loc,
        ))
    }
}

#[cfg(test)]
mod tests {
    use crate::frontend::{compile, FrontendError};
    use crate::program::{ExecSpace, ExprKind, GlobalSpace};
    use crate::types::CType;

    fn semantic_error(src: &str) -> String {
        match compile(src, "t.cu") {
            Err(FrontendError::Semantic { message, .. }) => message,
            other => panic!("expected a semantic error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_program() {
        let p = compile("int main(void){return 0;}", "t.cu").unwrap();
        assert_eq!(p.functions.len(), 1);
        assert_eq!(p.kernels().count(), 0);
    }

    #[test]
    fn kernel_spaces_and_dynamic_shared() {
        let src = "__global__ void k(int *a) { extern __shared__ int s[]; s[0] = a[0]; }\n\
                   int main(void) { return 0; }";
        let p = compile(src, "t.cu").unwrap();
        let k = p.function_named("k").unwrap();
        assert_eq!(p.function(k).space, ExecSpace::Kernel);
        let dynamic = p.dynamic_shared_of(k);
        assert_eq!(dynamic.len(), 1);
        assert_eq!(p.shared[dynamic[0].index()].name, "s");
    }

    #[test]
    fn main_may_not_synchronize_threads() {
        let m = semantic_error("int main(void) { __syncthreads(); return 0; }");
        assert!(m.contains("__syncthreads"), "{m}");
    }

    #[test]
    fn kernels_return_void() {
        let m = semantic_error("__global__ int f(void) { return 1; }\nint main(void){return 0;}");
        assert!(m.contains("must return void"), "{m}");
    }

    #[test]
    fn kernels_cannot_call_host_functions() {
        let m = semantic_error(
            "int h(void) { return 1; }\n__global__ void k(void) { h(); }\nint main(void){return 0;}",
        );
        assert!(m.contains("cannot call host function"), "{m}");
    }

    #[test]
    fn unknown_cuda_calls_are_rejected() {
        let m = semantic_error("int main(void) { cudaMallocManaged(0, 4); return 0; }");
        assert!(m.contains("unsupported CUDA runtime function"), "{m}");
    }

    #[test]
    fn device_side_launches_are_rejected() {
        let m = semantic_error(
            "__global__ void k(void) {}\n__global__ void j(void) { k<<<1, 1>>>(); }\nint main(void){return 0;}",
        );
        assert!(m.contains("device code"), "{m}");
    }

    #[test]
    fn integers_never_become_pointers() {
        let m = semantic_error("int main(void) { int *p = 5; return 0; }");
        assert!(m.contains("pointer"), "{m}");
        compile("int main(void) { int *p = 0; p = NULL; return p == 0; }", "t.cu").unwrap();
    }

    #[test]
    fn undeclared_names() {
        let m = semantic_error("int main(void) { return x; }");
        assert!(m.contains("undeclared identifier `x`"), "{m}");
    }

    #[test]
    fn main_signature_is_checked() {
        assert!(semantic_error("void main(void) {}").contains("int main(void)"));
        assert!(semantic_error("int f(void) { return 0; }").contains("no `main`"));
    }

    #[test]
    fn device_globals_and_array_dims() {
        let src = "#define W 4\n__device__ int g[W * 2];\nint h = 3;\nint main(void){ return h; }";
        let p = compile(src, "t.cu").unwrap();
        assert_eq!(p.globals[0].space, GlobalSpace::Device);
        assert_eq!(p.globals[0].ty, CType::Array(Box::new(CType::Int), Some(8)));
        assert_eq!(p.globals[1].init.len(), 1);
    }

    #[test]
    fn launch_configuration() {
        let src = "__global__ void k(int *a, int *b) {}\n\
                   int main(void) { int *d; k<<<1, 2, 2 * sizeof(int)>>>(d, d); return 0; }";
        let p = compile(src, "t.cu").unwrap();
        let launch = p
            .exprs
            .iter()
            .find_map(|e| match &e.kind {
                ExprKind::Launch { shmem, stream, args, .. } => Some((*shmem, *stream, args.len())),
                _ => None,
            })
            .unwrap();
        assert!(launch.0.is_some());
        assert!(launch.1.is_none());
        assert_eq!(launch.2, 2);
    }

    #[test]
    fn break_outside_loop() {
        assert!(semantic_error("int main(void) { break; return 0; }").contains("outside of a loop"));
    }
}
