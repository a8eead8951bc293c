//! Renders a syntax tree back to source text. Expressions are fully
//! parenthesized, so re-parsing the output yields the same tree.

use std::fmt::Write;

use super::ast::*;

pub fn pretty(tu: &TranslationUnit) -> String {
    let mut p = Printer::default();
    for item in &tu.items {
        match item {
            ExternalDecl::Vars(vars) => {
                p.vars(vars);
                p.out.push('\n');
            }
            ExternalDecl::Prototype(sig) => {
                p.signature(sig.attrs, &sig.ret, &sig.name, &sig.params);
                p.out.push_str(";\n");
            }
            ExternalDecl::Function(f) => {
                p.signature(f.attrs, &f.ret, &f.name, &f.params);
                p.out.push(' ');
                p.block(&f.body);
                p.out.push('\n');
            }
        }
    }
    p.out
}

pub fn pretty_expr(e: &Expr) -> String {
    let mut p = Printer::default();
    p.expr(e);
    p.out
}

#[derive(Default)]
struct Printer {
    out: String,
    indent: usize,
}

fn base_name(b: BaseType) -> &'static str {
    match b {
        BaseType::Void => "void",
        BaseType::Char => "char",
        BaseType::Int => "int",
        BaseType::UInt => "unsigned int",
        BaseType::Long => "long",
        BaseType::ULong => "unsigned long",
        BaseType::Float => "float",
        BaseType::Double => "double",
    }
}

impl Printer {
    fn newline(&mut self) {
        self.out.push('\n');
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
    }

    fn signature(&mut self, attrs: FnAttrs, ret: &TypeName, name: &str, params: &[Param]) {
        for (on, word) in [
            (attrs.global, "__global__ "),
            (attrs.host, "__host__ "),
            (attrs.device, "__device__ "),
            (attrs.noinline, "__noinline__ "),
            (attrs.forceinline, "__forceinline__ "),
        ] {
            if on {
                self.out.push_str(word);
            }
        }
        self.type_prefix(ret);
        self.out.push_str(name);
        self.out.push('(');
        if params.is_empty() {
            self.out.push_str("void");
        }
        for (i, param) in params.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.type_prefix(&param.ty);
            if let Some(n) = &param.name {
                self.out.push_str(n);
            }
            self.dims(&param.ty);
        }
        self.out.push(')');
    }

    fn type_prefix(&mut self, ty: &TypeName) {
        self.out.push_str(base_name(ty.base));
        self.out.push(' ');
        for _ in 0..ty.pointer_depth {
            self.out.push('*');
        }
    }

    fn dims(&mut self, ty: &TypeName) {
        for d in &ty.array_dims {
            self.out.push('[');
            if let Some(e) = d {
                self.expr(e);
            }
            self.out.push(']');
        }
    }

    fn vars(&mut self, vars: &[VarDecl]) {
        let q = vars[0].quals;
        for (on, word) in [
            (q.is_extern, "extern "),
            (q.is_static, "static "),
            (q.is_const, "const "),
            (q.shared, "__shared__ "),
            (q.device, "__device__ "),
        ] {
            if on {
                self.out.push_str(word);
            }
        }
        self.out.push_str(base_name(vars[0].ty.base));
        self.out.push(' ');
        for (i, v) in vars.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            for _ in 0..v.ty.pointer_depth {
                self.out.push('*');
            }
            self.out.push_str(&v.name);
            self.dims(&v.ty);
            match &v.init {
                Some(Initializer::Expr(e)) => {
                    self.out.push_str(" = ");
                    self.expr(e);
                }
                Some(Initializer::List(items)) => {
                    self.out.push_str(" = {");
                    for (j, e) in items.iter().enumerate() {
                        if j > 0 {
                            self.out.push_str(", ");
                        }
                        self.expr(e);
                    }
                    self.out.push('}');
                }
                None => {}
            }
        }
        self.out.push(';');
    }

    fn block(&mut self, b: &Block) {
        self.out.push('{');
        self.indent += 1;
        for s in &b.stmts {
            self.newline();
            self.stmt(s);
        }
        self.indent -= 1;
        self.newline();
        self.out.push('}');
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Decl(vars) => self.vars(vars),
            StmtKind::Expr(e) => {
                self.expr(e);
                self.out.push(';');
            }
            StmtKind::Empty => self.out.push(';'),
            StmtKind::Block(b) => self.block(b),
            StmtKind::If(c, t, e) => {
                self.out.push_str("if (");
                self.expr(c);
                self.out.push_str(") ");
                self.stmt(t);
                if let Some(e) = e {
                    self.out.push_str(" else ");
                    self.stmt(e);
                }
            }
            StmtKind::While(c, body) => {
                self.out.push_str("while (");
                self.expr(c);
                self.out.push_str(") ");
                self.stmt(body);
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                self.out.push_str("for (");
                match init {
                    Some(i) => self.stmt(i),
                    None => self.out.push(';'),
                }
                self.out.push(' ');
                if let Some(c) = cond {
                    self.expr(c);
                }
                self.out.push_str("; ");
                if let Some(st) = step {
                    self.expr(st);
                }
                self.out.push_str(") ");
                self.stmt(body);
            }
            StmtKind::Return(v) => {
                self.out.push_str("return");
                if let Some(v) = v {
                    self.out.push(' ');
                    self.expr(v);
                }
                self.out.push(';');
            }
            StmtKind::Break => self.out.push_str("break;"),
            StmtKind::Continue => self.out.push_str("continue;"),
        }
    }

    fn paren(&mut self, e: &Expr) {
        self.out.push('(');
        self.expr(e);
        self.out.push(')');
    }

    fn list(&mut self, items: &[Expr]) {
        for (i, a) in items.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.expr(a);
        }
    }

    fn expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::IntLit(t)
            | ExprKind::FloatLit(t)
            | ExprKind::CharLit(t)
            | ExprKind::StrLit(t)
            | ExprKind::Ident(t) => self.out.push_str(t),
            ExprKind::Member(base, field) => {
                self.paren(base);
                let _ = write!(self.out, ".{field}");
            }
            ExprKind::Unary(op, a) => {
                let (pre, post) = match op {
                    UnaryOp::AddrOf => ("&", ""),
                    UnaryOp::Deref => ("*", ""),
                    UnaryOp::Neg => ("-", ""),
                    UnaryOp::Plus => ("+", ""),
                    UnaryOp::Not => ("!", ""),
                    UnaryOp::BitNot => ("~", ""),
                    UnaryOp::PreInc => ("++", ""),
                    UnaryOp::PreDec => ("--", ""),
                    UnaryOp::PostInc => ("", "++"),
                    UnaryOp::PostDec => ("", "--"),
                };
                self.out.push_str(pre);
                self.paren(a);
                self.out.push_str(post);
            }
            ExprKind::Binary(op, a, b) => {
                self.paren(a);
                let _ = write!(self.out, " {} ", op.symbol());
                self.paren(b);
            }
            ExprKind::Assign(op, a, b) => {
                self.paren(a);
                let sym = op.map_or(String::from("="), |o| format!("{}=", o.symbol()));
                let _ = write!(self.out, " {sym} ");
                self.paren(b);
            }
            ExprKind::Cond(c, a, b) => {
                self.paren(c);
                self.out.push_str(" ? ");
                self.paren(a);
                self.out.push_str(" : ");
                self.paren(b);
            }
            ExprKind::Call(name, args) => {
                self.out.push_str(name);
                self.out.push('(');
                self.list(args);
                self.out.push(')');
            }
            ExprKind::Index(a, i) => {
                self.paren(a);
                self.out.push('[');
                self.expr(i);
                self.out.push(']');
            }
            ExprKind::Sizeof(SizeofArg::Type(t)) => {
                self.out.push_str("sizeof(");
                self.type_prefix(t);
                self.dims(t);
                self.out.push(')');
            }
            ExprKind::Sizeof(SizeofArg::Expr(a)) => {
                self.out.push_str("sizeof ");
                self.paren(a);
            }
            ExprKind::Cast(t, a) => {
                self.out.push('(');
                self.type_prefix(t);
                self.dims(t);
                self.out.push(')');
                self.paren(a);
            }
            ExprKind::Launch {
                kernel,
                config,
                args,
            } => {
                self.out.push_str(kernel);
                self.out.push_str("<<<");
                for (i, c) in config.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.paren(c);
                }
                self.out.push_str(">>>(");
                self.list(args);
                self.out.push(')');
            }
        }
    }
}
