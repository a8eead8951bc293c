//! Recursive-descent parser for the CUDA-C subset.

use super::ast::*;
use super::lexer::{Token, TokenKind};
use super::FrontendError;
use crate::diag::SourceLoc;

const TYPE_WORDS: &[&str] = &[
    "void",
    "char",
    "int",
    "unsigned",
    "signed",
    "long",
    "float",
    "double",
    "size_t",
    "cudaError_t",
    "cudaStream_t",
    "cudaEvent_t",
    "cudaMemcpyKind",
];

const QUALIFIER_WORDS: &[&str] = &[
    "const",
    "static",
    "extern",
    "inline",
    "__shared__",
    "__device__",
    "__host__",
    "__global__",
    "__noinline__",
    "__forceinline__",
    "__restrict__",
];

pub fn parse(tokens: &[Token], file: &str) -> Result<TranslationUnit, FrontendError> {
    let mut p = Parser {
        toks: tokens,
        pos: 0,
        eof: SourceLoc::new(file.into(), tokens.last().map_or(1, |t| t.loc.line), 0),
    };
    let mut items = Vec::new();
    while !p.at_end() {
        items.push(p.external_decl()?);
    }
    Ok(TranslationUnit {
        file: file.to_string(),
        items,
    })
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    eof: SourceLoc,
}

#[derive(Default)]
struct Specifiers {
    attrs: FnAttrs,
    quals: VarQuals,
}

impl<'a> Parser<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&'a Token> {
        self.toks.get(self.pos + n)
    }

    fn loc(&self) -> SourceLoc {
        self.peek().map_or_else(|| self.eof.clone(), |t| t.loc.clone())
    }

    fn is(&self, kind: TokenKind) -> bool {
        matches!(self.peek(), Some(t) if t.kind == kind)
    }

    fn is_word(&self, word: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Ident && t.text == word)
    }

    fn error<T>(&self, expected: &str) -> Result<T, FrontendError> {
        let found = self
            .peek()
            .map_or_else(|| "end of input".to_string(), |t| format!("`{}`", t.text));
        Err(FrontendError::Parse {
            loc: self.loc(),
            expected: expected.to_string(),
            found,
        })
    }

    fn bump(&mut self) -> &'a Token {
        let t = &self.toks[self.pos];
        self.pos += 1;
        t
    }

    fn eat(&mut self, kind: TokenKind) -> bool {
        if self.is(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<&'a Token, FrontendError> {
        if self.is(kind) {
            Ok(self.bump())
        } else {
            self.error(what)
        }
    }

    fn ident(&mut self) -> Result<&'a Token, FrontendError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident && !is_reserved(&t.text) => Ok(self.bump()),
            _ => self.error("identifier"),
        }
    }

    fn starts_type(&self) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Ident
            && (TYPE_WORDS.contains(&t.text.as_str()) || QUALIFIER_WORDS.contains(&t.text.as_str())))
    }

    fn specifiers(&mut self) -> Result<(Specifiers, BaseType), FrontendError> {
        let mut spec = Specifiers::default();
        let mut words: Vec<&str> = Vec::new();
        let start = self.loc();
        while let Some(t) = self.peek() {
            if t.kind != TokenKind::Ident {
                break;
            }
            match t.text.as_str() {
                "const" => spec.quals.is_const = true,
                "static" => spec.quals.is_static = true,
                "extern" => spec.quals.is_extern = true,
                "inline" | "__restrict__" => {}
                "__shared__" => spec.quals.shared = true,
                "__device__" => {
                    spec.quals.device = true;
                    spec.attrs.device = true;
                }
                "__host__" => spec.attrs.host = true,
                "__global__" => spec.attrs.global = true,
                "__noinline__" => spec.attrs.noinline = true,
                "__forceinline__" => spec.attrs.forceinline = true,
                w if TYPE_WORDS.contains(&w) => words.push(&t.text),
                _ => break,
            }
            self.pos += 1;
        }
        let base = base_type(&words).ok_or_else(|| FrontendError::Parse {
            loc: start,
            expected: "type specifier".into(),
            found: if words.is_empty() {
                "nothing".into()
            } else {
                format!("`{}`", words.join(" "))
            },
        })?;
        Ok((spec, base))
    }

    fn pointer_stars(&mut self) -> u32 {
        let mut depth = 0;
        loop {
            if self.eat(TokenKind::Star) {
                depth += 1;
            } else if self.is_word("const") || self.is_word("__restrict__") {
                self.pos += 1;
            } else {
                return depth;
            }
        }
    }

    fn array_dims(&mut self) -> Result<Vec<Option<Expr>>, FrontendError> {
        let mut dims = Vec::new();
        while self.eat(TokenKind::LBracket) {
            if self.eat(TokenKind::RBracket) {
                dims.push(None);
            } else {
                let e = self.expr()?;
                self.expect(TokenKind::RBracket, "`]`")?;
                dims.push(Some(e));
            }
        }
        Ok(dims)
    }

    fn external_decl(&mut self) -> Result<ExternalDecl, FrontendError> {
        let loc = self.loc();
        let (spec, base) = self.specifiers()?;
        let depth = self.pointer_stars();
        let name_tok = self.ident()?;
        if self.is(TokenKind::LParen) {
            let params = self.params()?;
            let ret = TypeName {
                base,
                pointer_depth: depth,
                array_dims: Vec::new(),
            };
            if self.eat(TokenKind::Semi) {
                return Ok(ExternalDecl::Prototype(FunctionSig {
                    attrs: spec.attrs,
                    ret,
                    name: name_tok.text.clone(),
                    params,
                    loc,
                }));
            }
            let body = self.block()?;
            return Ok(ExternalDecl::Function(FunctionDef {
                attrs: spec.attrs,
                ret,
                name: name_tok.text.clone(),
                params,
                body,
                loc,
            }));
        }
        let vars = self.declarator_list(spec.quals, base, depth, name_tok)?;
        Ok(ExternalDecl::Vars(vars))
    }

    fn params(&mut self) -> Result<Vec<Param>, FrontendError> {
        self.expect(TokenKind::LParen, "`(`")?;
        let mut params = Vec::new();
        if self.eat(TokenKind::RParen) {
            return Ok(params);
        }
        if self.is_word("void") && matches!(self.peek_at(1), Some(t) if t.kind == TokenKind::RParen)
        {
            self.pos += 2;
            return Ok(params);
        }
        loop {
            let loc = self.loc();
            let (_, base) = self.specifiers()?;
            let depth = self.pointer_stars();
            let name = match self.peek() {
                Some(t) if t.kind == TokenKind::Ident && !is_reserved(&t.text) => {
                    Some(self.bump().text.clone())
                }
                _ => None,
            };
            let array_dims = self.array_dims()?;
            params.push(Param {
                ty: TypeName {
                    base,
                    pointer_depth: depth,
                    array_dims,
                },
                name,
                loc,
            });
            if self.eat(TokenKind::RParen) {
                return Ok(params);
            }
            self.expect(TokenKind::Comma, "`,` or `)`")?;
        }
    }

    /// Parses the rest of a declaration after its first declarator name.
    fn declarator_list(
        &mut self,
        quals: VarQuals,
        base: BaseType,
        first_depth: u32,
        first_name: &Token,
    ) -> Result<Vec<VarDecl>, FrontendError> {
        let mut vars = Vec::new();
        let mut depth = first_depth;
        let mut name_tok = first_name;
        loop {
            let array_dims = self.array_dims()?;
            let init = if self.eat(TokenKind::Assign) {
                Some(self.initializer()?)
            } else {
                None
            };
            vars.push(VarDecl {
                quals,
                ty: TypeName {
                    base,
                    pointer_depth: depth,
                    array_dims,
                },
                name: name_tok.text.clone(),
                init,
                loc: name_tok.loc.clone(),
            });
            if self.eat(TokenKind::Semi) {
                return Ok(vars);
            }
            self.expect(TokenKind::Comma, "`,` or `;`")?;
            depth = self.pointer_stars();
            name_tok = self.ident()?;
        }
    }

    fn initializer(&mut self) -> Result<Initializer, FrontendError> {
        if self.eat(TokenKind::LBrace) {
            let mut items = Vec::new();
            if !self.eat(TokenKind::RBrace) {
                loop {
                    items.push(self.assignment()?);
                    if self.eat(TokenKind::RBrace) {
                        break;
                    }
                    self.expect(TokenKind::Comma, "`,` or `}`")?;
                    if self.eat(TokenKind::RBrace) {
                        break;
                    }
                }
            }
            Ok(Initializer::List(items))
        } else {
            Ok(Initializer::Expr(self.assignment()?))
        }
    }

    fn block(&mut self) -> Result<Block, FrontendError> {
        let loc = self.loc();
        self.expect(TokenKind::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        while !self.eat(TokenKind::RBrace) {
            if self.at_end() {
                return self.error("`}`");
            }
            stmts.push(self.stmt()?);
        }
        Ok(Block { stmts, loc })
    }

    fn stmt(&mut self) -> Result<Stmt, FrontendError> {
        let loc = self.loc();
        let kind = if self.is(TokenKind::LBrace) {
            StmtKind::Block(self.block()?)
        } else if self.eat(TokenKind::Semi) {
            StmtKind::Empty
        } else if self.starts_type() {
            let (spec, base) = self.specifiers()?;
            let depth = self.pointer_stars();
            let name = self.ident()?;
            StmtKind::Decl(self.declarator_list(spec.quals, base, depth, name)?)
        } else if self.is_word("if") {
            self.pos += 1;
            self.expect(TokenKind::LParen, "`(`")?;
            let cond = self.expr()?;
            self.expect(TokenKind::RParen, "`)`")?;
            let then = Box::new(self.stmt()?);
            let els = if self.is_word("else") {
                self.pos += 1;
                Some(Box::new(self.stmt()?))
            } else {
                None
            };
            StmtKind::If(cond, then, els)
        } else if self.is_word("while") {
            self.pos += 1;
            self.expect(TokenKind::LParen, "`(`")?;
            let cond = self.expr()?;
            self.expect(TokenKind::RParen, "`)`")?;
            StmtKind::While(cond, Box::new(self.stmt()?))
        } else if self.is_word("for") {
            self.pos += 1;
            self.expect(TokenKind::LParen, "`(`")?;
            let init = if self.eat(TokenKind::Semi) {
                None
            } else if self.starts_type() {
                Some(Box::new(self.stmt()?))
            } else {
                let e_loc = self.loc();
                let e = self.expr()?;
                self.expect(TokenKind::Semi, "`;`")?;
                Some(Box::new(Stmt {
                    kind: StmtKind::Expr(e),
                    loc: e_loc,
                }))
            };
            let cond = if self.is(TokenKind::Semi) {
                None
            } else {
                Some(self.expr()?)
            };
            self.expect(TokenKind::Semi, "`;`")?;
            let step = if self.is(TokenKind::RParen) {
                None
            } else {
                Some(self.expr()?)
            };
            self.expect(TokenKind::RParen, "`)`")?;
            StmtKind::For {
                init,
                cond,
                step,
                body: Box::new(self.stmt()?),
            }
        } else if self.is_word("return") {
            self.pos += 1;
            let value = if self.is(TokenKind::Semi) {
                None
            } else {
                Some(self.expr()?)
            };
            self.expect(TokenKind::Semi, "`;`")?;
            StmtKind::Return(value)
        } else if self.is_word("break") {
            self.pos += 1;
            self.expect(TokenKind::Semi, "`;`")?;
            StmtKind::Break
        } else if self.is_word("continue") {
            self.pos += 1;
            self.expect(TokenKind::Semi, "`;`")?;
            StmtKind::Continue
        } else if self.is_word("do") || self.is_word("switch") || self.is_word("goto") {
            return self.error("a supported statement");
        } else {
            let e = self.expr()?;
            self.expect(TokenKind::Semi, "`;`")?;
            StmtKind::Expr(e)
        };
        Ok(Stmt { kind, loc })
    }

    pub fn expr(&mut self) -> Result<Expr, FrontendError> {
        self.assignment()
    }

    fn assignment(&mut self) -> Result<Expr, FrontendError> {
        let lhs = self.conditional()?;
        let op = match self.peek().map(|t| t.kind) {
            Some(TokenKind::Assign) => None,
            Some(TokenKind::PlusAssign) => Some(BinaryOp::Add),
            Some(TokenKind::MinusAssign) => Some(BinaryOp::Sub),
            Some(TokenKind::StarAssign) => Some(BinaryOp::Mul),
            Some(TokenKind::SlashAssign) => Some(BinaryOp::Div),
            Some(TokenKind::PercentAssign) => Some(BinaryOp::Rem),
            Some(TokenKind::AmpAssign) => Some(BinaryOp::BitAnd),
            Some(TokenKind::PipeAssign) => Some(BinaryOp::BitOr),
            Some(TokenKind::CaretAssign) => Some(BinaryOp::BitXor),
            Some(TokenKind::ShlAssign) => Some(BinaryOp::Shl),
            Some(TokenKind::ShrAssign) => Some(BinaryOp::Shr),
            _ => return Ok(lhs),
        };
        let loc = self.bump().loc.clone();
        let rhs = self.assignment()?;
        Ok(Expr::new(ExprKind::Assign(op, Box::new(lhs), Box::new(rhs)), loc))
    }

    fn conditional(&mut self) -> Result<Expr, FrontendError> {
        let cond = self.binary(0)?;
        if !self.is(TokenKind::Question) {
            return Ok(cond);
        }
        let loc = self.bump().loc.clone();
        let then = self.expr()?;
        self.expect(TokenKind::Colon, "`:`")?;
        let els = self.conditional()?;
        Ok(Expr::new(
            ExprKind::Cond(Box::new(cond), Box::new(then), Box::new(els)),
            loc,
        ))
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, FrontendError> {
        let mut lhs = self.unary()?;
        loop {
            let Some((op, prec)) = self.peek().and_then(|t| binary_op(t.kind)) else {
                return Ok(lhs);
            };
            if prec < min_prec {
                return Ok(lhs);
            }
            let loc = self.bump().loc.clone();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), loc);
        }
    }

    fn is_paren_type(&self) -> bool {
        self.is(TokenKind::LParen)
            && matches!(self.peek_at(1), Some(t) if t.kind == TokenKind::Ident
                && (TYPE_WORDS.contains(&t.text.as_str()) || t.text == "const"))
    }

    fn type_name(&mut self) -> Result<TypeName, FrontendError> {
        let (_, base) = self.specifiers()?;
        let depth = self.pointer_stars();
        let array_dims = self.array_dims()?;
        Ok(TypeName {
            base,
            pointer_depth: depth,
            array_dims,
        })
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        let loc = self.loc();
        let op = match self.peek().map(|t| t.kind) {
            Some(TokenKind::Amp) => Some(UnaryOp::AddrOf),
            Some(TokenKind::Star) => Some(UnaryOp::Deref),
            Some(TokenKind::Minus) => Some(UnaryOp::Neg),
            Some(TokenKind::Plus) => Some(UnaryOp::Plus),
            Some(TokenKind::Bang) => Some(UnaryOp::Not),
            Some(TokenKind::Tilde) => Some(UnaryOp::BitNot),
            Some(TokenKind::PlusPlus) => Some(UnaryOp::PreInc),
            Some(TokenKind::MinusMinus) => Some(UnaryOp::PreDec),
            _ => None,
        };
        if let Some(op) = op {
            self.pos += 1;
            let operand = self.unary()?;
            return Ok(Expr::new(ExprKind::Unary(op, Box::new(operand)), loc));
        }
        if self.is_word("sizeof") {
            self.pos += 1;
            if self.is_paren_type() {
                self.pos += 1;
                let ty = self.type_name()?;
                self.expect(TokenKind::RParen, "`)`")?;
                return Ok(Expr::new(ExprKind::Sizeof(SizeofArg::Type(ty)), loc));
            }
            let operand = self.unary()?;
            return Ok(Expr::new(
                ExprKind::Sizeof(SizeofArg::Expr(Box::new(operand))),
                loc,
            ));
        }
        if self.is_paren_type() {
            self.pos += 1;
            let ty = self.type_name()?;
            self.expect(TokenKind::RParen, "`)`")?;
            let operand = self.unary()?;
            return Ok(Expr::new(ExprKind::Cast(ty, Box::new(operand)), loc));
        }
        self.postfix()
    }

    fn args(&mut self) -> Result<Vec<Expr>, FrontendError> {
        self.expect(TokenKind::LParen, "`(`")?;
        let mut args = Vec::new();
        if self.eat(TokenKind::RParen) {
            return Ok(args);
        }
        loop {
            args.push(self.assignment()?);
            if self.eat(TokenKind::RParen) {
                return Ok(args);
            }
            self.expect(TokenKind::Comma, "`,` or `)`")?;
        }
    }

    fn postfix(&mut self) -> Result<Expr, FrontendError> {
        let mut e = self.primary()?;
        loop {
            let loc = self.loc();
            match self.peek().map(|t| t.kind) {
                Some(TokenKind::LBracket) => {
                    self.pos += 1;
                    let idx = self.expr()?;
                    self.expect(TokenKind::RBracket, "`]`")?;
                    e = Expr::new(ExprKind::Index(Box::new(e), Box::new(idx)), loc);
                }
                Some(TokenKind::Dot) => {
                    self.pos += 1;
                    let field = self.ident()?.text.clone();
                    e = Expr::new(ExprKind::Member(Box::new(e), field), loc);
                }
                Some(TokenKind::PlusPlus) => {
                    self.pos += 1;
                    e = Expr::new(ExprKind::Unary(UnaryOp::PostInc, Box::new(e)), loc);
                }
                Some(TokenKind::MinusMinus) => {
                    self.pos += 1;
                    e = Expr::new(ExprKind::Unary(UnaryOp::PostDec, Box::new(e)), loc);
                }
                Some(TokenKind::LParen) => {
                    let ExprKind::Ident(name) = &e.kind else {
                        return self.error("`;` (only named functions can be called)");
                    };
                    let name = name.clone();
                    let args = self.args()?;
                    e = Expr::new(ExprKind::Call(name, args), e.loc);
                }
                Some(TokenKind::LaunchOpen) => {
                    let ExprKind::Ident(name) = &e.kind else {
                        return self.error("kernel name before `<<<`");
                    };
                    let kernel = name.clone();
                    self.pos += 1;
                    let mut config = vec![self.assignment()?];
                    while self.eat(TokenKind::Comma) {
                        config.push(self.assignment()?);
                    }
                    self.expect(TokenKind::LaunchClose, "`>>>`")?;
                    if !(2..=4).contains(&config.len()) {
                        return Err(FrontendError::Parse {
                            loc,
                            expected: "2 to 4 launch parameters".into(),
                            found: format!("{}", config.len()),
                        });
                    }
                    let args = self.args()?;
                    e = Expr::new(
                        ExprKind::Launch {
                            kernel,
                            config,
                            args,
                        },
                        e.loc,
                    );
                }
                _ => return Ok(e),
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, FrontendError> {
        let Some(t) = self.peek() else {
            return self.error("expression");
        };
        let loc = t.loc.clone();
        let kind = match t.kind {
            TokenKind::Int => ExprKind::IntLit(t.text.clone()),
            TokenKind::Float => ExprKind::FloatLit(t.text.clone()),
            TokenKind::Char => ExprKind::CharLit(t.text.clone()),
            TokenKind::Str => {
                // adjacent literals concatenate
                let mut s = t.text.clone();
                self.pos += 1;
                while let Some(n) = self.peek().filter(|n| n.kind == TokenKind::Str) {
                    s.pop();
                    s.push_str(&n.text[1..]);
                    self.pos += 1;
                }
                return Ok(Expr::new(ExprKind::StrLit(s), loc));
            }
            TokenKind::Ident if !is_reserved(&t.text) => ExprKind::Ident(t.text.clone()),
            TokenKind::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                return Ok(inner);
            }
            _ => return self.error("expression"),
        };
        self.pos += 1;
        Ok(Expr::new(kind, loc))
    }
}

fn binary_op(kind: TokenKind) -> Option<(BinaryOp, u8)> {
    use TokenKind as T;
    Some(match kind {
        T::OrOr => (BinaryOp::Or, 1),
        T::AndAnd => (BinaryOp::And, 2),
        T::Pipe => (BinaryOp::BitOr, 3),
        T::Caret => (BinaryOp::BitXor, 4),
        T::Amp => (BinaryOp::BitAnd, 5),
        T::EqEq => (BinaryOp::Eq, 6),
        T::Ne => (BinaryOp::Ne, 6),
        T::Lt => (BinaryOp::Lt, 7),
        T::Le => (BinaryOp::Le, 7),
        T::Gt => (BinaryOp::Gt, 7),
        T::Ge => (BinaryOp::Ge, 7),
        T::Shl => (BinaryOp::Shl, 8),
        T::Shr => (BinaryOp::Shr, 8),
        T::Plus => (BinaryOp::Add, 9),
        T::Minus => (BinaryOp::Sub, 9),
        T::Star => (BinaryOp::Mul, 10),
        T::Slash => (BinaryOp::Div, 10),
        T::Percent => (BinaryOp::Rem, 10),
        _ => return None,
    })
}

fn is_reserved(word: &str) -> bool {
    TYPE_WORDS.contains(&word)
        || QUALIFIER_WORDS.contains(&word)
        || matches!(
            word,
            "if" | "else"
                | "while"
                | "for"
                | "do"
                | "return"
                | "break"
                | "continue"
                | "sizeof"
                | "switch"
                | "goto"
                | "struct"
                | "union"
                | "typedef"
        )
}

fn base_type(words: &[&str]) -> Option<BaseType> {
    let count = |w: &str| words.iter().filter(|x| **x == w).count();
    let unsigned = count("unsigned") > 0;
    let signed = count("signed") > 0;
    if unsigned && signed {
        return None;
    }
    let longs = count("long");
    let rest: Vec<&str> = words
        .iter()
        .copied()
        .filter(|w| !matches!(*w, "unsigned" | "signed" | "long" | "int"))
        .collect();
    let ints = count("int");
    if ints > 1 || longs > 2 {
        return None;
    }
    match rest.as_slice() {
        [] => Some(match (unsigned, longs) {
            (_, 0) if !unsigned && !signed && ints == 0 => return None,
            (false, 0) => BaseType::Int,
            (true, 0) => BaseType::UInt,
            (false, _) => BaseType::Long,
            (true, _) => BaseType::ULong,
        }),
        [one] if longs == 0 && ints == 0 => match *one {
            "void" if !unsigned && !signed => Some(BaseType::Void),
            "char" if !unsigned => Some(BaseType::Char),
            "float" if !unsigned && !signed => Some(BaseType::Float),
            "double" if !unsigned && !signed => Some(BaseType::Double),
            "size_t" if !unsigned && !signed => Some(BaseType::ULong),
            "cudaError_t" | "cudaStream_t" | "cudaEvent_t" | "cudaMemcpyKind"
                if !unsigned && !signed =>
            {
                Some(BaseType::Int)
            }
            _ => None,
        },
        ["double"] if longs == 1 && !unsigned && !signed => Some(BaseType::Double),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::lexer::tokenize;

    fn parse_src(src: &str) -> Result<TranslationUnit, FrontendError> {
        parse(&tokenize(src, "t.cu")?, "t.cu")
    }

    fn parse_expr(src: &str) -> Expr {
        let tu = parse_src(&format!("void f(void) {{ {src}; }}")).unwrap();
        let f = tu.function("f").unwrap();
        match &f.body.stmts[0].kind {
            StmtKind::Expr(e) => e.clone(),
            other => panic!("not an expression: {other:?}"),
        }
    }

    #[test]
    fn minimal_main() {
        let tu = parse_src("int main(void){return 0;}").unwrap();
        assert_eq!(tu.functions().count(), 1);
        let main = tu.function("main").unwrap();
        assert!(main.params.is_empty());
        assert!(!main.attrs.global);
    }

    #[test]
    fn launch_with_shared_bytes() {
        let e = parse_expr("sum<<<1, NBLOCKS, NBLOCKS * sizeof(int)>>>(dev_out, dev_out)");
        let ExprKind::Launch {
            kernel,
            config,
            args,
        } = e.kind
        else {
            panic!("expected launch");
        };
        assert_eq!(kernel, "sum");
        assert_eq!(config.len(), 3);
        assert!(matches!(config[1].kind, ExprKind::Ident(ref n) if n == "NBLOCKS"));
        assert!(matches!(config[2].kind, ExprKind::Binary(BinaryOp::Mul, _, _)));
        assert_eq!(args.len(), 2);
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse_expr("a = b + c * d - e");
        let ExprKind::Assign(None, _, rhs) = e.kind else {
            panic!()
        };
        let ExprKind::Binary(BinaryOp::Sub, lhs, _) = rhs.kind else {
            panic!()
        };
        assert!(matches!(lhs.kind, ExprKind::Binary(BinaryOp::Add, _, _)));
    }

    #[test]
    fn declarations_with_mixed_declarators() {
        let tu = parse_src("int main(void){ int i, *dev_in, host[18]; return 0; }").unwrap();
        let StmtKind::Decl(vars) = &tu.function("main").unwrap().body.stmts[0].kind else {
            panic!()
        };
        assert_eq!(vars.len(), 3);
        assert_eq!(vars[1].ty.pointer_depth, 1);
        assert_eq!(vars[2].ty.array_dims.len(), 1);
    }

    #[test]
    fn kernel_attributes() {
        let tu = parse_src(
            "__global__ void k(int *p) { extern __shared__ int s[]; }\n\
             __host__ __device__ __noinline__ int h(int x) { return x; }",
        )
        .unwrap();
        let k = tu.function("k").unwrap();
        assert!(k.attrs.global);
        let StmtKind::Decl(vars) = &k.body.stmts[0].kind else {
            panic!()
        };
        assert!(vars[0].quals.is_extern && vars[0].quals.shared);
        assert_eq!(vars[0].ty.array_dims, vec![None]);
        let h = tu.function("h").unwrap();
        assert!(h.attrs.host && h.attrs.device && h.attrs.noinline);
    }

    #[test]
    fn errors_name_expected_and_found() {
        let err = parse_src("int main(void) { return 0 }").unwrap_err();
        match err {
            FrontendError::Parse {
                loc,
                expected,
                found,
            } => {
                assert_eq!(loc.line, 1);
                assert_eq!(expected, "`;`");
                assert_eq!(found, "`}`");
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_src("void f(void) { switch (x) {} }").is_err());
        assert!(parse_src("void f(void) { k<<<1>>>(); }").is_err());
    }

    #[test]
    fn base_type_combinations() {
        assert_eq!(base_type(&["unsigned"]), Some(BaseType::UInt));
        assert_eq!(base_type(&["unsigned", "char"]), None);
        assert_eq!(base_type(&["unsigned", "int"]), Some(BaseType::UInt));
        assert_eq!(base_type(&["long", "long"]), Some(BaseType::Long));
        assert_eq!(base_type(&["unsigned", "long"]), Some(BaseType::ULong));
        assert_eq!(base_type(&["size_t"]), Some(BaseType::ULong));
        assert_eq!(base_type(&["signed", "char"]), Some(BaseType::Char));
        assert_eq!(base_type(&["unsigned", "float"]), None);
        assert_eq!(base_type(&[]), None);
    }
}
