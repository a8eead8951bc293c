//! Tokenizer with a minimal preprocessor: `#include` lines are dropped and
//! object-like `#define`s are expanded in place.

use std::collections::HashMap;
use std::sync::Arc;

use super::FrontendError;
use crate::diag::SourceLoc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Ident,
    Int,
    Float,
    Char,
    Str,
    LaunchOpen,
    LaunchClose,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Dot,
    Question,
    Colon,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Amp,
    Pipe,
    Caret,
    Tilde,
    Bang,
    Shl,
    Shr,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    AndAnd,
    OrOr,
    Assign,
    PlusAssign,
    MinusAssign,
    StarAssign,
    SlashAssign,
    PercentAssign,
    AmpAssign,
    PipeAssign,
    CaretAssign,
    ShlAssign,
    ShrAssign,
    PlusPlus,
    MinusMinus,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub loc: SourceLoc,
}

// Longest first; `<<<`/`>>>` are handled separately.
const PUNCTUATORS: &[(&str, TokenKind)] = &[
    ("<<=", TokenKind::ShlAssign),
    (">>=", TokenKind::ShrAssign),
    ("<<", TokenKind::Shl),
    (">>", TokenKind::Shr),
    ("<=", TokenKind::Le),
    (">=", TokenKind::Ge),
    ("==", TokenKind::EqEq),
    ("!=", TokenKind::Ne),
    ("&&", TokenKind::AndAnd),
    ("||", TokenKind::OrOr),
    ("+=", TokenKind::PlusAssign),
    ("-=", TokenKind::MinusAssign),
    ("*=", TokenKind::StarAssign),
    ("/=", TokenKind::SlashAssign),
    ("%=", TokenKind::PercentAssign),
    ("&=", TokenKind::AmpAssign),
    ("|=", TokenKind::PipeAssign),
    ("^=", TokenKind::CaretAssign),
    ("++", TokenKind::PlusPlus),
    ("--", TokenKind::MinusMinus),
    ("(", TokenKind::LParen),
    (")", TokenKind::RParen),
    ("{", TokenKind::LBrace),
    ("}", TokenKind::RBrace),
    ("[", TokenKind::LBracket),
    ("]", TokenKind::RBracket),
    (";", TokenKind::Semi),
    (",", TokenKind::Comma),
    (".", TokenKind::Dot),
    ("?", TokenKind::Question),
    (":", TokenKind::Colon),
    ("+", TokenKind::Plus),
    ("-", TokenKind::Minus),
    ("*", TokenKind::Star),
    ("/", TokenKind::Slash),
    ("%", TokenKind::Percent),
    ("&", TokenKind::Amp),
    ("|", TokenKind::Pipe),
    ("^", TokenKind::Caret),
    ("~", TokenKind::Tilde),
    ("!", TokenKind::Bang),
    ("<", TokenKind::Lt),
    (">", TokenKind::Gt),
    ("=", TokenKind::Assign),
];

/// Tokenizes `source`, expanding object-like macros.
pub fn tokenize(source: &str, filename: &str) -> Result<Vec<Token>, FrontendError> {
    let file: Arc<str> = Arc::from(filename);
    let mut lexer = Lexer {
        src: source.as_bytes(),
        text: source,
        pos: 0,
        line: 1,
        col: 1,
        file,
        macros: HashMap::new(),
        out: Vec::new(),
        launch_depth: 0,
    };
    lexer.run()?;
    Ok(lexer.out)
}

struct Lexer<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
    line: u32,
    col: u32,
    file: Arc<str>,
    macros: HashMap<String, Vec<(TokenKind, String)>>,
    out: Vec<Token>,
    launch_depth: usize,
}

impl<'a> Lexer<'a> {
    fn loc(&self) -> SourceLoc {
        SourceLoc::new(self.file.clone(), self.line, self.col)
    }

    fn peek(&self, off: usize) -> u8 {
        self.src.get(self.pos + off).copied().unwrap_or(0)
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else if c & 0xC0 != 0x80 {
            self.col += 1;
        }
        c
    }

    fn error(&self, loc: SourceLoc, message: impl Into<String>) -> FrontendError {
        FrontendError::Lex {
            loc,
            message: message.into(),
        }
    }

    fn run(&mut self) -> Result<(), FrontendError> {
        let mut at_line_start = true;
        while self.pos < self.src.len() {
            let c = self.peek(0);
            if c == b'\n' {
                self.bump();
                at_line_start = true;
                continue;
            }
            if c.is_ascii_whitespace() {
                self.bump();
                continue;
            }
            if c == b'/' && self.peek(1) == b'/' {
                while self.pos < self.src.len() && self.peek(0) != b'\n' {
                    self.bump();
                }
                continue;
            }
            if c == b'/' && self.peek(1) == b'*' {
                let start = self.loc();
                self.bump();
                self.bump();
                loop {
                    if self.pos >= self.src.len() {
                        return Err(self.error(start, "unterminated comment"));
                    }
                    if self.peek(0) == b'*' && self.peek(1) == b'/' {
                        self.bump();
                        self.bump();
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            if c == b'#' && at_line_start {
                self.directive()?;
                continue;
            }
            at_line_start = false;
            let (kind, text, loc) = self.raw_token()?;
            self.emit(kind, text, loc, &mut Vec::new());
        }
        Ok(())
    }

    fn directive(&mut self) -> Result<(), FrontendError> {
        let loc = self.loc();
        let start = self.pos;
        while self.pos < self.src.len() && self.peek(0) != b'\n' {
            self.bump();
        }
        let line = &self.text[start + 1..self.pos];
        let line = line.trim();
        let (name, rest) = split_word(line);
        let rest = rest.trim_start();
        match name {
            "include" | "pragma" => Ok(()),
            "define" => {
                let (macro_name, _) = split_word(rest);
                if macro_name.is_empty() || !is_ident_start(macro_name.as_bytes()[0]) {
                    return Err(self.error(loc, "expected a macro name after #define"));
                }
                let after = &rest[macro_name.len()..];
                if after.starts_with('(') {
                    return Err(self.error(
                        loc,
                        format!("function-like macro `{macro_name}` is not supported"),
                    ));
                }
                let body = strip_line_comment(after.trim());
                let tokens = tokenize(body, &self.file)
                    .map_err(|_| self.error(loc.clone(), "malformed macro body"))?
                    .into_iter()
                    .map(|t| (t.kind, t.text))
                    .collect();
                self.macros.insert(macro_name.to_string(), tokens);
                Ok(())
            }
            "undef" => {
                let (macro_name, _) = split_word(rest);
                self.macros.remove(macro_name);
                Ok(())
            }
            other => Err(self.error(
                loc,
                format!("unsupported preprocessor directive `#{other}`"),
            )),
        }
    }

    /// Appends a token, expanding macros. `active` holds the macros being
    /// expanded so self-references are left alone.
    fn emit(&mut self, kind: TokenKind, text: String, loc: SourceLoc, active: &mut Vec<String>) {
        if kind == TokenKind::Ident && !active.contains(&text) {
            if let Some(body) = self.macros.get(&text).cloned() {
                active.push(text);
                for (k, t) in body {
                    self.emit(k, t, loc.clone(), active);
                }
                active.pop();
                return;
            }
        }
        self.out.push(Token { kind, text, loc });
    }

    fn prev_is_ident(&self) -> bool {
        matches!(self.out.last(), Some(t) if t.kind == TokenKind::Ident)
    }

    fn raw_token(&mut self) -> Result<(TokenKind, String, SourceLoc), FrontendError> {
        let loc = self.loc();
        let c = self.peek(0);
        let start = self.pos;
        if is_ident_start(c) {
            while is_ident_continue(self.peek(0)) {
                self.bump();
            }
            return Ok((TokenKind::Ident, self.text[start..self.pos].to_string(), loc));
        }
        if c.is_ascii_digit() || (c == b'.' && self.peek(1).is_ascii_digit()) {
            return self.number(loc);
        }
        if c == b'"' {
            return self.quoted(b'"', TokenKind::Str, loc);
        }
        if c == b'\'' {
            return self.quoted(b'\'', TokenKind::Char, loc);
        }
        if c == b'<' && self.peek(1) == b'<' && self.peek(2) == b'<' && self.prev_is_ident() {
            for _ in 0..3 {
                self.bump();
            }
            self.launch_depth += 1;
            return Ok((TokenKind::LaunchOpen, "<<<".into(), loc));
        }
        if c == b'>' && self.peek(1) == b'>' && self.peek(2) == b'>' && self.launch_depth > 0 {
            for _ in 0..3 {
                self.bump();
            }
            self.launch_depth -= 1;
            return Ok((TokenKind::LaunchClose, ">>>".into(), loc));
        }
        for (p, kind) in PUNCTUATORS {
            if self.src[self.pos..].starts_with(p.as_bytes()) {
                for _ in 0..p.len() {
                    self.bump();
                }
                return Ok((*kind, (*p).to_string(), loc));
            }
        }
        let ch = self.text[self.pos..].chars().next().unwrap_or('?');
        Err(self.error(loc, format!("illegal character `{ch}`")))
    }

    fn number(&mut self, loc: SourceLoc) -> Result<(TokenKind, String, SourceLoc), FrontendError> {
        let start = self.pos;
        let mut float = false;
        if self.peek(0) == b'0' && matches!(self.peek(1), b'x' | b'X') {
            self.bump();
            self.bump();
            while self.peek(0).is_ascii_hexdigit() {
                self.bump();
            }
        } else {
            while self.peek(0).is_ascii_digit() {
                self.bump();
            }
            if self.peek(0) == b'.' {
                float = true;
                self.bump();
                while self.peek(0).is_ascii_digit() {
                    self.bump();
                }
            }
            if matches!(self.peek(0), b'e' | b'E') {
                float = true;
                self.bump();
                if matches!(self.peek(0), b'+' | b'-') {
                    self.bump();
                }
                if !self.peek(0).is_ascii_digit() {
                    return Err(self.error(loc, "malformed exponent"));
                }
                while self.peek(0).is_ascii_digit() {
                    self.bump();
                }
            }
        }
        while matches!(self.peek(0), b'u' | b'U' | b'l' | b'L' | b'f' | b'F') {
            self.bump();
        }
        if is_ident_continue(self.peek(0)) {
            return Err(self.error(loc, "malformed numeric literal"));
        }
        let kind = if float { TokenKind::Float } else { TokenKind::Int };
        let text = self.text[start..self.pos].to_string();
        if !float && text.to_ascii_lowercase().contains('f') && !text.starts_with("0x") {
            return Err(self.error(loc, "malformed numeric literal"));
        }
        Ok((kind, text, loc))
    }

    fn quoted(
        &mut self,
        quote: u8,
        kind: TokenKind,
        loc: SourceLoc,
    ) -> Result<(TokenKind, String, SourceLoc), FrontendError> {
        let start = self.pos;
        self.bump();
        loop {
            if self.pos >= self.src.len() || self.peek(0) == b'\n' {
                let what = if quote == b'"' { "string" } else { "character" };
                return Err(self.error(loc, format!("unterminated {what} literal")));
            }
            match self.peek(0) {
                b'\\' => {
                    self.bump();
                    if self.pos < self.src.len() {
                        self.bump();
                    }
                }
                c if c == quote => {
                    self.bump();
                    break;
                }
                _ => {
                    self.bump();
                }
            }
        }
        Ok((kind, self.text[start..self.pos].to_string(), loc))
    }
}

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn is_ident_continue(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

fn split_word(s: &str) -> (&str, &str) {
    let s = s.trim_start();
    let end = s
        .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .unwrap_or(s.len());
    (&s[..end], &s[end..])
}

fn strip_line_comment(s: &str) -> &str {
    match s.find("//") {
        Some(i) => s[..i].trim_end(),
        None => s,
    }
}

/// Decodes the body of a quoted literal (quotes included in `text`).
pub fn unescape(text: &str) -> Result<Vec<u8>, String> {
    let inner = &text[1..text.len() - 1];
    let bytes = inner.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        i += 1;
        if c != b'\\' {
            out.push(c);
            continue;
        }
        let e = *bytes.get(i).ok_or("dangling escape")?;
        i += 1;
        out.push(match e {
            b'n' => b'\n',
            b't' => b'\t',
            b'r' => b'\r',
            b'a' => 7,
            b'b' => 8,
            b'f' => 12,
            b'v' => 11,
            b'\\' => b'\\',
            b'\'' => b'\'',
            b'"' => b'"',
            b'?' => b'?',
            b'x' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_hexdigit() {
                    i += 1;
                }
                let digits = &inner[start..i];
                u8::from_str_radix(digits, 16).map_err(|_| "bad hex escape")?
            }
            b'0'..=b'7' => {
                let start = i - 1;
                while i < bytes.len() && i - start < 3 && (b'0'..=b'7').contains(&bytes[i]) {
                    i += 1;
                }
                u8::from_str_radix(&inner[start..i], 8).map_err(|_| "bad octal escape")?
            }
            other => return Err(format!("unknown escape `\\{}`", other as char)),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src, "t.cu").unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn launch_statement_tokens() {
        let src = "#define NBLOCKS 2\n#define NTHREADS 9\nsum<<<NBLOCKS, NTHREADS>>>(a, b);";
        let toks = tokenize(src, "t.cu").unwrap();
        let got: Vec<(TokenKind, &str)> = toks.iter().map(|t| (t.kind, t.text.as_str())).collect();
        assert_eq!(
            got,
            vec![
                (Ident, "sum"),
                (LaunchOpen, "<<<"),
                (Int, "2"),
                (Comma, ","),
                (Int, "9"),
                (LaunchClose, ">>>"),
                (LParen, "("),
                (Ident, "a"),
                (Comma, ","),
                (Ident, "b"),
                (RParen, ")"),
                (Semi, ";"),
            ]
        );
        assert_eq!(toks[0].loc.line, 3);
        assert_eq!(toks[2].loc.line, 3, "expanded tokens carry the use site");
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("", "t.cu").unwrap().is_empty());
    }

    // Hand-enumerated disambiguation table for runs of `<` and `>`.
    #[test]
    fn angle_bracket_disambiguation() {
        let table: &[(&str, &[TokenKind])] = &[
            ("a >> > b", &[Ident, Shr, Gt, Ident]),
            ("a >>> b", &[Ident, Shr, Gt, Ident]),
            ("a > >> b", &[Ident, Gt, Shr, Ident]),
            ("a << < b", &[Ident, Shl, Lt, Ident]),
            ("1 <<< 2", &[Int, Shl, Lt, Int]),
            ("(a)<<<b", &[LParen, Ident, RParen, Shl, Lt, Ident]),
            ("f<<<1,2>>>()", &[Ident, LaunchOpen, Int, Comma, Int, LaunchClose, LParen, RParen]),
            (
                "f<<<a>>1,2>>>()",
                &[Ident, LaunchOpen, Ident, Shr, Int, Comma, Int, LaunchClose, LParen, RParen],
            ),
            ("x >>= 1", &[Ident, ShrAssign, Int]),
            ("x<<=1", &[Ident, ShlAssign, Int]),
        ];
        for (src, expected) in table {
            assert_eq!(&kinds(src), expected, "input {src:?}");
        }
    }

    #[test]
    fn comments_and_includes_vanish() {
        let src = "#include <stdio.h>\n// line\n/* block\n */ int x; // tail\n";
        let toks = tokenize(src, "t.cu").unwrap();
        assert_eq!(toks.len(), 3);
        assert_eq!(toks[0].loc.line, 4);
    }

    #[test]
    fn nested_macros_expand() {
        let src = "#define N 18\n#define NBLOCKS 2\n#define NTHREADS (N/NBLOCKS)\nNTHREADS";
        let texts: Vec<String> = tokenize(src, "t.cu").unwrap().into_iter().map(|t| t.text).collect();
        assert_eq!(texts, ["(", "18", "/", "2", ")"]);
    }

    #[test]
    fn function_like_macros_are_rejected() {
        let err = tokenize("#define SQ(x) ((x)*(x))\n", "t.cu").unwrap_err();
        assert!(err.to_string().contains("function-like"), "{err}");
    }

    #[test]
    fn lexical_errors_carry_locations() {
        let err = tokenize("int x;\n  \"abc", "t.cu").unwrap_err();
        match err {
            FrontendError::Lex { loc, .. } => assert_eq!((loc.line, loc.col), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(tokenize("int @;", "t.cu").is_err());
    }

    #[test]
    fn escapes() {
        assert_eq!(unescape("\"a\\n\\t\\x41\\0\"").unwrap(), b"a\n\tA\0");
    }
}
