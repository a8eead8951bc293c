//! Lexing, parsing and lowering of CUDA-C source text.

pub mod ast;
pub mod lexer;
pub mod lower;
pub mod parser;
pub mod pretty;

use thiserror::Error;

use crate::diag::SourceLoc;
use crate::program::Program;

pub use lexer::{tokenize, Token, TokenKind};
pub use lower::lower;
pub use parser::parse;
pub use pretty::pretty;

#[derive(Debug, Error)]
pub enum FrontendError {
    #[error("{loc}: lexical error: {message}")]
    Lex { loc: SourceLoc, message: String },
    #[error("{loc}: parse error: expected {expected}, found {found}")]
    Parse {
        loc: SourceLoc,
        expected: String,
        found: String,
    },
    #[error("{loc}: error: {message}")]
    Semantic { loc: SourceLoc, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl FrontendError {
    pub fn loc(&self) -> Option<&SourceLoc> {
        match self {
            FrontendError::Lex { loc, .. }
            | FrontendError::Parse { loc, .. }
            | FrontendError::Semantic { loc, .. } => Some(loc),
            FrontendError::Io { .. } => None,
        }
    }
}

/// Runs the whole frontend over one source text.
pub fn compile(source: &str, filename: &str) -> Result<Program, FrontendError> {
    let tokens = tokenize(source, filename)?;
    let tu = parse(&tokens, filename)?;
    lower(&tu)
}

/// Reads and compiles a file; diagnostics name it exactly as given.
pub fn compile_file(path: &str) -> Result<Program, FrontendError> {
    let source = std::fs::read_to_string(path).map_err(|source| FrontendError::Io {
        path: path.to_string(),
        source,
    })?;
    compile(&source, path)
}
