//! Source locations and the diagnostics produced while checking a program.

use std::fmt;
use std::sync::Arc;

/// The prefix carried by every diagnostic line the tool prints.
pub const PREFIX: &str = "cudak: ";

/// A position in an input file. Lines and columns are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceLoc {
    pub file: Arc<str>,
    pub line: u32,
    pub col: u32,
}

impl SourceLoc {
    pub fn new(file: Arc<str>, line: u32, col: u32) -> Self {
        SourceLoc { file, line, col }
    }
}

impl Default for SourceLoc {
    fn default() -> Self {
        SourceLoc {
            file: Arc::from(""),
            line: 0,
            col: 0,
        }
    }
}

impl fmt::Display for SourceLoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Race,
    Deadlock,
    MemBoundary,
    UndefinedBehavior,
    ApiError,
    StepLimit,
}

impl Category {
    pub fn severity(self) -> Severity {
        match self {
            Category::Race | Category::ApiError => Severity::Warning,
            Category::Deadlock
            | Category::MemBoundary
            | Category::UndefinedBehavior
            | Category::StepLimit => Severity::Error,
        }
    }
}

/// A finding reported to the user. `message` excludes the `cudak: ` prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub category: Category,
    pub message: String,
    pub loc: Option<SourceLoc>,
}

impl Diagnostic {
    pub fn new(category: Category, message: impl Into<String>, loc: Option<SourceLoc>) -> Self {
        Diagnostic {
            severity: category.severity(),
            category,
            message: message.into(),
            loc,
        }
    }

    pub fn race(loc: &SourceLoc) -> Self {
        Diagnostic::new(
            Category::Race,
            format!("Possible race on shared device memory detected at {loc}."),
            Some(loc.clone()),
        )
    }

    pub fn barrier_deadlock() -> Self {
        Diagnostic::new(
            Category::Deadlock,
            "Detected a deadlock caused by misplaced __syncthreads().",
            None,
        )
    }

    pub fn undefined(what: impl fmt::Display, loc: &SourceLoc) -> Self {
        Diagnostic::new(
            Category::UndefinedBehavior,
            format!("Undefined behavior: {what} at {loc}."),
            Some(loc.clone()),
        )
    }

    /// The full line as printed on stderr.
    pub fn line(&self) -> String {
        format!("{PREFIX}{}", self.message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.line())
    }
}
