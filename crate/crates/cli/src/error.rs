use std::fmt;
use std::path::Path;

use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Argument,
    Data,
    Io,
    Numeric,
    Separation,
    Divergence,
    Sizing,
}

impl ErrorKind {
    fn name(self) -> &'static str {
        match self {
            ErrorKind::Argument => "argument",
            ErrorKind::Data => "data",
            ErrorKind::Io => "io",
            ErrorKind::Numeric => "numeric",
            ErrorKind::Separation => "perfect_separation",
            ErrorKind::Divergence => "divergence",
            ErrorKind::Sizing => "sizing",
        }
    }
}

/// A failed command: rendered as one JSON object on stderr.
#[derive(Debug, Clone)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn argument(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Argument, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Data, message)
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::new(ErrorKind::Io, format!("{}: {err}", path.display()))
    }

    pub fn csv(path: &Path, err: csv::Error) -> Self {
        let kind = if err.is_io_error() { ErrorKind::Io } else { ErrorKind::Data };
        let message = match err.position() {
            Some(pos) => format!("{}: line {}: {err}", path.display(), pos.line()),
            None => format!("{}: {err}", path.display()),
        };
        Self::new(kind, message)
    }

    /// 2 when the algorithm ran but could not reach a solution, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Separation | ErrorKind::Divergence => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "error": {
                "kind": self.kind.name(),
                "message": self.message,
            },
            "exit_code": self.exit_code(),
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.name(), self.message)
    }
}

impl std::error::Error for CliError {}

impl From<foldstat::Error> for CliError {
    fn from(err: foldstat::Error) -> Self {
        use foldstat::Error as E;
        let kind = match &err {
            E::Argument(_) | E::Dimension { .. } | E::Merge(_) => ErrorKind::Argument,
            E::Data { .. } | E::EmptyInput(_) | E::DegreesOfFreedom { .. } | E::Format(_) => ErrorKind::Data,
            E::Numeric(_) | E::NotPsd { .. } => ErrorKind::Numeric,
            E::PerfectSeparation(_) => ErrorKind::Separation,
            E::Divergence { .. } => ErrorKind::Divergence,
            E::Io { .. } => ErrorKind::Io,
        };
        Self::new(kind, err.to_string())
    }
}
