use std::fmt;

use thiserror::Error;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { name: String, pos: Pos },
    #[error("domain error in {function}{}", point.map(|p| format!(" at grid point {p}")).unwrap_or_default())]
    Domain { point: Option<usize>, function: String },
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("{context}: {source}")]
    Located { context: String, source: Box<CliError> },
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] fiskit_core::Error),
}

impl CliError {
    pub fn syntax(pos: Pos, msg: String) -> Self {
        CliError::Syntax { pos, msg }
    }

    /// Prefixes the error with the scenario field it came from.
    pub fn at(self, context: impl Into<String>) -> Self {
        CliError::Located { context: context.into(), source: Box::new(self) }
    }

    /// Input errors exit with 2; task failures with 1.
    pub fn is_input_error(&self) -> bool {
        match self {
            CliError::Syntax { .. } | CliError::UnknownIdentifier { .. } | CliError::Validation(_) | CliError::Io(_) => true,
            CliError::Located { source, .. } => source.is_input_error(),
            CliError::Domain { .. } | CliError::Core(_) => false,
        }
    }
}
