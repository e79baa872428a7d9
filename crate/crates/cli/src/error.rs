use std::fmt;

use metricgraph_core::Error;
use serde_json::json;

/// Failure classes, one per exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    /// Unreadable or invalid input, configuration or arguments.
    Input,
    /// Numeric failures: divergent integrals, non-convergence, undefined quantities.
    Numeric,
    /// Unknown entity id or ordinal.
    Lookup,
    /// Anything else, including output failures.
    Internal,
}

impl ExitClass {
    pub fn code(self) -> i32 {
        match self {
            ExitClass::Input => 2,
            ExitClass::Numeric => 3,
            ExitClass::Lookup => 4,
            ExitClass::Internal => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExitClass::Input => "input",
            ExitClass::Numeric => "numeric",
            ExitClass::Lookup => "lookup",
            ExitClass::Internal => "internal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub class: ExitClass,
    pub message: String,
    pub line: Option<usize>,
}

impl CliError {
    pub fn new(class: ExitClass, message: impl Into<String>) -> Self {
        CliError {
            class,
            message: message.into(),
            line: None,
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ExitClass::Internal, message)
    }

    /// The JSON document written to standard error.
    pub fn to_json(&self) -> String {
        let mut v = json!({
            "error": {
                "class": self.class.name(),
                "code": self.class.code(),
                "message": self.message,
            }
        });
        if let Some(line) = self.line {
            v["error"]["line"] = json!(line);
        }
        v.to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let class = match &e {
            Error::Parse { .. }
            | Error::Io(_)
            | Error::Validation(_)
            | Error::Dimension(_)
            | Error::Parameter(_) => ExitClass::Input,
            Error::Divergence { .. } | Error::Convergence { .. } | Error::Undefined(_) => {
                ExitClass::Numeric
            }
            Error::Lookup(_) | Error::Index { .. } => ExitClass::Lookup,
        };
        let line = match &e {
            Error::Parse { line, .. } => Some(*line),
            _ => None,
        };
        CliError {
            class,
            message: e.to_string(),
            line,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
