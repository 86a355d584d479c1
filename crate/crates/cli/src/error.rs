use std::fmt;

use serde_json::Value;

/// Failures mapped onto the exit-code contract.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration: exit 2.
    Usage(String),
    /// Numerical or tolerance failure: exit 1, with whatever partial result exists.
    Numeric { message: String, partial: Option<Value> },
    /// Output could not be written: exit 1.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric { .. } | CliError::Io(_) => 1,
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        CliError::Numeric {
            message: message.into(),
            partial: None,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numeric { message, .. } => write!(f, "numerical failure: {message}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<vcorr::Error> for CliError {
    fn from(e: vcorr::Error) -> Self {
        use vcorr::Error as E;
        match e {
            E::Domain { .. } | E::Config(_) => CliError::Usage(e.to_string()),
            E::BudgetExhausted { best } => CliError::Numeric {
                message: e.to_string(),
                partial: serde_json::to_value(best).ok(),
            },
            _ => CliError::numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
