//! CLI error kinds and their process exit codes.

use std::fmt;

/// Failure category, mapped to the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Config,
    Data,
    Runtime,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Config,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Data,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Runtime,
            message: message.into(),
        }
    }

    /// 2 for configuration errors, 3 for data errors, 4 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Config => 2,
            Kind::Data => 3,
            Kind::Runtime => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ar1dp::Error> for CliError {
    fn from(e: ar1dp::Error) -> Self {
        let kind = match e {
            ar1dp::Error::InvalidParameter { .. } | ar1dp::Error::Config(_) => Kind::Config,
            ar1dp::Error::Data(_) | ar1dp::Error::Dimension(_) => Kind::Data,
            ar1dp::Error::Numerical(_) => Kind::Runtime,
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attaches a path to an IO error when writing output.
pub fn write_error(path: &std::path::Path, e: impl fmt::Display) -> CliError {
    CliError::runtime(format!("cannot write {}: {e}", path.display()))
}
