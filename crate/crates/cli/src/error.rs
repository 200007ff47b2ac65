use std::fmt;
use std::io;
use std::path::PathBuf;

use qtransport_core::model::ValidationReport;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const IO: u8 = 1;
    pub const VALIDATION: u8 = 2;
    pub const NUMERICAL: u8 = 3;
}

/// A problem with a config file, located as precisely as the parser allows.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source_name: String,
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            source_name: String::new(),
            line: None,
            field: None,
            message: message.into(),
        }
    }

    pub fn at(mut self, line: Option<usize>, field: impl Into<String>) -> Self {
        self.line = self.line.or(line);
        self.field = Some(field.into());
        self
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.source_name.is_empty() {
            write!(f, "{}", self.source_name)?;
            if let Some(line) = self.line {
                write!(f, ":{line}")?;
            }
            write!(f, ": ")?;
        } else if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(field) = &self.field {
            write!(f, "`{field}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },

    #[error("{0}")]
    Config(#[from] ConfigError),

    #[error("validation failed for {scenario} ({} failing checks); rerun with --force to simulate anyway", report.failures().count())]
    Validation {
        scenario: String,
        report: Box<ValidationReport>,
    },

    #[error("{context}: {source}")]
    Core {
        context: String,
        source: qtransport_core::Error,
    },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn core(context: impl Into<String>, source: qtransport_core::Error) -> Self {
        CliError::Core {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Csv { .. } => exit::IO,
            CliError::Config(_) | CliError::Validation { .. } | CliError::Usage(_) => {
                exit::VALIDATION
            }
            CliError::Core { source, .. } if source.is_numerical() => exit::NUMERICAL,
            CliError::Core { .. } => exit::VALIDATION,
        }
    }
}
