use std::fmt;

use dualis_core::Error as CoreError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration; `origin` locates the offending key.
    Config { origin: Option<String>, message: String },
    Core(CoreError),
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Core(e) => match e {
                CoreError::Lattice(_)
                | CoreError::Params(_)
                | CoreError::Config(_)
                | CoreError::Unsupported(_)
                | CoreError::BudgetExceeded { .. } => EXIT_CONFIG,
                _ => EXIT_NUMERIC,
            },
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { origin: Some(o), message } => write!(f, "{o}: {message}"),
            CliError::Config { origin: None, message } => write!(f, "{message}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{path}: {source}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}
