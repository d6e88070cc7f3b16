use std::fmt;

/// A failed command, classified for the exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or inputs that do not meet a command's contract.
    Validation(String),
    /// A missing file, credential, or unreachable service.
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Resource(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid: {m}"),
            CliError::Resource(m) => write!(f, "resource: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

pub fn invalid(m: impl fmt::Display) -> CliError {
    CliError::Validation(m.to_string())
}

pub fn resource(m: impl fmt::Display) -> CliError {
    CliError::Resource(m.to_string())
}

/// I/O failures are resource errors; malformed content is a validation
/// error.
pub fn dataset_error(path: &std::path::Path, e: tabrobust::jsonl::DatasetError) -> CliError {
    use tabrobust::jsonl::DatasetError;
    match e {
        DatasetError::Io(_) => resource(format!("{}: {e}", path.display())),
        other => invalid(format!("{}: {other}", path.display())),
    }
}
