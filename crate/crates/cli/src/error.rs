use std::fmt;
use std::path::Path;

use plsforge::PlsError;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    Internal = 1,
    Usage = 2,
    InvalidInput = 3,
    Io = 4,
    Numerical = 5,
    Artifact = 6,
}

#[derive(Debug)]
pub struct CliError {
    pub code: Code,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn new(code: Code, message: impl Into<String>) -> Self {
        CliError { code, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(Code::Usage, message)
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(Code::InvalidInput, message)
    }

    pub fn artifact(message: impl Into<String>) -> Self {
        Self::new(Code::Artifact, message)
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::new(Code::Io, format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        self.code as i32
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn code_of(e: &PlsError) -> Code {
    match e {
        PlsError::InvalidInput(_)
        | PlsError::DimensionMismatch(_)
        | PlsError::InvalidGroups(_)
        | PlsError::UnsupportedShape(_)
        | PlsError::Mode(_) => Code::InvalidInput,
        PlsError::Convergence { .. } | PlsError::DegenerateBasis => Code::Numerical,
        PlsError::Manifest(_) => Code::Artifact,
        PlsError::Chunk { source, .. } => match code_of(source) {
            // a chunk that cannot be read is a damaged dataset
            Code::Io => Code::Artifact,
            c => c,
        },
        PlsError::Io { .. } => Code::Io,
    }
}

impl From<PlsError> for CliError {
    fn from(e: PlsError) -> Self {
        CliError::new(code_of(&e), e.to_string())
    }
}
