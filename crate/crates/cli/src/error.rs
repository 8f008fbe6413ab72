use std::fmt;
use std::path::Path;

/// Failure categories, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Length(String),
    Parse(String),
    Sim(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Length(_) => 4,
            CliError::Parse(_) => 5,
            CliError::Sim(_) => 6,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, msg) = match self {
            CliError::Usage(m) => ("usage", m),
            CliError::Io(m) => ("io", m),
            CliError::Length(m) => ("length", m),
            CliError::Parse(m) => ("parse", m),
            CliError::Sim(m) => ("simulator", m),
        };
        write!(f, "{kind} error: {msg}")
    }
}

pub type CliResult<T> = Result<T, CliError>;
