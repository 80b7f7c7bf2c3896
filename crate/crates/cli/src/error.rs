//! Exit-code discipline: 0 success, 1 runtime/data error, 2 usage error.

use std::fmt;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config values; exits 2.
    Usage(String),
    /// I/O or data failures at run time; exits 1.
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

/// Maps a library error produced while resolving flags/config to a usage
/// error.
pub fn usage<T>(r: ropescale::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::Usage(e.to_string()))
}

/// Maps a library error produced while executing to a runtime error.
pub fn runtime<T>(r: ropescale::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::Runtime(e.to_string()))
}
