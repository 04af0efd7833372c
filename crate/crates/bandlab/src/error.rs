use std::fmt;

/// Failures surfaced by the command line, each with its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input files (exit 2).
    Validation(String),
    /// Errors reported by the numerical core.
    Core(bandlab_core::Error),
    /// Could not write results (exit 1).
    Output(String),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn output(e: impl fmt::Display) -> Self {
        CliError::Output(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Core(e) if e.is_solver_failure() => 3,
            CliError::Core(_) => 2,
            CliError::Output(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Core(e) if e.is_solver_failure() => write!(f, "solver failure: {e}"),
            CliError::Core(e) => write!(f, "invalid input: {e}"),
            CliError::Output(m) => write!(f, "cannot write output: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<bandlab_core::Error> for CliError {
    fn from(e: bandlab_core::Error) -> Self {
        CliError::Core(e)
    }
}
