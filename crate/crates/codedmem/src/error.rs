use std::io;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },

    #[error("line {line}: core {core} goes back in time ({time} ns after {prev} ns)")]
    TimeRegression { line: u64, core: usize, time: u64, prev: u64 },

    #[error("{key}: {reason}")]
    Config { key: String, reason: String },

    #[error(transparent)]
    Core(#[from] codedmem_core::Error),

    #[error("simulation fault: {0}")]
    Fault(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// Process exit status: 3 for broken simulation invariants, 2 for everything
    /// the user can fix.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Fault(_) => 3,
            Error::Core(e) if e.is_invariant_fault() => 3,
            _ => 2,
        }
    }
}
