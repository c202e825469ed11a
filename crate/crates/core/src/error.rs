use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid config: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    /// A pattern booked the same physical bank twice in one memory cycle.
    /// Always a scheduler bug.
    #[error("single-port violation: bank {bank} used twice in memory cycle {cycle}")]
    PortConflict { bank: usize, cycle: u64 },
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }

    /// Whether this error signals a broken simulation invariant rather than bad input.
    pub fn is_invariant_fault(&self) -> bool {
        matches!(self, Error::PortConflict { .. })
    }
}
