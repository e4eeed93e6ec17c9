use alloc::string::String;

/// Errors reported by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument violated a precondition (domain of a special function, malformed
    /// configuration, dimension mismatch, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// The Foldy-Lax matrix `Id - κ²T` is numerically singular.
    #[error("singular Foldy system (s = {size}, condition estimate {condition:.3e}{})", fmt_direction(.direction))]
    SingularSystem {
        size: usize,
        condition: f64,
        /// Index of the measurement (incident direction) that triggered the failure.
        direction: Option<usize>,
    },
}

fn fmt_direction(direction: &Option<usize>) -> String {
    match direction {
        Some(k) => alloc::format!(", incident direction #{k}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn at_direction(self, k: usize) -> Self {
        match self {
            Error::SingularSystem {
                size, condition, ..
            } => Error::SingularSystem {
                size,
                condition,
                direction: Some(k),
            },
            other => other,
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
