use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} qubits, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operator is not hermitian: {0}")]
    NonHermitian(String),

    #[error("qubit index {index} out of range for {n} qubits")]
    QubitOutOfRange { index: usize, n: usize },

    #[error("input has {found} bits but the circuit expects {expected}")]
    InputLength { expected: usize, found: usize },

    /// A precondition of a sample-size or concentration formula does not hold.
    /// `bound` names the violated condition.
    #[error("precondition violated ({bound}): {detail}")]
    Precondition { bound: &'static str, detail: String },

    /// The training Gram matrix is singular or indefinite, so the regression
    /// assumption that the kernel on the training inputs is invertible fails.
    #[error("training kernel is not invertible (regression requires K_train to be invertible): {0}")]
    NotInvertible(String),

    #[error("oracle cap exceeded: {0}")]
    CapExceeded(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("io error: {0}")]
    Io(String),

    /// Internal consistency failure, e.g. a phase-tracking bug surfacing as a
    /// non-real expectation.
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
