use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("outcome sequence has zero likelihood under the model (corrupt input?)")]
    ZeroLikelihood,

    #[error("path enumeration needs {paths} paths, limit is {limit}")]
    EnumerationTooLarge { paths: f64, limit: f64 },

    #[error("even vote count N={0} requires explicit opt-in")]
    EvenVoteCount(usize),

    #[error("objective is not unimodal over the scan; local maxima at amplitudes {0:?}")]
    NonUnimodal(Vec<f64>),

    #[error("ancilla reset did not terminate after {0} iterations")]
    ResetRunaway(usize),

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("integrator invariant violated: {0}")]
    Integrator(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    /// True for failures that indicate a bug or numerical breakdown rather
    /// than bad user input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Integrator(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
