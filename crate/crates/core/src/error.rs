use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate mode label `{0}`")]
    DuplicateMode(String),

    #[error("unknown mode label `{0}`")]
    UnknownMode(String),

    #[error("mode selection splits the exclusive group {0:?}")]
    SplitsExclusiveGroup(Vec<String>),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("operands live on different Fock spaces")]
    SpaceMismatch,

    #[error("space too large for the dense backend ({0} basis states)")]
    SpaceTooLarge(usize),

    #[error("matrix is not Hermitian (max |M - M^dag| = {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max |U^dag U - 1| = {0:e})")]
    NotUnitary(f64),

    #[error("trace {trace} outside the allowed window")]
    BadTrace { trace: f64 },

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("unphysical state: {0}")]
    Unphysical(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("photon number {value} exceeds cutoff {cutoff}")]
    CutoffExceeded { value: usize, cutoff: usize },

    #[error("truncation deficit {deficit:e} exceeds the allowed {limit:e}")]
    DeficitTooLarge { deficit: f64, limit: f64 },

    #[error("post-selection success probability is zero (both inputs are pure vacuum)")]
    VacuumInputs,

    #[error("bisection bracket [{lo}, {hi}] does not contain a sign change")]
    NoBracket { lo: f64, hi: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
