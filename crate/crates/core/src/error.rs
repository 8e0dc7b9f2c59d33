use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {block}: expected {expected}, found {found}")]
    DimensionMismatch {
        block: String,
        expected: String,
        found: String,
    },

    #[error("structural violation: {block} must be zero (max |entry| = {max_abs:e})")]
    StructuralViolation { block: String, max_abs: f64 },

    #[error("invalid uncertainty structure: {0}")]
    InvalidStructure(String),

    #[error("non-finite result in {0}")]
    NonFiniteResult(String),

    #[error("numerical rank of {what} is ambiguous: singular value ratio {ratio:e} near threshold {threshold:e}")]
    RankDeficiencyWarning {
        what: String,
        ratio: f64,
        threshold: f64,
    },

    #[error("weight `{0}` is improper (numerator degree exceeds denominator degree)")]
    ImproperWeight(String),

    #[error("topology mismatch: {0}")]
    TopologyMismatch(String),

    #[error("operation requires a {expected} plant")]
    WrongTimeDomain { expected: &'static str },

    #[error("assignment is missing decision variable `{0}`")]
    MissingVariable(String),

    #[error("no certificate exists in this class (LMI conditions infeasible)")]
    Infeasible,

    #[error("SDP solver failed: {0}")]
    SolverFailure(String),

    #[error("V is ill-conditioned (sigma_min/sigma_max = {0:e})")]
    IllConditionedV(f64),

    #[error("controller recovery factor {factor} is numerically singular (sigma_min/sigma_max = {ratio:e})")]
    SingularFactor { factor: &'static str, ratio: f64 },

    #[error("ill-posed loop at step {step}: cond(I - Delta*D00) = {cond:e}")]
    IllPosedLoop { step: usize, cond: f64 },

    #[error("frozen loop is unstable (spectral radius {radius}) at Delta = {delta:?}")]
    UnstableFrozenLoop { radius: f64, delta: Vec<f64> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(block: impl Into<String>, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            block: block.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
