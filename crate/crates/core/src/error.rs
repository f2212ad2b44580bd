use thiserror::Error;

/// Reasons a dataset fails validation. Each maps to a distinct code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("column length mismatch: {what} has {got} rows, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("too few observations: n = {n}, need more than {required}")]
    TooFewRows { n: usize, required: usize },
    #[error("no censored observations (y = 0)")]
    NoCensored,
    #[error("no uncensored observations (y > 0)")]
    NoUncensored,
    #[error("negative outcome {value} at row {row} (Tobit outcomes must be >= 0)")]
    NegativeOutcome { row: usize, value: f64 },
    #[error("outcome {value} at row {row} is not binary (Probit outcomes must be 0 or 1)")]
    NonBinaryOutcome { row: usize, value: f64 },
    #[error("binary outcome takes a single value; both 0 and 1 are required")]
    DegenerateBinary,
    #[error("instrument/covariate design is rank deficient (singular value ratio {ratio:.3e})")]
    RankDeficient { ratio: f64 },
    #[error("no instruments supplied")]
    NoInstruments,
}

impl ValidationError {
    pub fn code(&self) -> &'static str {
        match self {
            ValidationError::LengthMismatch { .. } => "E_LENGTH",
            ValidationError::TooFewRows { .. } => "E_TOO_FEW_ROWS",
            ValidationError::NoCensored => "E_NO_CENSORED",
            ValidationError::NoUncensored => "E_NO_UNCENSORED",
            ValidationError::NegativeOutcome { .. } => "E_NEGATIVE_OUTCOME",
            ValidationError::NonBinaryOutcome { .. } => "E_NON_BINARY",
            ValidationError::DegenerateBinary => "E_DEGENERATE_BINARY",
            ValidationError::RankDeficient { .. } => "E_RANK",
            ValidationError::NoInstruments => "E_NO_INSTRUMENTS",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("non-finite value at {at}: {context}")]
    Numerical { at: f64, context: String },
    #[error("non-finite log-likelihood contribution at row {row}")]
    NonFiniteRow { row: usize },
    #[error("optimizer did not converge after {iterations} iterations (gradient norm {grad_norm:.3e}, last f = {value})")]
    NonConvergence {
        iterations: usize,
        grad_norm: f64,
        value: f64,
        last: Vec<f64>,
    },
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("degenerate first stage: residual variance is zero")]
    DegenerateFirstStage,
    #[error("degenerate endogeneity: |rho_UV| = {rho} is too close to 1")]
    DegenerateEndogeneity { rho: f64 },
    #[error("mixture components incompatible (misspecification or sampling noise): lower {lower} > upper {upper}")]
    EmptyIntersection { lower: f64, upper: f64 },
    #[error("mixture component {component} is empty (weight {weight:.2e}); try a smaller K")]
    EmptyComponent { component: usize, weight: f64 },
    #[error("missing covariance matrix")]
    MissingVcov,
    #[error("input error: {0}")]
    Input(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 2 input/validation, 3 estimation failure, 4 empty
    /// mixture intersection.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::Precondition(_)
            | Error::Validation(_)
            | Error::Input(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => 2,
            Error::Numerical { .. }
            | Error::NonFiniteRow { .. }
            | Error::NonConvergence { .. }
            | Error::DegenerateFirstStage
            | Error::DegenerateEndogeneity { .. }
            | Error::EmptyComponent { .. }
            | Error::MissingVcov => 3,
            Error::EmptyIntersection { .. } => 4,
        }
    }
}
