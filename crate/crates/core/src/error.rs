use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("transition matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },

    #[error("row {row} sums to {sum}, expected 1 within 1e-12")]
    RowSum { row: usize, sum: f64 },

    #[error("entry ({row}, {col}) = {value} is negative or not a probability")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("transition matrix is not irreducible: state {0} cannot reach every state or be reached from every state")]
    NotIrreducible(usize),

    #[error("origin {origin} out of range for a chain with {n_states} states")]
    OriginOutOfRange { origin: usize, n_states: usize },

    #[error("state {0} is not valid for this chain")]
    InvalidState(String),

    #[error("dynamic program needs {entries} lattice entries, budget is {limit}")]
    BudgetExceeded { entries: u128, limit: u128 },

    #[error("distribution mass drifted to {mass} at step {step}")]
    MassNotConserved { step: usize, mass: f64 },

    #[error("first-return probability f[{n}] = {value} is negative beyond tolerance")]
    NegativeFirstReturn { n: usize, value: f64 },

    #[error("first-return probabilities have not been computed")]
    MissingFirstReturns,

    #[error("tail fit needs at least {needed} usable terms, found {found}")]
    InsufficientData { found: usize, needed: usize },

    #[error("tail fit window contains nonpositive values")]
    DegenerateFit,

    #[error("tail model was fitted to the {found} series, expected {expected}")]
    TailTargetMismatch { found: &'static str, expected: &'static str },

    #[error("beta = {0} does not exceed 1/2, no critical parameter exists")]
    NotSupercritical(f64),

    #[error("mean offspring at the top of the bracket is {0}, not above 1")]
    BracketFailure(f64),

    #[error("geometric offspring law needs b < 1, got {0}")]
    ImproperOffspringLaw(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BudgetExceeded { .. } => 3,
            Error::Io(_)
            | Error::MassNotConserved { .. }
            | Error::NegativeFirstReturn { .. }
            | Error::BracketFailure(_) => 1,
            _ => 2,
        }
    }
}
