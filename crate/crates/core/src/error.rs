use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("individuals `{0}` and `{1}` share identical coordinates")]
    DuplicateCoordinates(String, String),

    #[error("log transform needs a positive covariate, got {raw} ({context})")]
    Domain { context: String, raw: f64 },

    #[error("no epidemic: the infectious set is empty at every time point")]
    NoEpidemic,

    #[error("individual `{id}` becomes infectious at t={t_inf} with nobody infectious at t={t}")]
    InfectionWithoutPressure { id: String, t: u32, t_inf: u32 },

    #[error("logistic MLE does not exist: the outcomes are separated by the covariate")]
    Separation,

    #[error("weighted design matrix is singular: {0}")]
    Singular(String),

    #[error("every beta0 candidate failed to fit")]
    AllCandidatesFailed,

    #[error("initial state {0:?} lies outside the prior support")]
    OutsideSupport([f64; 2]),

    #[error("{0}")]
    Config(String),

    #[error("{path}, row {row}: {msg}")]
    Schema { path: String, row: usize, msg: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
