use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// The argument of `v_inverse` lies below `V(1/2)`.
    #[error("{value} is below the range of V (minimum V(1/2) = {lower})")]
    OutOfRangeLow { value: f64, lower: f64 },

    /// The argument of `v_inverse` lies above `V(p_floor)`.
    #[error("{value} is above the range of V on [p_floor, 1/2] (maximum {upper})")]
    OutOfRangeHigh { value: f64, upper: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid function spec: {0}")]
    InvalidSpec(String),

    #[error("the positive set is empty, conditional sampling is undefined")]
    EmptyPositiveSet,

    #[error("no closed-form volume for this function family")]
    NoClosedForm,

    #[error(
        "rejection sampler gave up after {attempts} attempts \
         (observed acceptance rate {acceptance_rate:.3e})"
    )]
    SamplerStarved { attempts: u64, acceptance_rate: f64 },

    #[error("volume {value} is outside the tester's range (0, {max}]")]
    VolumeOutOfRange { value: f64, max: f64 },

    #[error("degenerate tester parameters: {0}")]
    DegenerateParameters(String),

    #[error("schedule requires {required} draws, over the cap of {cap}")]
    SampleBudgetExceeded { required: f64, cap: u64 },

    #[error("not implemented: {0}")]
    NotImplemented(&'static str),

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
