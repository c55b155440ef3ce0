use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown filter family `{0}`")]
    UnknownFamily(String),

    #[error("malformed filter `{name}`: {reason}")]
    MalformedFilter { name: String, reason: String },

    #[error("filter `{name}` is not orthogonal: residual {residual:e} exceeds {tolerance:e}")]
    NotOrthogonal {
        name: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("balancing requires a scalar filter, `{name}` has multiplicity {multiplicity}")]
    NotScalar { name: String, multiplicity: usize },

    #[error("invalid cascade parameters: {0}")]
    CascadeParameters(String),

    #[error("cascade for `{name}` did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergent {
        name: String,
        residual: f64,
        iterations: usize,
        trace: Vec<f64>,
    },

    #[error("empty sample")]
    EmptySample,

    #[error("sample value {value} lies outside the basis domain [{a}, {b}]")]
    SampleOutsideDomain { value: f64, a: f64, b: f64 },

    #[error("invalid domain [{a}, {b}]")]
    InvalidDomain { a: f64, b: f64 },

    #[error("cannot normalize: estimate is non-positive everywhere on the grid")]
    DegenerateEstimate,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid quadrature grid: {0}")]
    InvalidGrid(String),

    #[error("unknown density `{0}`")]
    UnknownDensity(String),

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergent { .. } | Error::DegenerateEstimate | Error::LengthMismatch { .. }
        )
    }
}
