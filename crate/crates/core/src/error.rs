use thiserror::Error;

/// Errors raised by constructors and numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Lengths of values, probabilities or vectors do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("infeasible parameters: {0}")]
    InfeasibleParameters(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tensor is not sesqui-symmetric: {0}")]
    NotSesquiSymmetric(String),

    #[error("tensor is not doubly symmetric: {0}")]
    NotDoublySymmetric(String),

    /// The probe-based eigen solver could not separate the spectrum.
    #[error("degenerate tensor after {attempts} probe(s): {detail}")]
    DegenerateTensor { attempts: usize, detail: String },

    /// An entry of the rescaled tensor does not settle as h shrinks.
    #[error("tensor entry ({i},{j},{k}) does not converge: {detail}")]
    DivergentTensor {
        i: usize,
        j: usize,
        k: usize,
        detail: String,
    },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("chain dimension {dim} exceeds the configured cap {cap}")]
    ChainTooLarge { dim: usize, cap: usize },

    #[error("config field `{field}`: {detail}")]
    Config { field: String, detail: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
