use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("incompatible representations: {0}")]
    IncompatibleReps(String),
    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),
    #[error("{0:?} is not in the representation catalog")]
    NotInCatalog(String),
    #[error("invalid reflection: {0}")]
    InvalidReflection(String),
    #[error("reflection image is not an involution (residual {0:e})")]
    NotAnInvolution(f64),
    #[error("determinant vanishes identically")]
    DegenerateOperator,
    #[error("symbol is not invertible: {0}")]
    NotInvertible(String),
    #[error("repeated mass squared {0:e} is not supported")]
    RepeatedMass(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{what} = {value} exceeds the limit {limit}")]
    TooLarge { what: &'static str, value: usize, limit: usize },
    #[error("argument out of domain: {0}")]
    OutOfDomain(String),
    #[error("test function violates the positive-time support: {0}")]
    BadSupport(String),
    #[error("near-singular symbol at mode {mode:?}: |det| = {det:e}")]
    NearSingularMode { mode: Vec<usize>, det: f64 },
    #[error("symmetry is not exact on the lattice: {0}")]
    UnsupportedSymmetry(String),
    #[error("unknown model family {0:?}")]
    UnknownFamily(String),
    #[error("degenerate parameters: {0}")]
    Degenerate(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
