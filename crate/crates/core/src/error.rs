use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("not a homomorphism: {0}")]
    NotHomomorphism(String),
    #[error("matrix is not scalar (residual {residual:e} > {tolerance:e}) at {location}")]
    NotScalar {
        location: String,
        residual: f64,
        tolerance: f64,
    },
    #[error("scalar {location} is not an m-th root of unity (m = {modulus}, off by {residual:e})")]
    NotRoot {
        location: String,
        modulus: u64,
        residual: f64,
    },
    #[error("triple is not normalized: {0}")]
    NotNormalized(String),
    #[error("resource cap exceeded: matrix dimension {dim} > {cap}")]
    ResourceCap { dim: usize, cap: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
