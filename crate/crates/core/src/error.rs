use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not implemented: {0}")]
    NotImplemented(String),

    #[error("unknown tableau id `{0}`")]
    UnknownTableau(String),

    #[error("invalid tableau: {0}")]
    InvalidTableau(String),

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("eigenvector basis of Δ(ζ) at ζ = {zeta} is ill-conditioned (cond = {condition:.3e}, limit {limit:.1e})")]
    IllConditioned {
        zeta: Complex64,
        condition: f64,
        limit: f64,
    },

    #[error("symbol evaluation failed at s = {s}: {source}")]
    SymbolEvaluation {
        s: Complex64,
        #[source]
        source: Box<Error>,
    },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("quadrature failed on panel pair ({0}, {1}): {2}")]
    Assembly(usize, usize, String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("matrix integrity violated: {0}")]
    MatrixIntegrity(String),

    #[error("configuration error: {0}")]
    Config(String),
}
