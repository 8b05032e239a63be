use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("kernel is singular at (x, y) = ({x}, {y})")]
    Singularity { x: f64, y: f64 },

    #[error("wrong discretization scheme: {0}")]
    WrongScheme(String),

    #[error("unknown kernel `{0}`")]
    UnknownKernel(String),

    #[error("expression parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("determinant vanishes on the contour near z = {z}")]
    ZeroOnContour { z: Complex64 },

    #[error("non-finite function value at z = {z}")]
    NonFinite { z: Complex64 },

    #[error("root refinement failed ({reason}); last iterate z = {last}")]
    RefineFailed { last: Complex64, reason: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;
