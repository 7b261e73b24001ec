use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("series truncation needs {needed} terms but the cap is {cap}")]
    TruncationCap { needed: usize, cap: usize },

    #[error("product formula needs alpha, beta >= -1/2 (got alpha={alpha}, beta={beta})")]
    ProductUnavailable { alpha: f64, beta: f64 },

    #[error("quadrature construction failed: {0}")]
    Quadrature(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
