use thiserror::Error;

/// Errors raised anywhere in the simulator, verifier and search.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate state: {0}")]
    Degenerate(String),

    #[error("photon number undefined for the zero polynomial")]
    ZeroPolynomial,

    #[error("matrix is not unitary (residual {residual:.3e} exceeds {tolerance:.1e})")]
    NotUnitary { residual: f64, tolerance: f64 },

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("invalid strategy: {0}")]
    Strategy(String),

    #[error("outcome sets cannot be compared: {0}")]
    Comparison(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("outcome lattice of {outcomes} entries exceeds the bound {bound}")]
    ResourceGuard { outcomes: u128, bound: u128 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
