use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("covariance matrix is not physical (det = {det}, need >= 1/4)")]
    Unphysical { det: f64 },

    #[error("quadrature variance vanishes near theta = {theta}")]
    DegenerateVariance { theta: f64 },

    #[error("no closed form available: {0}")]
    UnsupportedClosedForm(String),

    #[error("Fock cutoff {cutoff} leaves a norm deficit of {deficit:e}")]
    CutoffTooSmall { cutoff: usize, deficit: f64 },

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("no sign change of gamma2 - 1 on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("bracket failure: {0}")]
    Bracket(String),

    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error("sampling failure: {0}")]
    Sampling(String),

    #[error("estimator failure: {0}")]
    Estimator(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by user input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidParameter(_) | Error::Unphysical { .. })
    }
}
