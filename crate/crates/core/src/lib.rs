//! Moment tomography for homodyne and heterodyne detection of a single
//! optical mode: state models, Fisher information and scaled Cramer-Rao
//! bounds, optimal moment estimators, synthetic data and Monte-Carlo checks.

pub mod crb;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod oracle;
pub mod phase_space;
pub mod rng;
pub mod sampler;
pub mod special;
pub mod states;

pub use error::{Error, Result};
pub use phase_space::{CovarianceMatrix, FirstMoments, GaussianShape, SymmetricVec3};
pub use states::{Parity, StateModel};
