//! Structured covariance estimation.
//!
//! Approximates a (possibly singular) sample covariance by the nearest
//! positive semidefinite Toeplitz matrix under the transport (Bures/Hellinger),
//! likelihood, KL, linearized log-deviation, trace-gap and nuclear-norm
//! criteria, and turns estimates into maximum-entropy power spectra.

pub mod divergences;
pub mod error;
pub mod experiment;
pub mod io;
pub mod matops;
pub mod solvers;
pub mod spectral;
pub mod structure;

pub use error::{CovError, Result};
pub use matops::{Matrix, SymMatrix};
