//! Spectral analysis of finite diatomic spring-mass chains.
//!
//! The crate computes exact eigenpairs of the finite chain operator, decomposes
//! every mode into transfer-matrix data, evaluates the asymptotic estimates for
//! edge and near-band-edge states, continues linear modes into nonlinear
//! time-periodic solutions, and covers two-layer and two-dimensional variants.

pub mod asymptotics;
pub mod bulk;
pub mod chain;
pub mod error;
pub mod extensions;
pub mod fit;
pub mod modes;
pub mod nonlinear;
pub mod real;
pub mod semi_infinite;
pub mod spectrum;
pub mod tridiag;

pub use bulk::{BulkParams, CellVectors, TransferEigen};
pub use chain::{ChainConfig, ChainEnd, Tridiagonal};
pub use error::{ChainError, Result};
pub use spectrum::{full_spectrum, full_spectrum_extended, Spectrum};
