//! Error type shared by every analysis in the crate.

use thiserror::Error;

/// Failures reported by the spectral, asymptotic and continuation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    /// A physical parameter is out of its admissible range.
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The transfer matrix has a = ±1 at this frequency, so the plain
    /// eigenvector basis is singular and the generalized basis must be used.
    #[error("transfer matrix is degenerate (a = ±1) at omega^2 = {omega2}")]
    DegenerateTransfer { omega2: f64 },

    /// A generalized-eigenvector routine was asked for a decay factor other than ±1.
    #[error("decay factor must be +1 or -1, got {0}")]
    InvalidA(f64),

    /// Inverse iteration did not reach the residual target.
    #[error("eigenvector {index} did not converge after {iterations} inverse iterations")]
    ConvergenceFailure { index: usize, iterations: usize },

    /// The 2x2 cell basis is too close to singular for a decomposition.
    #[error("cell-vector basis is ill-conditioned at omega^2 = {omega2}")]
    IllConditionedBasis { omega2: f64 },

    /// No decaying semi-infinite root exists for these boundary parameters.
    #[error("no edge state exists for these boundary parameters")]
    NoEdgeState,

    /// The bulk gap is closed (k1 = k2), so the Zak phase is undefined.
    #[error("bulk gap is closed: |k1 - k2| = {0}")]
    GapClosed(f64),

    /// A closed-form ratio has a vanishing denominator.
    #[error("denominator vanishes in {0}")]
    DegenerateDenominator(&'static str),

    /// No admissible boundary stiffness exists for the requested band-edge branch.
    #[error("no admissible k32 for the band-edge branch a = {a}, sigma = {sigma}")]
    NoMatch { a: f64, sigma: f64 },

    /// The boundary stiffness sits inside an ambiguity tube of the pattern tables.
    #[error("in-band pattern undetermined: {0}")]
    PatternUndetermined(&'static str),

    /// Pseudo-arclength continuation could not shrink the step further.
    #[error("continuation step underflow at step size {step}")]
    StepUnderflow { step: f64 },

    /// A harmonic of the continued frequency hits a linear eigenfrequency.
    #[error("resonance: omega_{index} / omega = {ratio} is within {margin} of an integer")]
    ResonanceEncountered {
        index: usize,
        ratio: f64,
        margin: f64,
    },

    /// The left factor of the two-layer transfer matrix is singular.
    #[error("two-layer transfer factor is singular at omega^2 = {omega2}")]
    SingularFactor { omega2: f64 },

    /// The requested lattice exceeds the solver size cap.
    #[error("lattice side {n} exceeds the cap of {cap}")]
    SizeCapExceeded { n: usize, cap: usize },
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, ChainError>;

/// Checks that `value` is finite and strictly positive.
pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ChainError::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

/// Checks that `value` is finite and non-negative.
pub(crate) fn require_nonnegative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(ChainError::InvalidParameter {
            name,
            value,
            reason: "must be finite and >= 0",
        })
    }
}
