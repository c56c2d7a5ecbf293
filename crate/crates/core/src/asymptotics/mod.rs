//! Asymptotic estimates for eigenstates of long finite chains, each paired
//! with a check against exact diagonalization.

pub mod band_edge;
pub mod finite_size;
pub mod inband;
pub mod odd_chain;
pub mod regime;

pub use band_edge::{band_edge_match, crossing_k32, near_band_edge_existence, BandEdgeMatch, BandEdgeTier};
pub use finite_size::{c2_of_a, k32_of_a};
pub use inband::{approx_eigvec_error, inband_pattern, measured_delta_theta, EdgeSide, InBandEstimate, Pattern};
pub use odd_chain::{odd_chain_midgap, LocalizationSide, OddChainMode};
pub use regime::{classify_regime, predict_edge_states, EdgeEstimate, Regime, RegimeTag};
