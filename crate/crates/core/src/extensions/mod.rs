//! Two-layer chains and the two-dimensional diatomic lattice.

pub mod banded;
pub mod lattice2d;
pub mod two_layer;
