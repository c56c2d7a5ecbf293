//! Finite diatomic chain configuration and its tridiagonal operator `L`.
//!
//! The finite chain of `2n` unit masses obeys `-omega^2 u = L u`. Bonds
//! alternate `k1, k2, ..., k1` and the two end masses are grounded through
//! `k31` (left) and `k32` (right).

use serde::{Deserialize, Serialize};

use crate::bulk::BulkParams;
use crate::error::{require_nonnegative, require_positive, ChainError, Result};
use crate::real::Real;

/// Physical parameters of the finite chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Number of unit cells; the chain has `2n` masses.
    pub n: usize,
    pub k1: f64,
    pub k2: f64,
    /// Left boundary stiffness.
    pub k31: f64,
    /// Right boundary stiffness.
    pub k32: f64,
}

/// Which end of the chain a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChainEnd {
    Left,
    Right,
}

impl ChainConfig {
    /// Builds and validates a configuration.
    pub fn new(n: usize, k1: f64, k2: f64, k31: f64, k32: f64) -> Result<Self> {
        let cfg = Self {
            n,
            k1,
            k2,
            k31,
            k32,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks `n >= 2`, `k1, k2 > 0` and `k31, k32 >= 0`.
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(ChainError::InvalidParameter {
                name: "n",
                value: self.n as f64,
                reason: "chain needs at least two unit cells",
            });
        }
        require_positive("k1", self.k1)?;
        require_positive("k2", self.k2)?;
        require_nonnegative("k31", self.k31)?;
        require_nonnegative("k32", self.k32)
    }

    /// Number of masses `2n`.
    pub fn len(&self) -> usize {
        2 * self.n
    }

    /// Always false: a valid chain has at least four masses.
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Bulk stiffness pair.
    pub fn bulk(&self) -> BulkParams {
        BulkParams {
            k1: self.k1,
            k2: self.k2,
        }
    }

    /// Copy with a different right boundary stiffness.
    pub fn with_k32(&self, k32: f64) -> Self {
        Self { k32, ..*self }
    }

    /// Copy with a different left boundary stiffness.
    pub fn with_k31(&self, k31: f64) -> Self {
        Self { k31, ..*self }
    }

    /// Copy with a different number of cells.
    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..*self }
    }

    /// Mirror image: the chain read from right to left.
    pub fn mirrored(&self) -> Self {
        Self {
            k31: self.k32,
            k32: self.k31,
            ..*self
        }
    }

    /// Boundary stiffness at the given end.
    pub fn boundary(&self, end: ChainEnd) -> f64 {
        match end {
            ChainEnd::Left => self.k31,
            ChainEnd::Right => self.k32,
        }
    }
}

/// Symmetric tridiagonal matrix stored by its diagonal and first off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal<R = f64> {
    pub diag: Vec<R>,
    pub off: Vec<R>,
}

impl<R: Real> Tridiagonal<R> {
    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm(&self) -> R {
        let n = self.dim();
        let mut best = R::zero();
        for i in 0..n {
            let mut s = self.diag[i].abs();
            if i > 0 {
                s = s + self.off[i - 1].abs();
            }
            if i + 1 < n {
                s = s + self.off[i].abs();
            }
            best = best.max(s);
        }
        best
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[R]) -> Vec<R> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s = s + self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s = s + self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Dense copy in `f64`.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i].to_f64();
            if i + 1 < n {
                m[(i, i + 1)] = self.off[i].to_f64();
                m[(i + 1, i)] = self.off[i].to_f64();
            }
        }
        m
    }
}

/// Assembles `L` for the `2n`-mass chain in `f64`.
pub fn assemble(cfg: &ChainConfig) -> Tridiagonal<f64> {
    assemble_in(cfg)
}

/// Assembles `L` in any supported precision. The stiffness values are exact
/// `f64` inputs, so no information is lost by the conversion.
pub fn assemble_in<R: Real>(cfg: &ChainConfig) -> Tridiagonal<R> {
    let len = cfg.len();
    let k1 = R::from_f64(cfg.k1);
    let k2 = R::from_f64(cfg.k2);
    let mut diag = vec![-k1 - k2; len];
    diag[0] = -k1 - R::from_f64(cfg.k31);
    diag[len - 1] = -k1 - R::from_f64(cfg.k32);
    let off = (0..len - 1)
        .map(|i| if i % 2 == 0 { k1 } else { k2 })
        .collect();
    Tridiagonal { diag, off }
}

/// Assembles the operator of an odd chain with `2n + 1` masses. Bonds alternate
/// `k1, k2, ..., k2`; the first mass is grounded by `k31` and the last by `k32`.
pub fn assemble_odd(n: usize, k1: f64, k2: f64, k31: f64, k32: f64) -> Result<Tridiagonal<f64>> {
    require_positive("k1", k1)?;
    require_positive("k2", k2)?;
    require_nonnegative("k31", k31)?;
    require_nonnegative("k32", k32)?;
    if n < 1 {
        return Err(ChainError::InvalidParameter {
            name: "n",
            value: 0.0,
            reason: "odd chain needs at least one unit cell",
        });
    }
    let len = 2 * n + 1;
    let mut diag = vec![-k1 - k2; len];
    diag[0] = -k1 - k31;
    diag[len - 1] = -k2 - k32;
    let off = (0..len - 1)
        .map(|i| if i % 2 == 0 { k1 } else { k2 })
        .collect();
    Ok(Tridiagonal { diag, off })
}
