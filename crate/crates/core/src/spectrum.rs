//! Exact spectrum of the finite chain.
//!
//! Eigenvalues of `L` are `-omega^2`. When the two boundary stiffnesses are
//! exactly equal the chain is mirror symmetric, and the solver diagonalizes the
//! even and odd blocks separately. This returns the true symmetric and
//! antisymmetric eigenvectors even when their splitting is far below the
//! working precision.

use serde::{Deserialize, Serialize};

use crate::chain::{assemble_in, ChainConfig, ChainEnd, Tridiagonal};
use crate::error::Result;
use crate::real::{Real, DoubleDouble};
use crate::tridiag::{eigenpairs, fix_sign, residual_norm, Eigenpairs};

/// Ordered exact eigenpairs of `L` for one chain configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub config: ChainConfig,
    /// Eigenvalues `-omega^2` of `L`, ascending.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors aligned with `eigenvalues`.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Infinity norm of `L`.
    pub norm: f64,
}

impl Spectrum {
    /// Number of modes `2n`.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    /// True when there are no modes (never for a valid chain).
    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Position in `eigenvalues` of the mode with the given ascending-`omega^2` rank.
    pub fn storage_index(&self, rank: usize) -> usize {
        self.len() - 1 - rank
    }

    /// Squared frequency of the mode with ascending-`omega^2` rank `rank`.
    pub fn omega2(&self, rank: usize) -> f64 {
        -self.eigenvalues[self.storage_index(rank)]
    }

    /// Eigenvector of the mode with ascending-`omega^2` rank `rank`.
    pub fn mode(&self, rank: usize) -> &[f64] {
        &self.eigenvectors[self.storage_index(rank)]
    }

    /// All squared frequencies in ascending order.
    pub fn omega2_ascending(&self) -> Vec<f64> {
        (0..self.len()).map(|r| self.omega2(r)).collect()
    }

    /// Eigen-residual `||L u + omega^2 u||` of the mode with rank `rank`.
    pub fn residual(&self, rank: usize) -> f64 {
        let l = assemble_in::<f64>(&self.config);
        let idx = self.storage_index(rank);
        residual_norm(&l, self.eigenvalues[idx], &self.eigenvectors[idx])
    }
}

/// Spectrum kept in double-double precision, for quantities that differ from
/// their semi-infinite limits by less than `f64` resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedSpectrum {
    pub config: ChainConfig,
    /// Eigenvalues `-omega^2`, ascending.
    pub eigenvalues: Vec<DoubleDouble>,
    pub eigenvectors: Vec<Vec<DoubleDouble>>,
}

impl ExtendedSpectrum {
    /// Squared frequency of the mode with ascending-`omega^2` rank `rank`.
    pub fn omega2(&self, rank: usize) -> DoubleDouble {
        -self.eigenvalues[self.eigenvalues.len() - 1 - rank]
    }

    /// Eigenvector of the mode with ascending-`omega^2` rank `rank`.
    pub fn mode(&self, rank: usize) -> &[DoubleDouble] {
        &self.eigenvectors[self.eigenvalues.len() - 1 - rank]
    }

    /// Rounds to an `f64` spectrum.
    pub fn to_f64(&self) -> Spectrum {
        let l = assemble_in::<f64>(&self.config);
        Spectrum {
            config: self.config,
            eigenvalues: self.eigenvalues.iter().map(|v| v.to_f64()).collect(),
            eigenvectors: self
                .eigenvectors
                .iter()
                .map(|v| v.iter().map(|x| x.to_f64()).collect())
                .collect(),
            norm: l.norm(),
        }
    }
}

/// Leading `n x n` block of `L` with the middle coupling folded into the last
/// diagonal entry, giving the even (`sign = +1`) or odd (`sign = -1`) sector.
fn parity_block<R: Real>(l: &Tridiagonal<R>, sign: R) -> Tridiagonal<R> {
    let half = l.dim() / 2;
    let mut diag = l.diag[..half].to_vec();
    diag[half - 1] = diag[half - 1] + sign * l.off[half - 1];
    Tridiagonal {
        diag,
        off: l.off[..half - 1].to_vec(),
    }
}

fn solve_in<R: Real>(cfg: &ChainConfig) -> Result<Eigenpairs<R>> {
    cfg.validate()?;
    let l = assemble_in::<R>(cfg);
    if cfg.k31 != cfg.k32 {
        return eigenpairs(&l);
    }
    let half = cfg.n;
    let inv_sqrt2 = R::one() / R::from_f64(2.0).sqrt();
    let mut merged: Vec<(R, Vec<R>)> = Vec::with_capacity(2 * half);
    for sign in [R::one(), -R::one()] {
        let block = eigenpairs(&parity_block(&l, sign))?;
        for (value, x) in block.values.into_iter().zip(block.vectors) {
            let mut u = Vec::with_capacity(2 * half);
            u.extend(x.iter().map(|&v| v * inv_sqrt2));
            u.extend(x.iter().rev().map(|&v| sign * v * inv_sqrt2));
            fix_sign(&mut u);
            merged.push((value, u));
        }
    }
    merged.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let (values, vectors) = merged.into_iter().unzip();
    Ok(Eigenpairs { values, vectors })
}

/// All `2n` eigenpairs of `L` in `f64`.
pub fn full_spectrum(cfg: &ChainConfig) -> Result<Spectrum> {
    let pairs = solve_in::<f64>(cfg)?;
    Ok(Spectrum {
        config: *cfg,
        eigenvalues: pairs.values,
        eigenvectors: pairs.vectors,
        norm: assemble_in::<f64>(cfg).norm(),
    })
}

/// All `2n` eigenpairs of `L` in double-double precision.
pub fn full_spectrum_extended(cfg: &ChainConfig) -> Result<ExtendedSpectrum> {
    let pairs = solve_in::<DoubleDouble>(cfg)?;
    Ok(ExtendedSpectrum {
        config: *cfg,
        eigenvalues: pairs.values,
        eigenvectors: pairs.vectors,
    })
}

/// Derivative of the eigenvalue `-omega^2` of mode `rank` with respect to the
/// boundary stiffness at `end`: `-u_end^2`. It is strictly negative because no
/// eigenvector vanishes at either end.
pub fn frequency_derivative(spectrum: &Spectrum, rank: usize, end: ChainEnd) -> f64 {
    let u = spectrum.mode(rank);
    let x = match end {
        ChainEnd::Left => u[0],
        ChainEnd::Right => u[u.len() - 1],
    };
    -x * x
}
