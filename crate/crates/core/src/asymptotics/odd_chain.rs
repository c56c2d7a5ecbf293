//! Mid-gap state of an odd chain with `2n + 1` masses.
//!
//! With `k31 = k2` and `k32 = k1` the odd chain has an eigenmode at
//! `omega^2 = k1 + k2` that vanishes on the even sublattice and decays by the
//! factor `-k1/k2` per cell on the odd sublattice. Swapping `k1` and `k2`
//! moves it to the other end.

use serde::{Deserialize, Serialize};

use crate::chain::{assemble_odd, Tridiagonal};
use crate::error::{ChainError, Result};
use crate::tridiag::{eigenvalues, eigenvectors, residual_norm};

/// End of the chain on which a mode is concentrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LocalizationSide {
    Left,
    Right,
    /// Equal weight at both ends (`k1 = k2`).
    Neither,
}

/// Analytic mid-gap mode of the odd chain compared with the exact eigenpair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddChainMode {
    pub n: usize,
    pub k1: f64,
    pub k2: f64,
    /// `k1 + k2`.
    pub omega2: f64,
    /// Unit analytic mode: `u_{2m+1} ∝ (-k1/k2)^m`, `u_{2m} = 0` (one-based indices).
    pub analytic: Vec<f64>,
    /// Residual `||L u + omega^2 u||` of the analytic mode.
    pub analytic_residual: f64,
    /// Exact eigenfrequency closest to `k1 + k2`.
    pub exact_omega2: f64,
    /// Exact unit eigenvector, sign aligned with the analytic mode.
    pub exact_mode: Vec<f64>,
    /// Largest `|u|` of the exact mode on the even sublattice.
    pub even_sublattice_max: f64,
    /// Largest entry-wise distance between exact and analytic modes.
    pub mode_error: f64,
    /// Odd-sublattice ratio `u_{2m+1} / u_{2m-1}`, equal to `-k1/k2`.
    pub ratio: f64,
    pub side: LocalizationSide,
}

/// Operator of the odd chain with the boundary stiffnesses that host the mid-gap mode.
pub fn odd_chain_operator(n: usize, k1: f64, k2: f64) -> Result<Tridiagonal<f64>> {
    assemble_odd(n, k1, k2, k2, k1)
}

/// Builds the analytic mid-gap mode and checks it against the exact eigenpair.
pub fn odd_chain_midgap(k1: f64, k2: f64, n: usize) -> Result<OddChainMode> {
    let t = odd_chain_operator(n, k1, k2)?;
    let omega2 = k1 + k2;
    let ratio = -k1 / k2;
    // Powers in the log domain so long chains with a large ratio stay finite.
    let ln_r = ratio.abs().ln();
    let peak = if ln_r > 0.0 { n as f64 * ln_r } else { 0.0 };
    let mut analytic = vec![0.0; 2 * n + 1];
    for m in 0..=n {
        let sign = if ratio < 0.0 && m % 2 == 1 { -1.0 } else { 1.0 };
        analytic[2 * m] = sign * (m as f64 * ln_r - peak).exp();
    }
    normalize(&mut analytic);
    let analytic_residual = residual_norm(&t, -omega2, &analytic);

    let values = eigenvalues(&t);
    let lambda = values
        .iter()
        .copied()
        .min_by(|x, y| (x + omega2).abs().total_cmp(&(y + omega2).abs()))
        .ok_or(ChainError::InvalidParameter {
            name: "n",
            value: n as f64,
            reason: "empty chain",
        })?;
    let mut exact = eigenvectors(&t, &[lambda])?.remove(0);
    let dot: f64 = exact.iter().zip(&analytic).map(|(x, y)| x * y).sum();
    if dot < 0.0 {
        exact.iter_mut().for_each(|x| *x = -*x);
    }
    let even_sublattice_max = exact.iter().skip(1).step_by(2).fold(0.0f64, |m, x| m.max(x.abs()));
    let mode_error = exact
        .iter()
        .zip(&analytic)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let (first, last) = (exact[0].abs(), exact[2 * n].abs());
    let side = if first > last {
        LocalizationSide::Left
    } else if last > first {
        LocalizationSide::Right
    } else {
        LocalizationSide::Neither
    };
    Ok(OddChainMode {
        n,
        k1,
        k2,
        omega2,
        analytic,
        analytic_residual,
        exact_omega2: -lambda,
        exact_mode: exact,
        even_sublattice_max,
        mode_error,
        ratio,
        side,
    })
}

fn normalize(u: &mut [f64]) {
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    u.iter_mut().for_each(|x| *x /= norm);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midgap_mode_of_101_masses() {
        let m = odd_chain_midgap(1.0, 2.3, 50).unwrap();
        assert_eq!(m.exact_mode.len(), 101);
        assert!((m.exact_omega2 - 3.3).abs() <= 1e-10);
        assert!(m.even_sublattice_max <= 1e-12);
        assert!(m.analytic_residual <= 1e-13);
        assert!(m.mode_error <= 1e-10);
        assert_eq!(m.side, LocalizationSide::Left);
    }

    /// Oracle: substitute the sublattice ansatz into the equations of motion of
    /// the even masses, `k1 u_{2m-1} + k2 u_{2m+1} = 0`.
    #[test]
    fn odd_sublattice_ratio() {
        let m = odd_chain_midgap(1.0, 2.3, 10).unwrap();
        for j in 0..10 {
            let r = m.exact_mode[2 * j + 2] / m.exact_mode[2 * j];
            assert!((r + 1.0 / 2.3).abs() <= 1e-10);
        }
        assert_eq!(m.ratio, -1.0 / 2.3);
    }

    #[test]
    fn swapping_stiffnesses_flips_the_side() {
        let m = odd_chain_midgap(2.3, 1.0, 50).unwrap();
        assert_eq!(m.side, LocalizationSide::Right);
        assert!((m.exact_omega2 - 3.3).abs() <= 1e-10);
        assert!(m.even_sublattice_max <= 1e-12);
        assert_eq!(odd_chain_midgap(1.5, 1.5, 5).unwrap().side, LocalizationSide::Neither);
    }
}
