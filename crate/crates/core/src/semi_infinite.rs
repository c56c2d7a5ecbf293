//! Edge states of the semi-infinite chain and the Zak phase of the bulk.
//!
//! A left edge state of the chain grounded by `k31` is `c1 a^m v1` with
//! `|a| < 1`. Its decay factor `a~` solves
//! `(k31 - k2)^2 k1 a^2 + [k2 (k31 - k2)^2 - k2^3] a - k1 k2^2 = 0`,
//! and the branch sign follows from the boundary equation of the first mass.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bulk::{cell_vectors, omega2_from_decay, BulkParams, TransferEigen};
use crate::error::{require_nonnegative, ChainError, Result};
use crate::real::Real;

/// Relative tolerance for the special boundary values `k31 = k2` and `|k31 - k2| = k2`.
pub const SPECIAL_K31_TOLERANCE: f64 = 1e-12;

/// Where the edge-state frequency lies relative to the bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeLocation {
    /// Between the acoustic and optical bands.
    InGap,
    /// Above the optical band.
    AboveOptical,
    /// Root on the unit circle (`a~ = ±1`): no localized state.
    None,
}

/// One root of the semi-infinite edge-state equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiInfiniteRoot {
    pub a_tilde: f64,
    pub sigma: f64,
    pub omega2: f64,
    pub location: EdgeLocation,
    /// Right boundary stiffness that makes the finite chain carry this state
    /// exactly (`+inf` when `v1` has a vanishing second component).
    pub k32_match: f64,
}

/// Coefficients `(A, B, C)` of `A a^2 + B a + C = 0`.
pub fn edge_quadratic(k1: f64, k2: f64, k31: f64) -> (f64, f64, f64) {
    let d2 = (k31 - k2) * (k31 - k2);
    (d2 * k1, k2 * d2 - k2 * k2 * k2, -k1 * k2 * k2)
}

/// Residual of the edge-state quadratic at `a`.
pub fn edge_quadratic_residual(k1: f64, k2: f64, k31: f64, a: f64) -> f64 {
    let (qa, qb, qc) = edge_quadratic(k1, k2, k31);
    (qa * a + qb) * a + qc
}

/// Real roots of the edge-state quadratic with `|a| < 1`, in any precision.
/// Uses the cancellation-free quadratic formula; returns the single root
/// `-k1/k2` when the leading coefficient vanishes.
pub fn decaying_roots_in<R: Real>(k1: f64, k2: f64, k31: f64) -> Vec<R> {
    let (rk1, rk2, rk31) = (R::from_f64(k1), R::from_f64(k2), R::from_f64(k31));
    let d = rk31 - rk2;
    let d2 = d * d;
    let qa = d2 * rk1;
    let qb = rk2 * d2 - rk2 * rk2 * rk2;
    let qc = -rk1 * rk2 * rk2;
    let one = R::one();
    let keep = |r: R| r.abs() < one;
    if qa == R::zero() {
        let r = -qc / qb;
        return if keep(r) { vec![r] } else { Vec::new() };
    }
    let disc = qb * qb - R::from_f64(4.0) * qa * qc;
    if disc < R::zero() {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let q = if qb >= R::zero() {
        -(qb + sq) / R::from_f64(2.0)
    } else {
        -(qb - sq) / R::from_f64(2.0)
    };
    let mut out: Vec<R> = [q / qa, qc / q].into_iter().filter(|&r| keep(r)).collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    out
}

fn is_close(x: f64, y: f64) -> bool {
    (x - y).abs() <= SPECIAL_K31_TOLERANCE * y.abs().max(1.0)
}

/// Residual of the first-mass boundary equation `(omega^2 - k1 - k31) v11 + k1 v12`
/// for the decaying eigenvector `v1`, scaled by the magnitudes involved.
fn boundary_residual(p: &BulkParams, k31: f64, a: f64, sigma: f64, omega2: f64) -> Option<f64> {
    let te = TransferEigen {
        a: Complex64::new(a, 0.0),
        sigma,
        omega2,
        theta: None,
        degenerate: false,
    };
    let cv = cell_vectors(p, &te).ok()?;
    let (v11, v12) = (cv.v1[0].re, cv.v1[1].re);
    let res = (omega2 - p.k1 - k31) * v11 + p.k1 * v12;
    let scale = (omega2 - p.k1 - k31).abs() * v11.abs() + p.k1 * v12.abs();
    Some(res.abs() / scale.max(f64::MIN_POSITIVE))
}

/// Location of a frequency relative to the bands.
fn locate(p: &BulkParams, omega2: f64) -> EdgeLocation {
    if omega2 > 2.0 * (p.k1 + p.k2) {
        EdgeLocation::AboveOptical
    } else {
        EdgeLocation::InGap
    }
}

/// Right stiffness `omega^2 - k1 + k1 v11/v12` that terminates the state exactly.
fn matching_k32(p: &BulkParams, a: f64, sigma: f64, omega2: f64) -> f64 {
    let te = TransferEigen {
        a: Complex64::new(a, 0.0),
        sigma,
        omega2,
        theta: None,
        degenerate: false,
    };
    match cell_vectors(p, &te) {
        Ok(cv) if cv.v1[1].re != 0.0 => omega2 - p.k1 + p.k1 * cv.v1[0].re / cv.v1[1].re,
        _ => f64::INFINITY,
    }
}

/// All left edge states of the semi-infinite chain grounded by `k31`.
///
/// The special values are handled explicitly: `k31 = k2` gives the single
/// mid-gap root `-k1/k2`, and `|k31 - k2| = k2` gives the roots `±1`, which
/// are returned with location [`EdgeLocation::None`].
pub fn solve_semi_infinite(k1: f64, k2: f64, k31: f64) -> Result<Vec<SemiInfiniteRoot>> {
    let p = BulkParams::new(k1, k2)?;
    require_nonnegative("k31", k31)?;
    if is_close((k31 - k2).abs(), k2) {
        return Ok([-1.0, 1.0]
            .into_iter()
            .map(|a| {
                let sigma = if k31 > k2 { 1.0 } else { -1.0 };
                let omega2 = k1 + k2 + a * sigma * (k1 + k2 * a);
                SemiInfiniteRoot {
                    a_tilde: a,
                    sigma,
                    omega2,
                    location: EdgeLocation::None,
                    k32_match: f64::NAN,
                }
            })
            .collect());
    }
    if is_close(k31, k2) {
        let a = -k1 / k2;
        if a.abs() >= 1.0 {
            return Ok(Vec::new());
        }
        return Ok(vec![SemiInfiniteRoot {
            a_tilde: a,
            sigma: 1.0,
            omega2: k1 + k2,
            location: EdgeLocation::InGap,
            k32_match: f64::INFINITY,
        }]);
    }
    let mut out = Vec::new();
    for a in decaying_roots_in::<f64>(k1, k2, k31) {
        let mut best: Option<(f64, f64, f64)> = None;
        for sigma in [1.0, -1.0] {
            let Some(omega2) = omega2_from_decay(&p, a, sigma) else {
                continue;
            };
            if let Some(res) = boundary_residual(&p, k31, a, sigma, omega2) {
                if best.is_none_or(|b| res < b.2) {
                    best = Some((sigma, omega2, res));
                }
            }
        }
        if let Some((sigma, omega2, res)) = best {
            if res <= 1e-8 {
                out.push(SemiInfiniteRoot {
                    a_tilde: a,
                    sigma,
                    omega2,
                    location: locate(&p, omega2),
                    k32_match: matching_k32(&p, a, sigma, omega2),
                });
            }
        }
    }
    Ok(out)
}

/// Number of left edge states of the semi-infinite chain from the closed-form
/// case analysis of the root locations.
pub fn count_edge_states_semi(k1: f64, k2: f64, k31: f64) -> usize {
    let special = is_close(k31, 0.0) || is_close(k31, 2.0 * k2);
    if k1 < k2 {
        if special {
            0
        } else {
            1
        }
    } else if k31 > 2.0 * k2 && !special {
        if k1 > k2 {
            2
        } else {
            1
        }
    } else {
        0
    }
}

/// Zak phase from a Wilson loop over the Brillouin zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZakResult {
    /// Wilson-loop phase reduced to `[0, 2 pi)`.
    pub gamma_numeric: f64,
    /// `pi` for `k1 < k2`, `0` for `k1 > k2`.
    pub gamma_closed: f64,
    /// Number of Bloch angles used after refinement.
    pub grid_points: usize,
}

/// Normalized acoustic-band Bloch vector `(|z|, z) / (sqrt 2 |z|)` with
/// `z = k1 + k2 e^{i theta}`.
fn bloch_vector(p: &BulkParams, theta: f64) -> [Complex64; 2] {
    let z = p.k1 + p.k2 * Complex64::from_polar(1.0, theta);
    let m = z.norm();
    let s = 1.0 / (2f64.sqrt() * m);
    [Complex64::new(m * s, 0.0), z * s]
}

/// Distance of `x` from the nearest multiple of `2 pi`.
pub fn angle_distance(x: f64, y: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let d = (x - y).rem_euclid(tau);
    d.min(tau - d)
}

/// Zak phase `gamma = -Im sum log <v(theta_j), v(theta_{j+1})>` over a closed
/// loop in `[-pi, pi]`. The uniform grid is refined wherever the Bloch vector
/// turns by more than half a radian between neighbours, which matters when the
/// gap is nearly closed and the phase winds quickly near `theta = pi`.
pub fn zak_phase(k1: f64, k2: f64, grid_points: usize) -> Result<ZakResult> {
    let p = BulkParams::new(k1, k2)?;
    if (k1 - k2).abs() <= 1e-9 {
        return Err(ChainError::GapClosed((k1 - k2).abs()));
    }
    if grid_points < 64 {
        return Err(ChainError::InvalidParameter {
            name: "grid_points",
            value: grid_points as f64,
            reason: "need at least 64 grid points",
        });
    }
    let pi = std::f64::consts::PI;
    let mut thetas: Vec<f64> = (0..=grid_points)
        .map(|j| -pi + 2.0 * pi * j as f64 / grid_points as f64)
        .collect();
    let overlap = |t0: f64, t1: f64| {
        let a = bloch_vector(&p, t0);
        let b = bloch_vector(&p, t1);
        a[0].conj() * b[0] + a[1].conj() * b[1]
    };
    loop {
        let mut refined = Vec::with_capacity(thetas.len() * 2);
        let mut changed = false;
        for w in thetas.windows(2) {
            refined.push(w[0]);
            if overlap(w[0], w[1]).arg().abs() > 0.25 && w[1] - w[0] > 1e-15 {
                refined.push(0.5 * (w[0] + w[1]));
                changed = true;
            }
        }
        refined.push(*thetas.last().unwrap());
        thetas = refined;
        if !changed || thetas.len() > 50_000_000 {
            break;
        }
    }
    let total: f64 = thetas.windows(2).map(|w| overlap(w[0], w[1]).arg()).sum();
    let gamma = (-total).rem_euclid(std::f64::consts::TAU);
    Ok(ZakResult {
        gamma_numeric: gamma,
        gamma_closed: if k1 < k2 { pi } else { 0.0 },
        grid_points: thetas.len() - 1,
    })
}
