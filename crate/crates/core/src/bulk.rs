//! Closed-form transfer-matrix algebra of the infinite diatomic chain.
//!
//! Two adjacent unit cells `(u_{2m-1}, u_{2m})` and `(u_{2m+1}, u_{2m+2})` are
//! linked by a 2x2 transfer matrix `T(omega)` with unit determinant. Its two
//! eigenvalues `a` and `1/a` encode either spatial decay (`a` real, `|a| < 1`)
//! or a Bloch phase (`a = e^{i theta}`).

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, ChainError, Result};
use crate::real::Real;

/// Relative tolerance used to declare a frequency to sit on a band edge.
pub const EDGE_TOLERANCE: f64 = 1e-9;

/// Bulk stiffness constants of the diatomic chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BulkParams {
    pub k1: f64,
    pub k2: f64,
}

/// The two pass bands of the diatomic chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Band {
    /// `[0, 2 min(k1, k2)]`
    Acoustic,
    /// `[2 max(k1, k2), 2k1 + 2k2]`
    Optical,
}

impl BulkParams {
    /// Validates and builds the bulk parameters.
    pub fn new(k1: f64, k2: f64) -> Result<Self> {
        require_positive("k1", k1)?;
        require_positive("k2", k2)?;
        Ok(Self { k1, k2 })
    }

    /// Sorted band edges `{0, 2k1, 2k2, 2k1+2k2}` with duplicates removed.
    pub fn band_edges(&self) -> Vec<f64> {
        let mut edges = vec![0.0, 2.0 * self.k1, 2.0 * self.k2, 2.0 * (self.k1 + self.k2)];
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        edges
    }

    /// Closed acoustic band interval.
    pub fn acoustic_band(&self) -> (f64, f64) {
        (0.0, 2.0 * self.k1.min(self.k2))
    }

    /// Closed optical band interval.
    pub fn optical_band(&self) -> (f64, f64) {
        (2.0 * self.k1.max(self.k2), 2.0 * (self.k1 + self.k2))
    }

    /// Band containing `omega2` (closed intervals), if any.
    pub fn band_of(&self, omega2: f64) -> Option<Band> {
        let (a0, a1) = self.acoustic_band();
        let (o0, o1) = self.optical_band();
        if omega2 >= a0 && omega2 <= a1 {
            Some(Band::Acoustic)
        } else if omega2 >= o0 && omega2 <= o1 {
            Some(Band::Optical)
        } else {
            None
        }
    }

    /// Band edge within [`EDGE_TOLERANCE`] of `omega2`, if any.
    pub fn nearby_edge(&self, omega2: f64) -> Option<f64> {
        let tol = EDGE_TOLERANCE * omega2.abs().max(1.0);
        self.band_edges()
            .into_iter()
            .find(|e| (omega2 - e).abs() <= tol)
    }
}

/// Returns `(s, s - 2, s + 2)` where `s = lambda + 1/lambda` is the trace of
/// `T(omega)`. The shifted values use factored forms that stay accurate near
/// the band edges.
pub fn trace_terms(p: &BulkParams, omega2: f64) -> (f64, f64, f64) {
    let kk = p.k1 * p.k2;
    let s_minus = omega2 * (omega2 - 2.0 * p.k1 - 2.0 * p.k2) / kk;
    let s_plus = (omega2 - 2.0 * p.k1) * (omega2 - 2.0 * p.k2) / kk;
    let s = (omega2 * omega2 - 2.0 * omega2 * (p.k1 + p.k2) + 2.0 * kk) / kk;
    (s, s_minus, s_plus)
}

/// Transfer matrix `T(omega)` mapping one unit cell to the next.
pub fn transfer_matrix(p: &BulkParams, omega2: f64) -> Matrix2<f64> {
    let (k1, k2) = (p.k1, p.k2);
    let w = omega2 - k1 - k2;
    Matrix2::new(-k1 * k1, -k1 * w, k1 * w, w * w - k2 * k2) / (k1 * k2)
}

/// Branch sign `sigma = sgn(omega^2 - k1 - k2)`, with `+1` at the mid-gap point.
pub fn branch_sign(p: &BulkParams, omega2: f64) -> f64 {
    if omega2 - p.k1 - p.k2 >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Decay data of the transfer matrix at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferEigen {
    /// Eigenvalue with `|a| <= 1`; `e^{i theta}` with `theta` in `[0, pi]` inside a band.
    pub a: Complex64,
    /// Branch sign `sigma`.
    pub sigma: f64,
    /// Squared frequency.
    pub omega2: f64,
    /// Bloch angle when `|a| = 1`.
    pub theta: Option<f64>,
    /// Set when `omega2` is within [`EDGE_TOLERANCE`] of a band edge.
    pub degenerate: bool,
}

impl TransferEigen {
    /// True when the frequency lies inside a closed pass band.
    pub fn in_band(&self) -> bool {
        self.theta.is_some()
    }

    /// Localization length `-1 / ln|a|` in unit cells (infinite inside a band).
    pub fn localization_length(&self) -> f64 {
        let m = self.a.norm();
        if m >= 1.0 {
            f64::INFINITY
        } else {
            -1.0 / m.ln()
        }
    }

    /// Evaluates `k1 + k2 + sigma sqrt((k1 + k2 a)(k1 + k2/a))`.
    pub fn reconstruct_omega2(&self, p: &BulkParams) -> f64 {
        omega2_of(p, self.a, self.sigma).re
    }
}

/// `k1 + k2 + sigma sqrt((k1 + k2 a)(k1 + k2/a))` for a complex decay factor.
/// The radicand is real for every physical `a`; its principal root is used.
pub fn omega2_of(p: &BulkParams, a: Complex64, sigma: f64) -> Complex64 {
    let rad = (p.k1 + p.k2 * a) * (p.k1 + p.k2 / a);
    let root = if rad.im.abs() <= 1e-14 * rad.norm().max(1.0) && rad.re >= 0.0 {
        Complex64::new(rad.re.sqrt(), 0.0)
    } else {
        rad.sqrt()
    };
    Complex64::new(p.k1 + p.k2, 0.0) + sigma * root
}

/// Real decay factor: returns `omega^2` for a real `a` and branch `sigma`, or
/// `None` when the radicand is negative or the frequency would be negative.
pub fn omega2_from_decay(p: &BulkParams, a: f64, sigma: f64) -> Option<f64> {
    let rad = (p.k1 + p.k2 * a) * (p.k1 + p.k2 / a);
    if !(rad >= 0.0) {
        return None;
    }
    let w = p.k1 + p.k2 + sigma * rad.sqrt();
    (w >= 0.0).then_some(w)
}

/// Solves the characteristic quadratic of `T(omega)` and returns the root with
/// `|a| <= 1` together with the branch sign and the band-edge flag.
///
/// Outside the bands the larger-magnitude root is formed first and `a` is its
/// reciprocal, which avoids cancellation near `a = ±1`.
pub fn solve_decay(p: &BulkParams, omega2: f64) -> TransferEigen {
    let (s, s_minus, s_plus) = trace_terms(p, omega2);
    let sigma = branch_sign(p, omega2);
    let degenerate = p.nearby_edge(omega2).is_some();
    if s_minus > 0.0 || s_plus < 0.0 {
        let disc = (s_minus * s_plus).sqrt();
        let big = 0.5 * (s + s.signum() * disc);
        TransferEigen {
            a: Complex64::new(1.0 / big, 0.0),
            sigma,
            omega2,
            theta: None,
            degenerate,
        }
    } else {
        let theta = 2.0 * (-s_minus).sqrt().atan2(s_plus.sqrt());
        TransferEigen {
            a: Complex64::from_polar(1.0, theta),
            sigma,
            omega2,
            theta: Some(theta),
            degenerate,
        }
    }
}

/// Out-of-band decay factor evaluated in an arbitrary precision. Returns `None`
/// inside the closed bands.
pub fn real_decay_factor<R: Real>(k1: R, k2: R, omega2: R) -> Option<R> {
    let two = R::from_f64(2.0);
    let kk = k1 * k2;
    let s_minus = omega2 * (omega2 - two * k1 - two * k2) / kk;
    let s_plus = (omega2 - two * k1) * (omega2 - two * k2) / kk;
    let s = s_minus + two;
    if s_minus > R::zero() || s_plus < R::zero() {
        let disc = (s_minus * s_plus).sqrt();
        let big = if s > R::zero() {
            (s + disc) / two
        } else {
            (s - disc) / two
        };
        Some(R::one() / big)
    } else {
        None
    }
}

/// Eigenvectors of `T(omega)` for `a` and `1/a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellVectors {
    /// Eigenvector for `a` (generalized case: the proper eigenvector).
    pub v1: [Complex64; 2],
    /// Eigenvector for `1/a` (generalized case: the generalized eigenvector).
    pub v2: [Complex64; 2],
    /// Real-`a` case where `k1 + k2 a < 0`: the natural square roots are
    /// imaginary and the stored components are their magnitudes.
    pub imaginary: bool,
}

impl CellVectors {
    /// Solves `[v1 v2] (c1, c2)^T = w` for the coefficients of a cell vector.
    pub fn coefficients(&self, w: [Complex64; 2]) -> Result<(Complex64, Complex64)> {
        let det = self.v1[0] * self.v2[1] - self.v2[0] * self.v1[1];
        let scale = (self.v1[0].norm() + self.v1[1].norm()) * (self.v2[0].norm() + self.v2[1].norm());
        if det.norm() <= 1e-14 * scale {
            return Err(ChainError::IllConditionedBasis { omega2: f64::NAN });
        }
        let c1 = (w[0] * self.v2[1] - self.v2[0] * w[1]) / det;
        let c2 = (self.v1[0] * w[1] - w[0] * self.v1[1]) / det;
        Ok((c1, c2))
    }
}

/// Eigenvectors `v1` (for `a`) and `v2` (for `1/a`) with unit gauge constants.
///
/// Real `a`: with `P = k1 + k2 a`, `Q = k1 + k2/a` and `s = sgn(P)`,
/// `v1 = (sqrt|Q|, -s sigma sqrt|P|)` and `v2 = (sqrt|P|, -s sigma sqrt|Q|)`.
/// Unit circle: with `sqrt(k1 + k2 e^{-i theta}) = rho e^{i alpha}`,
/// `v1 = (rho e^{i alpha}, -sigma rho e^{-i alpha})` and `v2 = conj(v1)`.
pub fn cell_vectors(p: &BulkParams, te: &TransferEigen) -> Result<CellVectors> {
    if te.degenerate {
        return Err(ChainError::DegenerateTransfer { omega2: te.omega2 });
    }
    let sigma = te.sigma;
    match te.theta {
        Some(theta) => {
            let root = (p.k1 + p.k2 * Complex64::from_polar(1.0, -theta)).sqrt();
            let v1 = [root, -sigma * root.conj()];
            let v2 = [root.conj(), -sigma * root];
            Ok(CellVectors {
                v1,
                v2,
                imaginary: false,
            })
        }
        None => {
            let a = te.a.re;
            let pp = p.k1 + p.k2 * a;
            let qq = p.k1 + p.k2 / a;
            let s = if pp != 0.0 { pp.signum() } else { qq.signum() };
            let (rp, rq) = (pp.abs().sqrt(), qq.abs().sqrt());
            let re = |x: f64| Complex64::new(x, 0.0);
            Ok(CellVectors {
                v1: [re(rq), re(-s * sigma * rp)],
                v2: [re(rp), re(-s * sigma * rq)],
                imaginary: s < 0.0,
            })
        }
    }
}

/// Growth coefficient `kappa_a = -2(k2 + a k1)/k2` of the Jordan chain at `a = ±1`,
/// defined by `T v2 = a (v2 + kappa_a v1)`.
pub fn jordan_coefficient(p: &BulkParams, a: f64) -> f64 {
    -2.0 * (p.k2 + a * p.k1) / p.k2
}

fn check_unit(a: f64) -> Result<()> {
    if a == 1.0 || a == -1.0 {
        Ok(())
    } else {
        Err(ChainError::InvalidA(a))
    }
}

/// Eigenvector `v1 = (1, -a sigma)` and generalized eigenvector `v2 = (1, a sigma)`
/// of `T` at a band edge, where `omega^2 = k1 + k2 + a sigma (k1 + k2 a)`.
pub fn generalized_cell_vectors(_p: &BulkParams, a: f64, sigma: f64) -> Result<CellVectors> {
    check_unit(a)?;
    let re = |x: f64| Complex64::new(x, 0.0);
    Ok(CellVectors {
        v1: [re(1.0), re(-a * sigma)],
        v2: [re(1.0), re(a * sigma)],
        imaginary: false,
    })
}

/// Band-edge frequency `k1 + k2 + a sigma (k1 + k2 a)` for `a = ±1`.
pub fn band_edge_omega2(p: &BulkParams, a: f64, sigma: f64) -> f64 {
    p.k1 + p.k2 + a * sigma * (p.k1 + p.k2 * a)
}

/// Cell `n - 1` reached from the first cell `c1 v1 + c2 v2` at a band edge:
/// `a^{n-1} [c1 v1 + c2 (v2 + (n-1) kappa_a v1)]`.
pub fn generalized_end_cell(
    p: &BulkParams,
    a: f64,
    sigma: f64,
    c1: f64,
    c2: f64,
    n: usize,
) -> Result<[f64; 2]> {
    let cv = generalized_cell_vectors(p, a, sigma)?;
    let m = n.saturating_sub(1) as f64;
    let growth = c1 + c2 * m * jordan_coefficient(p, a);
    let sign = if a < 0.0 && (n.saturating_sub(1)) % 2 == 1 { -1.0 } else { 1.0 };
    Ok([
        sign * (growth * cv.v1[0].re + c2 * cv.v2[0].re),
        sign * (growth * cv.v1[1].re + c2 * cv.v2[1].re),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::close;

    mod approx_eq {
        pub fn close(a: f64, b: f64, tol: f64) -> bool {
            (a - b).abs() <= tol * (1.0 + b.abs())
        }
    }

    fn residual(p: &BulkParams, omega2: f64, lambda: Complex64, v: [Complex64; 2]) -> f64 {
        let t = transfer_matrix(p, omega2);
        let tv0 = t[(0, 0)] * v[0] + t[(0, 1)] * v[1];
        let tv1 = t[(1, 0)] * v[0] + t[(1, 1)] * v[1];
        let scale = v[0].norm() + v[1].norm();
        ((tv0 - lambda * v[0]).norm() + (tv1 - lambda * v[1]).norm()) / scale
    }

    #[test]
    fn transfer_matrix_at_zero_frequency() {
        let p = BulkParams::new(1.0, 1.0).unwrap();
        let t = transfer_matrix(&p, 0.0);
        assert_eq!(t, Matrix2::new(-1.0, 2.0, -2.0, 3.0));
    }

    #[test]
    fn transfer_matrix_has_unit_determinant() {
        let p = BulkParams::new(1.0, 2.3).unwrap();
        assert!((transfer_matrix(&p, 3.3).determinant() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn trace_is_minus_two_at_lower_optical_edge() {
        let p = BulkParams::new(1.0, 2.3).unwrap();
        let t = transfer_matrix(&p, 4.6);
        assert!((t.trace() + 2.0).abs() <= 1e-12);
    }

    #[test]
    fn midgap_decay_factor() {
        let p = BulkParams::new(1.0, 2.3).unwrap();
        let te = solve_decay(&p, 3.3);
        assert!((te.a.re + 1.0 / 2.3).abs() <= 1e-14);
        assert_eq!(te.a.im, 0.0);
        assert_eq!(te.sigma, 1.0);
        assert!(!te.degenerate);
    }

    #[test]
    fn band_edge_is_flagged() {
        let p = BulkParams::new(1.0, 2.3).unwrap();
        let te = solve_decay(&p, 4.6);
        assert!(te.degenerate);
        assert!((te.a.re + 1.0).abs() <= 1e-12);
    }

    #[test]
    fn gap_frequency_reconstructs() {
        let p = BulkParams::new(1.0, 2.3).unwrap();
        let te = solve_decay(&p, 4.0);
        assert!(te.theta.is_none());
        assert!(te.a.re.abs() < 1.0);
        assert_eq!(te.sigma, 1.0);
        assert!(close(te.reconstruct_omega2(&p), 4.0, 1e-12));
    }

    #[test]
    fn in_band_vectors_match_complex_root() {
        let p = BulkParams::new(1.0, 1.0).unwrap();
        // theta = pi/2 corresponds to s = 0, i.e. omega^2 = 2 ± sqrt(2).
        let omega2 = 2.0 + 2f64.sqrt();
        let te = solve_decay(&p, omega2);
        assert!((te.theta.unwrap() - std::f64::consts::FRAC_PI_2).abs() <= 1e-12);
        let cv = cell_vectors(&p, &te).unwrap();
        let rho2 = cv.v1[0].norm_sqr();
        let alpha = cv.v1[0].arg();
        assert!(close(rho2, 2f64.sqrt(), 1e-12));
        assert!((alpha + std::f64::consts::PI / 8.0).abs() <= 1e-12);
        assert!(residual(&p, omega2, te.a, cv.v1) <= 1e-10);
        assert!(residual(&p, omega2, te.a.inv(), cv.v2) <= 1e-10);
    }

    #[test]
    fn real_vectors_are_eigenvectors_for_both_orderings() {
        for (k1, k2) in [(1.0, 2.3), (2.3, 1.0)] {
            let p = BulkParams::new(k1, k2).unwrap();
            for omega2 in [2.4, 3.3, 4.1, 7.0, 9.5] {
                let te = solve_decay(&p, omega2);
                if te.in_band() {
                    continue;
                }
                let cv = cell_vectors(&p, &te).unwrap();
                assert!(residual(&p, omega2, te.a, cv.v1) <= 1e-10, "{k1} {k2} {omega2}");
                assert!(residual(&p, omega2, te.a.inv(), cv.v2) <= 1e-10);
            }
        }
    }

    #[test]
    fn specified_gap_decay_factor_vectors() {
        let p = BulkParams::new(1.0, 2.3).unwrap();
        let omega2 = omega2_from_decay(&p, -0.51, 1.0).unwrap();
        let te = solve_decay(&p, omega2);
        assert!((te.a.re + 0.51).abs() <= 1e-12);
        let cv = cell_vectors(&p, &te).unwrap();
        assert!(residual(&p, omega2, te.a, cv.v1) <= 1e-10);
        assert!(cv.imaginary);
    }

    #[test]
    fn midgap_vectors_have_vanishing_component() {
        let p = BulkParams::new(1.0, 2.3).unwrap();
        let te = TransferEigen {
            a: Complex64::new(-1.0 / 2.3, 0.0),
            sigma: -1.0,
            omega2: 3.3,
            theta: None,
            degenerate: false,
        };
        let cv = cell_vectors(&p, &te).unwrap();
        let expected = ((2.3f64 * 2.3 - 1.0) / 1.0).sqrt();
        assert!(close(cv.v1[0].re, expected, 1e-12));
        assert!(cv.v1[1].norm() <= 1e-7);
        assert!(residual(&p, 3.3, te.a, cv.v1) <= 1e-10);
    }

    #[test]
    fn degenerate_vectors_are_rejected() {
        let p = BulkParams::new(1.0, 2.3).unwrap();
        let te = solve_decay(&p, 2.0);
        assert!(matches!(
            cell_vectors(&p, &te),
            Err(ChainError::DegenerateTransfer { .. })
        ));
        assert!(matches!(
            generalized_cell_vectors(&p, 0.5, 1.0),
            Err(ChainError::InvalidA(_))
        ));
    }

    fn iterate(p: &BulkParams, omega2: f64, start: [f64; 2], steps: usize) -> [f64; 2] {
        let t = transfer_matrix(p, omega2);
        let mut v = nalgebra::Vector2::new(start[0], start[1]);
        for _ in 0..steps {
            v = t * v;
        }
        [v[0], v[1]]
    }

    #[test]
    fn generalized_eigenvector_only() {
        let p = BulkParams::new(1.0, 2.3).unwrap();
        let u = generalized_end_cell(&p, 1.0, 1.0, 1.0, 0.0, 2).unwrap();
        assert_eq!(u, [1.0, -1.0]);
    }

    #[test]
    fn generalized_growth_at_upper_edge() {
        let p = BulkParams::new(1.0, 2.3).unwrap();
        let u = generalized_end_cell(&p, 1.0, 1.0, 0.0, 1.0, 2).unwrap();
        let g = -2.0 * 3.3 / 2.3;
        assert!(close(u[0], g + 1.0, 1e-12));
        assert!(close(u[1], -g + 1.0, 1e-12));
        let it = iterate(&p, band_edge_omega2(&p, 1.0, 1.0), [1.0, 1.0], 1);
        assert!(close(u[0], it[0], 1e-12) && close(u[1], it[1], 1e-12));
    }

    #[test]
    fn generalized_growth_at_acoustic_upper_edge_matches_iteration() {
        let p = BulkParams::new(1.0, 2.3).unwrap();
        let u = generalized_end_cell(&p, -1.0, -1.0, 0.0, 1.0, 3).unwrap();
        let it = iterate(&p, 2.0, [1.0, 1.0], 2);
        assert!(close(u[0], it[0], 1e-12) && close(u[1], it[1], 1e-12));
        // Growth term along v1 = (1, -1), generalized vector (1, 1).
        let g = -2.0 * (1.3 / 2.3) * 2.0;
        assert!(close(u[0], g + 1.0, 1e-12) && close(u[1], -g + 1.0, 1e-12));
    }

    #[test]
    fn generalized_vectors_hold_for_inverted_bands() {
        let p = BulkParams::new(2.3, 1.0).unwrap();
        for a in [1.0, -1.0] {
            for sigma in [1.0, -1.0] {
                let w2 = band_edge_omega2(&p, a, sigma);
                for (c1, c2) in [(1.0, 0.0), (0.3, 1.0)] {
                    let cv = generalized_cell_vectors(&p, a, sigma).unwrap();
                    let start = [
                        c1 * cv.v1[0].re + c2 * cv.v2[0].re,
                        c1 * cv.v1[1].re + c2 * cv.v2[1].re,
                    ];
                    let it = iterate(&p, w2, start, 4);
                    let u = generalized_end_cell(&p, a, sigma, c1, c2, 5).unwrap();
                    assert!(close(u[0], it[0], 1e-11) && close(u[1], it[1], 1e-11));
                }
            }
        }
    }

    #[test]
    fn band_edges_coalesce() {
        let p = BulkParams::new(1.0, 1.0).unwrap();
        assert_eq!(p.band_edges(), vec![0.0, 2.0, 4.0]);
        let p = BulkParams::new(2.3, 1.0).unwrap();
        assert_eq!(p.band_edges(), vec![0.0, 2.0, 4.6, 6.6]);
    }

    #[test]
    fn extended_precision_decay_factor_agrees() {
        use crate::real::DoubleDouble;
        let p = BulkParams::new(1.0, 2.3).unwrap();
        let te = solve_decay(&p, 4.1);
        let dd = real_decay_factor(DoubleDouble::from(1.0), DoubleDouble::from(2.3), DoubleDouble::from(4.1)).unwrap();
        assert!((dd.to_f64() - te.a.re).abs() <= 1e-15);
    }
}
