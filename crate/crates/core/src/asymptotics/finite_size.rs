//! Finite-size corrections to edge states away from the band edges.
//!
//! A left edge state of the finite chain is `c1 a^m v1 + c2 a^{-m} v2` with
//! `c1 = 1`. The left boundary fixes `c2` as a function of `a`, and the right
//! boundary then fixes `k32` as a function of `a` and `c2`.

use num_complex::Complex64;

use crate::bulk::{cell_vectors, omega2_from_decay, BulkParams, CellVectors, TransferEigen};
use crate::chain::ChainConfig;
use crate::error::{ChainError, Result};

fn require_generic_a(a: f64) -> Result<()> {
    if !a.is_finite() || a == 0.0 || a.abs() == 1.0 {
        return Err(ChainError::InvalidParameter {
            name: "a",
            value: a,
            reason: "decay factor must be real, nonzero and different from ±1",
        });
    }
    Ok(())
}

/// Squared frequency and real cell vectors for a real decay factor `a`.
pub fn real_mode_basis(p: &BulkParams, a: f64, sigma: f64) -> Result<(f64, CellVectors)> {
    require_generic_a(a)?;
    let omega2 = omega2_from_decay(p, a, sigma).ok_or(ChainError::InvalidParameter {
        name: "a",
        value: a,
        reason: "no real frequency for this decay factor",
    })?;
    let te = TransferEigen {
        a: Complex64::new(a, 0.0),
        sigma,
        omega2,
        theta: None,
        degenerate: false,
    };
    Ok((omega2, cell_vectors(p, &te)?))
}

/// Coefficient `c2` (with `c1 = 1`) forced by the left boundary equation
/// `(omega^2 - k1 - k31) u1 + k1 u2 = 0` at decay factor `a`.
///
/// It vanishes exactly at the semi-infinite root `a~(k31)`.
pub fn c2_of_a(k1: f64, k2: f64, k31: f64, a: f64, sigma: f64) -> Result<f64> {
    let p = BulkParams::new(k1, k2)?;
    let (omega2, cv) = real_mode_basis(&p, a, sigma)?;
    let g = omega2 - k1 - k31;
    let num = g * cv.v1[0].re + k1 * cv.v1[1].re;
    let den = g * cv.v2[0].re + k1 * cv.v2[1].re;
    let scale = g.abs() * cv.v2[0].re.abs() + k1 * cv.v2[1].re.abs();
    if den.abs() <= 1e-15 * scale {
        return Err(ChainError::DegenerateDenominator("c2 of a"));
    }
    Ok(-num / den)
}

/// Right boundary stiffness that makes `v1 + c2 a^{-m} v2` (cell index `m`
/// counted from zero) an exact eigenmode:
/// `k32 = k1 (v11 + x v21) / (v12 + x v22) + omega^2 - k1` with `x = c2 a^{2-2n}`.
///
/// `x` is formed in the log domain so that tiny `c2` and large `a^{2-2n}`
/// combine without overflow. The `k31` and `k32` fields of `cfg` are ignored.
pub fn k32_of_a(cfg: &ChainConfig, a: f64, sigma: f64, c2: f64) -> Result<f64> {
    let p = BulkParams::new(cfg.k1, cfg.k2)?;
    let (omega2, cv) = real_mode_basis(&p, a, sigma)?;
    let (v11, v12) = (cv.v1[0].re, cv.v1[1].re);
    let (v21, v22) = (cv.v2[0].re, cv.v2[1].re);
    let x = if c2 == 0.0 {
        0.0
    } else {
        let ln = c2.abs().ln() + (2.0 - 2.0 * cfg.n as f64) * a.abs().ln();
        c2.signum() * ln.exp()
    };
    let ratio = if x.is_infinite() {
        if v22 == 0.0 {
            return Err(ChainError::DegenerateDenominator("k32 of a"));
        }
        v21 / v22
    } else {
        let den = v12 + x * v22;
        if den == 0.0 {
            return Err(ChainError::DegenerateDenominator("k32 of a"));
        }
        (v11 + x * v21) / den
    };
    Ok(cfg.k1 * ratio + omega2 - cfg.k1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{decompose, DEFAULT_EPS_LOC};
    use crate::semi_infinite::solve_semi_infinite;
    use crate::spectrum::full_spectrum_extended;

    const K1: f64 = 1.0;
    const K2: f64 = 2.3;
    const K31: f64 = 1.3;

    fn root() -> (f64, f64) {
        let r = solve_semi_infinite(K1, K2, K31).unwrap()[0];
        (r.a_tilde, r.sigma)
    }

    /// Closed form written in terms of `sgn(a)` with the magnitudes of the
    /// square roots.
    fn closed_form(a: f64, sigma: f64) -> f64 {
        let sq = (K1 + K2 / a).abs().sqrt();
        let sp = (K1 + K2 * a).abs().sqrt();
        let s = a.signum();
        (s * (K31 - K2) * sq - sigma * K2 / a * sp) / (sigma * K2 * a * sq - s * (K31 - K2) * sp)
    }

    #[test]
    fn c2_vanishes_at_semi_infinite_root() {
        let (a, s) = root();
        assert!(c2_of_a(K1, K2, K31, a, s).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn c2_matches_closed_form() {
        let (a0, s) = root();
        assert!(K1 + K2 * a0 < 0.0);
        // Positive a with k1 + k2 a > 0 on the optical-side root of a stiff boundary.
        let r = solve_semi_infinite(K1, K2, 6.0).unwrap()[0];
        assert!(r.a_tilde > 0.0);
        for da in [1e-3, -2e-3, 5e-2] {
            let a = r.a_tilde + da;
            let got = c2_of_a(K1, K2, 6.0, a, r.sigma).unwrap();
            let sq = (K1 + K2 / a).sqrt();
            let sp = (K1 + K2 * a).sqrt();
            let want = ((6.0 - K2) * sq - r.sigma * K2 / a * sp)
                / (r.sigma * K2 * a * sq - (6.0 - K2) * sp);
            assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()));
        }
        // Negative a with k1 + k2 a < 0: both square roots are imaginary and
        // the common factor i cancels from the closed form.
        for da in [1e-3, -2e-3] {
            let a = a0 + da;
            let got = c2_of_a(K1, K2, K31, a, s).unwrap();
            let want = closed_form(a, s);
            assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn c2_is_linear_near_the_root() {
        let (a, s) = root();
        let h = 1e-5;
        let slope = (c2_of_a(K1, K2, K31, a + h, s).unwrap() - c2_of_a(K1, K2, K31, a - h, s).unwrap())
            / (2.0 * h);
        let c = c2_of_a(K1, K2, K31, a + 1e-8, s).unwrap();
        assert!((c - slope * 1e-8).abs() <= 1e-4 * c.abs());
        let d = 1e-9;
        let ratio = c2_of_a(K1, K2, K31, a + 2.0 * d, s).unwrap() / c2_of_a(K1, K2, K31, a + d, s).unwrap();
        assert!((ratio - 2.0).abs() <= 1e-4);
    }

    #[test]
    fn k32_limits_reproduce_the_three_cases() {
        let (a0, s) = root();
        let k32_tilde = K31 * K2 / (K31 - K2);
        // |a^{2n}| >> |Δa|: the matched stiffness.
        let short = ChainConfig::new(5, K1, K2, K31, 0.0).unwrap();
        let a = a0 + 1e-10;
        let k = k32_of_a(&short, a, s, c2_of_a(K1, K2, K31, a, s).unwrap()).unwrap();
        assert!((k - k32_tilde).abs() <= 1e-5 * k32_tilde.abs(), "k = {k}");
        // |a^{2n}| << |Δa|: the left stiffness.
        let long = ChainConfig::new(40, K1, K2, K31, 0.0).unwrap();
        let a = a0 + 1e-8;
        let k = k32_of_a(&long, a, s, c2_of_a(K1, K2, K31, a, s).unwrap()).unwrap();
        assert!((k - K31).abs() <= 1e-5, "k = {k}");
        // |a^{2n}| ~ |Δa|: an intermediate value between the two limits.
        let medium = ChainConfig::new(20, K1, K2, K31, 0.0).unwrap();
        let a = a0 + 1e-11;
        let k = k32_of_a(&medium, a, s, c2_of_a(K1, K2, K31, a, s).unwrap()).unwrap();
        assert!((k - K31).abs() > 1e-3 && (k - k32_tilde).abs() > 1e-3, "k = {k}");
    }

    #[test]
    fn k32_round_trip_on_exact_mode() {
        let cfg = ChainConfig::new(50, K1, K2, K31, 3.5).unwrap();
        let s = full_spectrum_extended(&cfg).unwrap().to_f64();
        let (a0, _) = root();
        let target = solve_semi_infinite(K1, K2, K31).unwrap()[0].omega2;
        let rank = (0..s.len())
            .min_by(|&x, &y| (s.omega2(x) - target).abs().total_cmp(&(s.omega2(y) - target).abs()))
            .unwrap();
        let ma = decompose(&cfg, rank, s.omega2(rank), s.mode(rank), DEFAULT_EPS_LOC).unwrap();
        let a = ma.te.a.re;
        assert!((a - a0).abs() <= 1e-10);
        // c2 / c1 = (w2 / c1) a^{n-1}, kept in the log domain.
        let w = ma.w2.re / ma.c1.re;
        let parity = if a < 0.0 && (cfg.n - 1) % 2 == 1 { -1.0 } else { 1.0 };
        let c2 = parity * w.signum() * (w.abs().ln() + (cfg.n as f64 - 1.0) * a.abs().ln()).exp();
        let k = k32_of_a(&cfg, a, ma.te.sigma, c2).unwrap();
        assert!((k - 3.5).abs() <= 1e-6, "k32 = {k}");
    }

    #[test]
    fn invalid_decay_factor_is_rejected() {
        assert!(c2_of_a(K1, K2, K31, 1.0, 1.0).is_err());
        assert!(c2_of_a(K1, K2, K31, 0.0, 1.0).is_err());
    }
}
