//! Patterns of the in-band eigenfrequencies next to a band edge.
//!
//! Near an edge with decay factor `a = ±1`, the `k`-th in-band mode has Bloch
//! angle `theta = pi - Δθ` (for `a = -1`) or `theta = Δθ` (for `a = +1`), and
//! `Δθ` follows one of three patterns set by how close each boundary
//! stiffness is to the special value `k2 (1 + sigma)` of that edge:
//! `kπ/(n-1)`, `(k-½)π/(n-1)` or `((k-1)π + γ)/(n-1)`.
//!
//! The second-order series for `θ̃ = (n-1)Δθ - kπ`, the phase shifts `Δα`,
//! `Δβ`, and the approximate eigenvectors are available at the lower optical
//! edge `2k2` of a chain with `k1 < k2`. Chains whose special end is on the
//! left are handled through the mirror image.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bulk::{cell_vectors, solve_decay, Band, BulkParams};
use crate::chain::ChainConfig;
use crate::error::{ChainError, Result};
use crate::spectrum::Spectrum;

/// A margin `|k3 - k2(1+sigma)|` at or below `PINNED_FACTOR / n` counts as `<< 1/n`.
pub const PINNED_FACTOR: f64 = 0.1;
/// A margin `|k3 - k2(1+sigma)|` at or above `FREE_FACTOR / n` counts as `>> 1/n`.
pub const FREE_FACTOR: f64 = 10.0;

/// Lower or upper edge of a band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeSide {
    Lower,
    Upper,
}

/// One band edge together with its transfer-matrix data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeGeometry {
    pub band: Band,
    pub side: EdgeSide,
    /// Squared frequency of the edge.
    pub omega2: f64,
    /// The other root of the same factor of `s ∓ 2` (`0 <-> 2k1+2k2`, `2k1 <-> 2k2`).
    pub partner: f64,
    /// Decay factor at the edge, `±1`.
    pub a: f64,
    /// Branch sign in the band-edge convention `omega^2 = k1 + k2 + a sigma (k1 + k2 a)`.
    pub sigma: f64,
    /// Boundary stiffness `k2 (1 + sigma)` that pins a mode to this edge.
    pub special_k3: f64,
}

/// Locates a band edge. Fails when the gap is closed (`k1 = k2`).
pub fn edge_geometry(p: &BulkParams, band: Band, side: EdgeSide) -> Result<EdgeGeometry> {
    if p.k1 == p.k2 {
        return Err(ChainError::GapClosed(0.0));
    }
    let (k1, k2) = (p.k1, p.k2);
    let top = 2.0 * (k1 + k2);
    let omega2 = match (band, side) {
        (Band::Acoustic, EdgeSide::Lower) => 0.0,
        (Band::Acoustic, EdgeSide::Upper) => 2.0 * k1.min(k2),
        (Band::Optical, EdgeSide::Lower) => 2.0 * k1.max(k2),
        (Band::Optical, EdgeSide::Upper) => top,
    };
    let outer = omega2 == 0.0 || omega2 == top;
    let a = if outer { 1.0 } else { -1.0 };
    let sigma = if omega2 == top || omega2 == 2.0 * k2 { 1.0 } else { -1.0 };
    let partner = if outer {
        top - omega2
    } else if omega2 == 2.0 * k2 {
        2.0 * k1
    } else {
        2.0 * k2
    };
    Ok(EdgeGeometry {
        band,
        side,
        omega2,
        partner,
        a,
        sigma,
        special_k3: k2 * (1.0 + sigma),
    })
}

impl EdgeGeometry {
    /// `Δθ` of a Bloch angle measured from this edge.
    pub fn delta_theta(&self, theta: f64) -> f64 {
        if self.a < 0.0 {
            PI - theta
        } else {
            theta
        }
    }

    /// Second-order expansion of the dispersion relation at the edge:
    /// `omega^2 ≈ edge ± k1 k2 Δθ^2 / (edge - partner)`, with the sign pointing into the band.
    pub fn omega2_near_edge(&self, p: &BulkParams, delta_theta: f64) -> f64 {
        let q = -self.a;
        self.omega2 + q * p.k1 * p.k2 * delta_theta * delta_theta / (self.omega2 - self.partner)
    }

    /// True for the lower optical edge `2k2` of a chain with `k1 < k2`, where the
    /// phase-shift series are available.
    pub fn is_lower_optical_2k2(&self, p: &BulkParams) -> bool {
        p.k1 < p.k2 && self.omega2 == 2.0 * p.k2
    }
}

/// How close one boundary stiffness is to the special value, relative to `1/n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EndTier {
    /// `|k3 - special| << 1/n`.
    Pinned,
    /// `|k3 - special| = Θ(1/n)`.
    Intermediate,
    /// `|k3 - special| >> 1/n`.
    Free,
}

/// Tier of one end for a chain of `n` cells.
pub fn end_tier(k3: f64, special: f64, n: usize) -> EndTier {
    let m = (k3 - special).abs() * n as f64;
    if m <= PINNED_FACTOR {
        EndTier::Pinned
    } else if m >= FREE_FACTOR {
        EndTier::Free
    } else {
        EndTier::Intermediate
    }
}

/// Leading-order pattern of `Δθ` near an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pattern {
    /// `Δθ ≈ kπ/(n-1)`.
    Integer,
    /// `Δθ ≈ (k-½)π/(n-1)`.
    HalfInteger,
    /// `Δθ ≈ ((k-1)π + γ)/(n-1)`.
    Shifted,
}

impl Pattern {
    /// Offset `q` such that the pattern reads `(k - q)π/(n-1)` (`None` for `Shifted`).
    pub fn offset(&self) -> Option<f64> {
        match self {
            Pattern::Integer => Some(0.0),
            Pattern::HalfInteger => Some(0.5),
            Pattern::Shifted => None,
        }
    }

    /// Multiplier relating mode `k` to mode 1: `k` or `2k - 1`.
    pub fn multiplier(&self, k: usize) -> f64 {
        match self {
            Pattern::HalfInteger => 2.0 * k as f64 - 1.0,
            _ => k as f64,
        }
    }
}

/// Predicted in-band data near one band edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InBandEstimate {
    pub edge: EdgeGeometry,
    pub left: EndTier,
    pub right: EndTier,
    pub pattern: Pattern,
    /// Phase offset of the shifted pattern.
    pub gamma: Option<f64>,
    /// Both ends pinned: the integer pattern holds up to an unknown index offset.
    pub offset_ambiguous: bool,
    /// The special end is the left one and the series below refer to the mirror image.
    pub mirrored: bool,
    /// First-order `Δθ^(k)` for `k = 1..=k_max`.
    pub delta_theta: Vec<f64>,
    /// `omega^2` from the edge expansion of the dispersion relation.
    pub omega2: Vec<f64>,
    /// Two-term series for `θ̃^(k) = (n-1)Δθ^(k) - (k - q)π`.
    pub tilde_theta: Option<Vec<f64>>,
    /// `Δα^(k) ≈ k2 Δθ / (2 (k2 - k1))`.
    pub delta_alpha: Option<Vec<f64>>,
    /// `Δβ^(k) ≈ (2k1 + k3 - 2k2) / (2k2 - k3) Δα^(k)` with `k3` the generic end.
    pub delta_beta: Option<Vec<f64>>,
    /// Approximate eigenvectors in chain order (not normalized).
    pub approx_modes: Vec<Vec<f64>>,
}

fn require_small_k(n: usize, k_max: usize) -> Result<()> {
    if k_max == 0 || 10 * k_max > n {
        return Err(ChainError::InvalidParameter {
            name: "k_max",
            value: k_max as f64,
            reason: "must satisfy 1 <= k_max <= n/10",
        });
    }
    Ok(())
}

/// `Δα / Δθ` at the lower optical edge `2k2`.
pub fn alpha_slope(k1: f64, k2: f64) -> f64 {
    k2 / (2.0 * (k2 - k1))
}

/// `Δβ / Δα` fixed by a generic boundary stiffness `k3` at the lower optical edge `2k2`.
pub fn beta_ratio(k1: f64, k2: f64, k3: f64) -> f64 {
    (2.0 * k1 + k3 - 2.0 * k2) / (2.0 * k2 - k3)
}

/// Coefficient `K` of the half-integer series `θ̃ ≈ K x + K^2 x / (n-1)`,
/// `x = (k-½)π/(n-1)`, with the generic end `k3`.
pub fn half_integer_coefficient(k1: f64, k2: f64, k3: f64) -> f64 {
    let x = 2.0 * k2 * (2.0 * k1 + k3 - 2.0 * k2) / (4.0 * k1 * (k1 - k2) * (2.0 * k2 - k3));
    -(x + 0.5)
}

/// Coefficient `Sc` of the integer series `θ̃ ≈ Sc x + (Sc)^2 x / (n-1)`, `x = kπ/(n-1)`.
pub fn integer_coefficient(k1: f64, k2: f64, k31: f64, k32: f64) -> f64 {
    (beta_ratio(k1, k2, k31) + beta_ratio(k1, k2, k32)) * alpha_slope(k1, k2)
}

/// First positive root `x` of `tan x = tau x`, i.e. `(n-1)Δθ^(1)` in the shifted pattern.
pub fn shifted_phase(tau: f64) -> f64 {
    let g = |x: f64| x.sin() - tau * x * x.cos();
    let (mut lo, mut hi) = if tau < 0.0 {
        (0.5 * PI, PI)
    } else if tau > 1.0 {
        (1e-12, 0.5 * PI)
    } else {
        (PI, 1.5 * PI)
    };
    let s_lo = g(lo).signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid).signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Approximate eigenvector `(-1)^{j-1} (sin(m(Δα+Δβ-(j-1)Δθ)), sin(m(-Δα+Δβ-(j-1)Δθ)))`
/// at the lower optical edge, with cells `j = 1..=n`.
pub fn approx_mode(n: usize, m: f64, delta_alpha: f64, delta_beta: f64, delta_theta: f64) -> Vec<f64> {
    let mut u = Vec::with_capacity(2 * n);
    for j in 0..n {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let phase = delta_beta - j as f64 * delta_theta;
        u.push(sign * (m * (delta_alpha + phase)).sin());
        u.push(sign * (m * (-delta_alpha + phase)).sin());
    }
    u
}

/// Selects the `Δθ` pattern near one band edge and evaluates the estimates.
///
/// Fails with `PatternUndetermined` when an end sits in the `Θ(1/n)` tube
/// and the shifted form is unavailable, or when both ends are in that tube.
pub fn inband_pattern(cfg: &ChainConfig, band: Band, side: EdgeSide, k_max: usize) -> Result<InBandEstimate> {
    cfg.validate()?;
    require_small_k(cfg.n, k_max)?;
    let p = cfg.bulk();
    let edge = edge_geometry(&p, band, side)?;
    let n = cfg.n;
    let nm1 = (n - 1) as f64;
    let left = end_tier(cfg.k31, edge.special_k3, n);
    let right = end_tier(cfg.k32, edge.special_k3, n);
    let at_2k2 = edge.is_lower_optical_2k2(&p);
    use EndTier::*;
    let (pattern, offset_ambiguous) = match (left, right) {
        (Free, Free) => (Pattern::Integer, false),
        (Pinned, Pinned) => (Pattern::Integer, true),
        (Pinned, Free) | (Free, Pinned) => (Pattern::HalfInteger, false),
        (Intermediate, Free) | (Free, Intermediate) if at_2k2 => (Pattern::Shifted, false),
        (Intermediate, Free) | (Free, Intermediate) => {
            return Err(ChainError::PatternUndetermined(
                "shifted pattern is only available at the lower optical edge 2k2 with k1 < k2",
            ))
        }
        _ => {
            return Err(ChainError::PatternUndetermined(
                "boundary stiffness inside the Θ(1/n) tube of the edge",
            ))
        }
    };
    // The generic end plays the left role; mirror when the special end is on the left.
    let mirrored = left != Free && right == Free;
    let (k_gen, k_special) = if mirrored { (cfg.k32, cfg.k31) } else { (cfg.k31, cfg.k32) };

    let gamma = (pattern == Pattern::Shifted).then(|| {
        let dk = k_special - 2.0 * p.k2;
        let tau = -2.0 * p.k1 * alpha_slope(p.k1, p.k2) / (nm1 * dk);
        shifted_phase(tau)
    });
    let delta_theta: Vec<f64> = (1..=k_max)
        .map(|k| {
            let kf = k as f64;
            match pattern {
                Pattern::Shifted => ((kf - 1.0) * PI + gamma.unwrap_or(0.0)) / nm1,
                _ => (kf - pattern.offset().unwrap_or(0.0)) * PI / nm1,
            }
        })
        .collect();
    let omega2 = delta_theta.iter().map(|&d| edge.omega2_near_edge(&p, d)).collect();

    let series = at_2k2 && pattern != Pattern::Shifted && !offset_ambiguous;
    let tilde_theta = series.then(|| {
        let coeff = match pattern {
            Pattern::HalfInteger => half_integer_coefficient(p.k1, p.k2, k_gen),
            _ => integer_coefficient(p.k1, p.k2, cfg.k31, cfg.k32),
        };
        delta_theta
            .iter()
            .map(|&d| coeff * d + coeff * coeff * d / nm1)
            .collect()
    });
    let c = alpha_slope(p.k1, p.k2);
    let delta_alpha: Option<Vec<f64>> = at_2k2.then(|| delta_theta.iter().map(|d| c * d).collect());
    let b = beta_ratio(p.k1, p.k2, k_gen);
    let delta_beta: Option<Vec<f64>> = delta_alpha.as_ref().map(|da| da.iter().map(|x| b * x).collect());
    let approx_modes = if series {
        let (d1, a1) = (delta_theta[0], c * delta_theta[0]);
        (1..=k_max)
            .map(|k| {
                let mut u = approx_mode(n, pattern.multiplier(k), a1, b * a1, d1);
                if mirrored {
                    u.reverse();
                }
                u
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(InBandEstimate {
        edge,
        left,
        right,
        pattern,
        gamma,
        offset_ambiguous,
        mirrored,
        delta_theta,
        omega2,
        tilde_theta,
        delta_alpha,
        delta_beta,
        approx_modes,
    })
}

/// Ranks of the first `k_max` in-band modes counted from an edge into its band.
pub fn in_band_ranks(spectrum: &Spectrum, edge: &EdgeGeometry, k_max: usize) -> Vec<usize> {
    let p = spectrum.config.bulk();
    let (lo, hi) = match edge.band {
        Band::Acoustic => p.acoustic_band(),
        Band::Optical => p.optical_band(),
    };
    let mut ranks: Vec<usize> = (0..spectrum.len())
        .filter(|&r| {
            let w = spectrum.omega2(r);
            w > lo && w < hi && !solve_decay(&p, w).degenerate
        })
        .collect();
    if edge.side == EdgeSide::Upper {
        ranks.reverse();
    }
    ranks.truncate(k_max);
    ranks
}

/// Exact `Δθ^(k)` of the first `k_max` in-band modes next to an edge.
pub fn measured_delta_theta(spectrum: &Spectrum, band: Band, side: EdgeSide, k_max: usize) -> Result<Vec<f64>> {
    let p = spectrum.config.bulk();
    let edge = edge_geometry(&p, band, side)?;
    Ok(in_band_ranks(spectrum, &edge, k_max)
        .into_iter()
        .filter_map(|r| solve_decay(&p, spectrum.omega2(r)).theta.map(|t| edge.delta_theta(t)))
        .collect())
}

/// Exact `θ̃^(k) = (n-1)Δθ^(k) - (k - q)π` for a pattern with offset `q`.
pub fn measured_tilde_theta(delta_theta: &[f64], n: usize, pattern: Pattern) -> Result<Vec<f64>> {
    let q = pattern
        .offset()
        .ok_or(ChainError::PatternUndetermined("the shifted pattern has no integer reference"))?;
    Ok(delta_theta
        .iter()
        .enumerate()
        .map(|(i, d)| (n - 1) as f64 * d - (i as f64 + 1.0 - q) * PI)
        .collect())
}

/// Exact phase shifts `(Δθ, Δα, Δβ)` of one mode at the lower optical edge `2k2`.
///
/// `Δα = α + π/2` and `Δβ` is `β` folded into `(-π/2, π/2]`.
pub fn phase_shifts(cfg: &ChainConfig, omega2: f64, u: &[f64]) -> Result<(f64, f64, f64)> {
    let p = cfg.bulk();
    let te = solve_decay(&p, omega2);
    let theta = te.theta.ok_or(ChainError::PatternUndetermined("mode is outside the bands"))?;
    let cv = cell_vectors(&p, &te)?;
    let (c1, _) = cv.coefficients([u[0].into(), u[1].into()])?;
    let beta = c1.arg().rem_euclid(PI);
    let delta_beta = if beta > 0.5 * PI { beta - PI } else { beta };
    Ok((PI - theta, cv.v1[0].arg() + 0.5 * PI, delta_beta))
}

fn unit(u: &[f64]) -> Vec<f64> {
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    u.iter().map(|x| x / norm).collect()
}

/// Max-norm distance between two vectors after unit normalization and sign alignment.
pub fn aligned_max_error(u: &[f64], v: &[f64]) -> f64 {
    let (u, v) = (unit(u), unit(v));
    let plus = u.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let minus = u.iter().zip(&v).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max);
    plus.min(minus)
}

/// Max-norm error of `ũ^(k)`, built from the exact first mode's
/// `(Δθ^(1), Δα^(1), Δβ^(1))`, against the exact `k`-th mode near the lower
/// optical edge `2k2` (unit vectors, sign aligned).
pub fn approx_eigvec_error(spectrum: &Spectrum, k: usize) -> Result<f64> {
    let cfg = spectrum.config;
    let p = cfg.bulk();
    let est = inband_pattern(&cfg, Band::Optical, EdgeSide::Lower, 1)?;
    if !est.edge.is_lower_optical_2k2(&p) || est.tilde_theta.is_none() {
        return Err(ChainError::PatternUndetermined(
            "approximate eigenvectors need the lower optical edge 2k2 with k1 < k2 and a generic end",
        ));
    }
    let ranks = in_band_ranks(spectrum, &est.edge, k);
    if ranks.len() < k {
        return Err(ChainError::PatternUndetermined("not enough in-band modes near the edge"));
    }
    let oriented = |r: usize| -> Vec<f64> {
        let mut u = spectrum.mode(r).to_vec();
        if est.mirrored {
            u.reverse();
        }
        u
    };
    let work = if est.mirrored { cfg.mirrored() } else { cfg };
    let first = oriented(ranks[0]);
    let (dt, da, db) = phase_shifts(&work, spectrum.omega2(ranks[0]), &first)?;
    let approx = approx_mode(cfg.n, est.pattern.multiplier(k), da, db, dt);
    Ok(aligned_max_error(&approx, &oriented(ranks[k - 1])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::power_law_exponent;
    use crate::spectrum::full_spectrum;

    fn gapped_chain(n: usize, k32: f64) -> ChainConfig {
        ChainConfig::new(n, 1.0, 2.3, 1.3, k32).unwrap()
    }

    #[test]
    fn edge_geometry_table() {
        let p = BulkParams::new(1.0, 2.3).unwrap();
        let g = edge_geometry(&p, Band::Optical, EdgeSide::Lower).unwrap();
        assert_eq!((g.omega2, g.a, g.sigma, g.special_k3, g.partner), (4.6, -1.0, 1.0, 4.6, 2.0));
        let g = edge_geometry(&p, Band::Acoustic, EdgeSide::Upper).unwrap();
        assert_eq!((g.omega2, g.a, g.sigma, g.special_k3), (2.0, -1.0, -1.0, 0.0));
        let g = edge_geometry(&p, Band::Acoustic, EdgeSide::Lower).unwrap();
        assert_eq!((g.omega2, g.a, g.sigma, g.special_k3), (0.0, 1.0, -1.0, 0.0));
        let g = edge_geometry(&p, Band::Optical, EdgeSide::Upper).unwrap();
        assert_eq!((g.omega2, g.a, g.sigma, g.special_k3), (6.6, 1.0, 1.0, 4.6));
        assert!(edge_geometry(&BulkParams::new(1.0, 1.0).unwrap(), Band::Optical, EdgeSide::Lower).is_err());
    }

    /// Oracle: the exact dispersion relation `(omega^2 - 2k1)(omega^2 - 2k2) = k1 k2 (2 + 2cos θ)`
    /// and its counterpart at the outer edges.
    #[test]
    fn edge_expansion_matches_dispersion() {
        for (k1, k2) in [(1.0, 2.3), (2.3, 1.0)] {
            let p = BulkParams::new(k1, k2).unwrap();
            for band in [Band::Acoustic, Band::Optical] {
                for side in [EdgeSide::Lower, EdgeSide::Upper] {
                    let g = edge_geometry(&p, band, side).unwrap();
                    let d: f64 = 1e-3;
                    let theta = if g.a < 0.0 { PI - d } else { d };
                    let c = theta.cos();
                    let disc = (k1 * k1 + k2 * k2 + 2.0 * k1 * k2 * c).sqrt();
                    let exact = [k1 + k2 - disc, k1 + k2 + disc]
                        .into_iter()
                        .min_by(|x, y| (x - g.omega2).abs().total_cmp(&(y - g.omega2).abs()))
                        .unwrap();
                    let est = g.omega2_near_edge(&p, d);
                    assert!((est - exact).abs() <= 1e-9, "{band:?} {side:?}: {est} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn integer_and_half_integer_patterns() {
        let est = inband_pattern(&gapped_chain(50, 3.5), Band::Optical, EdgeSide::Lower, 5).unwrap();
        assert_eq!(est.pattern, Pattern::Integer);
        let est = inband_pattern(&gapped_chain(50, 4.6), Band::Optical, EdgeSide::Lower, 5).unwrap();
        assert_eq!(est.pattern, Pattern::HalfInteger);
        for (k32, q) in [(3.5, 0.0), (4.6, 0.5)] {
            let s = full_spectrum(&gapped_chain(50, k32)).unwrap();
            let d = measured_delta_theta(&s, Band::Optical, EdgeSide::Lower, 5).unwrap();
            assert_eq!(d.len(), 5);
            for (i, x) in d.iter().enumerate() {
                let r = x * 49.0 / PI - (i as f64 + 1.0 - q);
                assert!(r.abs() <= 0.2, "k32={k32} k={} residual {r}", i + 1);
            }
        }
    }

    #[test]
    fn pinned_left_end_is_mirrored() {
        let est = inband_pattern(&gapped_chain(50, 1.3).with_k31(4.6), Band::Optical, EdgeSide::Lower, 3).unwrap();
        assert_eq!(est.pattern, Pattern::HalfInteger);
        assert!(est.mirrored);
        let both = inband_pattern(&gapped_chain(50, 4.6).with_k31(4.6), Band::Optical, EdgeSide::Lower, 3).unwrap();
        assert!(both.offset_ambiguous);
    }

    #[test]
    fn intermediate_tube_is_undetermined_off_2k2() {
        let cfg = gapped_chain(50, 1.0 / 50.0);
        assert!(matches!(
            inband_pattern(&cfg, Band::Acoustic, EdgeSide::Upper, 3),
            Err(ChainError::PatternUndetermined(_))
        ));
        assert!(inband_pattern(&gapped_chain(50, 3.5), Band::Optical, EdgeSide::Lower, 6).is_err());
    }

    #[test]
    fn acoustic_patterns_follow_free_end() {
        // A free right end pins the acoustic edges: half-integer pattern.
        let cfg = gapped_chain(100, 0.0);
        let est = inband_pattern(&cfg, Band::Acoustic, EdgeSide::Upper, 5).unwrap();
        assert_eq!(est.pattern, Pattern::HalfInteger);
        let s = full_spectrum(&cfg).unwrap();
        let d = measured_delta_theta(&s, Band::Acoustic, EdgeSide::Upper, 5).unwrap();
        for (x, y) in d.iter().zip(&est.delta_theta) {
            assert!(((x - y) * 99.0 / PI).abs() <= 0.2);
        }
        // Band inversion: the lower optical edge is 2k1 and is pinned by k3 ≈ 0.
        let inv = ChainConfig::new(100, 2.3, 1.0, 1.3, 0.0).unwrap();
        let est = inband_pattern(&inv, Band::Optical, EdgeSide::Lower, 5).unwrap();
        assert_eq!(est.edge.omega2, 4.6);
        assert_eq!(est.pattern, Pattern::HalfInteger);
        let s = full_spectrum(&inv).unwrap();
        let d = measured_delta_theta(&s, Band::Optical, EdgeSide::Lower, 5).unwrap();
        for (x, y) in d.iter().zip(&est.delta_theta) {
            assert!(((x - y) * 99.0 / PI).abs() <= 0.2);
        }
    }

    #[test]
    fn tilde_theta_series_tracks_exact_values() {
        for (k32, pattern) in [(3.5, Pattern::Integer), (4.6, Pattern::HalfInteger)] {
            let cfg = gapped_chain(200, k32);
            let est = inband_pattern(&cfg, Band::Optical, EdgeSide::Lower, 5).unwrap();
            assert_eq!(est.pattern, pattern);
            let s = full_spectrum(&cfg).unwrap();
            let d = measured_delta_theta(&s, Band::Optical, EdgeSide::Lower, 5).unwrap();
            let exact = measured_tilde_theta(&d, 200, pattern).unwrap();
            for (k, (x, y)) in exact.iter().zip(est.tilde_theta.as_ref().unwrap()).enumerate() {
                let scale = ((k + 1) as f64 / 199.0).powi(3) * 50.0;
                assert!((x - y).abs() <= scale, "k={} {x} vs {y}", k + 1);
            }
        }
    }

    #[test]
    fn tilde_theta_error_is_cubic() {
        let mut by_n = Vec::new();
        for n in [50, 100, 200] {
            let s = full_spectrum(&gapped_chain(n, 3.5)).unwrap();
            let d = measured_delta_theta(&s, Band::Optical, EdgeSide::Lower, 5).unwrap();
            let t = measured_tilde_theta(&d, n, Pattern::Integer).unwrap();
            let errs: Vec<f64> = (2..=5).map(|k| (t[k - 1] - k as f64 * t[0]).abs()).collect();
            let ks: Vec<f64> = (2..=5).map(|k| k as f64).collect();
            let slope = power_law_exponent(&ks, &errs).unwrap();
            assert!((2.5..=3.5).contains(&slope), "n={n} slope {slope}");
            by_n.push(errs[1]);
        }
        let slope = -power_law_exponent(&[50.0, 100.0, 200.0], &by_n).unwrap();
        assert!((2.5..=3.5).contains(&slope), "n slope {slope}");
    }

    #[test]
    fn approximate_eigenvectors() {
        let s = full_spectrum(&gapped_chain(50, 3.5)).unwrap();
        assert!(approx_eigvec_error(&s, 1).unwrap() <= 1e-10);
        let e2 = approx_eigvec_error(&s, 2).unwrap();
        let e4 = approx_eigvec_error(&s, 4).unwrap();
        assert!(e2 <= 0.05, "e2 = {e2}");
        assert!((4.0..=16.0).contains(&(e4 / e2)), "ratio {}", e4 / e2);
        let h = full_spectrum(&gapped_chain(50, 4.6)).unwrap();
        assert!(approx_eigvec_error(&h, 2).unwrap() <= 0.05);
    }

    #[test]
    fn predicted_modes_follow_exact_modes() {
        let cfg = gapped_chain(100, 3.5);
        let est = inband_pattern(&cfg, Band::Optical, EdgeSide::Lower, 2).unwrap();
        let s = full_spectrum(&cfg).unwrap();
        let ranks = in_band_ranks(&s, &est.edge, 2);
        for (k, r) in ranks.iter().enumerate() {
            let e = aligned_max_error(&est.approx_modes[k], s.mode(*r));
            assert!(e <= 0.05, "k={} error {e}", k + 1);
        }
    }

    #[test]
    fn shifted_phase_solves_its_equation() {
        for tau in [-3.0, -0.2, 0.4, 2.5] {
            let x = shifted_phase(tau);
            assert!((x.tan() - tau * x).abs() <= 1e-9 * (1.0 + x.tan().abs()), "tau={tau}");
            assert!(x > 0.0);
        }
    }

    #[test]
    fn shifted_pattern_tracks_exact_modes() {
        let n = 100;
        for dk in [1.0, -1.0] {
            let cfg = gapped_chain(n, 4.6 + dk / n as f64);
            let est = inband_pattern(&cfg, Band::Optical, EdgeSide::Lower, 3).unwrap();
            assert_eq!(est.pattern, Pattern::Shifted);
            let s = full_spectrum(&cfg).unwrap();
            let d = measured_delta_theta(&s, Band::Optical, EdgeSide::Lower, 3).unwrap();
            for (x, y) in d.iter().zip(&est.delta_theta) {
                assert!(((x - y) * (n - 1) as f64 / PI).abs() <= 0.2, "dk={dk}: {x} vs {y}");
            }
        }
    }
}
