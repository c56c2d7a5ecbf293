//! Eigenstates sitting exactly on a band edge (`a = ±1`) and the existence
//! conditions for out-of-band states near a band edge.
//!
//! At `a = ±1` the transfer matrix has the eigenvector `v1 = (1, -a sigma)`
//! and the generalized eigenvector `v2 = (1, a sigma)`, and the frequency is
//! `omega^2 = k1 + k2 + a sigma (k1 + k2 a)`. A mode `c1 v1 + c2 v2` in the
//! first cell grows linearly in `c2` along the chain, so both boundary
//! equations together fix `k32` uniquely for every `k31`.

use serde::{Deserialize, Serialize};

use crate::asymptotics::regime::{boundary_margin, closeness, Closeness};
use crate::bulk::{band_edge_omega2, BulkParams};
use crate::chain::{assemble, ChainConfig};
use crate::error::{ChainError, Result};
use crate::tridiag::sturm_count;

/// A margin `|k31 - k2(1 + sigma)|` counts as large compared with `1/n` above `FAR_FACTOR / n`.
pub const FAR_FACTOR: f64 = 10.0;
/// A margin `|k31 - k2(1 + sigma)|` counts as small compared with `1/n` below `NEAR_FACTOR / n`.
pub const NEAR_FACTOR: f64 = 0.1;

/// Asymptotic tier of the band-edge matching rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BandEdgeTier {
    /// `|k31 - k2(1+sigma)| >> 1/n`: `k32 ≈ k2(1+sigma) + a sigma k1 k2 / (n (k2 + a k1))`.
    FarFromSpecial,
    /// `|k31 - k2(1+sigma)| << 1/n`: `k32` is the mirror image `2 k2 (1+sigma) - k31`.
    NearSpecial,
    /// `|k31 - k2(1+sigma)| = Θ(1/n)`: only sign information is available.
    Intermediate,
}

/// Which coefficient branch of the first cell produced the match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BandEdgeBranch {
    /// `c1 = 1` and `c2` fixed by the left boundary.
    Regular,
    /// `c1 = 0`, possible only for `k31 = k2(1+sigma) + 2 a sigma k1`.
    VanishingC1,
}

/// Exact right stiffness that places an eigenvalue on a band edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandEdgeMatch {
    pub a: f64,
    pub sigma: f64,
    /// Band-edge frequency `k1 + k2 + a sigma (k1 + k2 a)`.
    pub omega2: f64,
    /// Exact `k32` from the case enumeration.
    pub k32: f64,
    pub branch: BandEdgeBranch,
    /// `c2` of the regular branch (`c1 = 1`); `1` on the vanishing-`c1` branch.
    pub c2: f64,
    /// `1 - c2 - c2 (n-1) D_a` with `D_a = 2(k2 + a k1)/k2`.
    pub zeta: f64,
    pub tier: BandEdgeTier,
    /// Tier estimate of `k32` (`None` in the intermediate tier).
    pub asymptotic_k32: Option<f64>,
    /// Intermediate tier only: whether the exact `k32` obeys the sign rule
    /// relating `a (k31 - k2(1+sigma))` to `k32 - k2(1+sigma)`.
    pub sign_rule_holds: Option<bool>,
}

fn check_unit(a: f64, sigma: f64) -> Result<()> {
    if (a == 1.0 || a == -1.0) && (sigma == 1.0 || sigma == -1.0) {
        Ok(())
    } else {
        Err(ChainError::InvalidA(a))
    }
}

/// Growth rate `D_a = 2 (k2 + a k1) / k2` of the generalized eigenvector per cell.
pub fn growth_rate(k1: f64, k2: f64, a: f64) -> f64 {
    2.0 * (k2 + a * k1) / k2
}

/// Leading-order `k32` of the far tier: `k2(1+sigma) + a sigma k1 k2 / (n (k2 + a k1))`.
pub fn far_tier_k32(k1: f64, k2: f64, n: usize, a: f64, sigma: f64) -> f64 {
    k2 * (1.0 + sigma) + a * sigma * k1 * k2 / (n as f64 * (k2 + a * k1))
}

/// Exact `k32` for which the chain has an eigenvalue on the band edge with
/// decay factor `a = ±1` and branch `sigma`. The `k32` field of `cfg` is ignored.
///
/// With `c1 = 1`, the left boundary gives
/// `c2 = (k2(1+sigma) - k31) / (k31 - k2(1+sigma) - 2 a sigma k1)` and the right
/// boundary gives `k32 = k2(1+sigma) - 2 a sigma c2 k1 / zeta`. When the
/// denominator of `c2` vanishes the first cell is pure `v2` (`c1 = 0`) and
/// `k32 = k2(1+sigma) + 2 a sigma k1 / (1 + (n-1) D_a)`.
pub fn band_edge_match(cfg: &ChainConfig, a: f64, sigma: f64) -> Result<BandEdgeMatch> {
    check_unit(a, sigma)?;
    let p = BulkParams::new(cfg.k1, cfg.k2)?;
    let (k1, k2, k31, n) = (cfg.k1, cfg.k2, cfg.k31, cfg.n);
    let special = k2 * (1.0 + sigma);
    let d = growth_rate(k1, k2, a);
    let m = (n - 1) as f64;
    let omega2 = band_edge_omega2(&p, a, sigma);
    let denom = k31 - special - 2.0 * a * sigma * k1;
    let no_match = ChainError::NoMatch { a, sigma };

    let (k32, branch, c2, zeta) = if denom.abs() <= 1e-12 * (k31.abs() + special + k1) {
        let zeta = 1.0 + m * d;
        if zeta == 0.0 {
            return Err(no_match);
        }
        (
            special + 2.0 * a * sigma * k1 / zeta,
            BandEdgeBranch::VanishingC1,
            1.0,
            zeta,
        )
    } else {
        let c2 = (special - k31) / denom;
        let zeta = 1.0 - c2 - c2 * m * d;
        if zeta == 0.0 {
            return Err(no_match);
        }
        (
            special - 2.0 * a * sigma * c2 * k1 / zeta,
            BandEdgeBranch::Regular,
            c2,
            zeta,
        )
    };
    if !(k32 >= 0.0) || !k32.is_finite() {
        return Err(no_match);
    }

    let margin = k31 - special;
    let scale = 1.0 / n as f64;
    let tier = if margin.abs() >= FAR_FACTOR * scale {
        BandEdgeTier::FarFromSpecial
    } else if margin.abs() <= NEAR_FACTOR * scale {
        BandEdgeTier::NearSpecial
    } else {
        BandEdgeTier::Intermediate
    };
    let asymptotic_k32 = match tier {
        BandEdgeTier::FarFromSpecial => Some(far_tier_k32(k1, k2, n, a, sigma)),
        BandEdgeTier::NearSpecial => Some(2.0 * special - k31),
        BandEdgeTier::Intermediate => None,
    };
    let sign_rule_holds = match tier {
        BandEdgeTier::Intermediate => {
            let shift = k32 - special;
            let edge_zeta = a * sigma * zeta;
            Some(if a * margin > 0.0 {
                edge_zeta * shift < 0.0
            } else {
                a * shift > 0.0
            })
        }
        _ => None,
    };
    Ok(BandEdgeMatch {
        a,
        sigma,
        omega2,
        k32,
        branch,
        c2,
        zeta,
        tier,
        asymptotic_k32,
        sign_rule_holds,
    })
}

/// Number of eigenvalues of `L` below `-omega2`, i.e. modes with frequency above `omega2`.
pub fn modes_above(cfg: &ChainConfig, omega2: f64) -> usize {
    sturm_count(&assemble(cfg), -omega2)
}

/// Locates by bisection the `k32` in `[lo, hi]` at which an eigenfrequency
/// crosses `omega2`, using Sturm counts only. The count of modes above
/// `omega2` must differ at the two ends of the bracket.
pub fn crossing_k32(cfg: &ChainConfig, omega2: f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let count = |k: f64| modes_above(&cfg.with_k32(k), omega2);
    let (mut lo, mut hi) = (lo, hi);
    let c_lo = count(lo);
    if count(hi) == c_lo {
        return Err(ChainError::NoMatch {
            a: f64::NAN,
            sigma: f64::NAN,
        });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count(mid) == c_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Existence conditions for a state at or near one band edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeNeighborhood {
    pub a: f64,
    pub sigma: f64,
    pub omega2: f64,
    /// Stiffness value `k2(1+sigma)` that an end must approach.
    pub special_k3: f64,
    pub left: Closeness,
    pub right: Closeness,
    /// True when at least one end is near (or ambiguously near) `special_k3`,
    /// the necessary condition for an out-of-band state near this edge.
    pub possible: bool,
    /// For `k1 < k2` with a generic left end and an optical edge: the sign that
    /// `k32 - 2k2` must have for an out-of-band state near this edge, whose
    /// magnitude is then `Ω(1/n)` and small.
    pub required_k32_shift_sign: Option<f64>,
}

/// Report on eigenstates at or near the band edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearEdgeReport {
    pub edges: Vec<EdgeNeighborhood>,
    /// Ends whose margin `|k3 - k2| - k2` is close to zero.
    pub special_ends: usize,
    /// Upper bound on eigenfrequencies at the band edges (`k1 < k2` only).
    pub max_band_edge_modes: Option<usize>,
    /// Eigenfrequencies outside the bands away from the edges (`k1 < k2` only).
    pub out_of_band_edge_states: Option<usize>,
    pub summary: String,
}

/// Necessary conditions and counts for states at or near the band edges.
pub fn near_band_edge_existence(cfg: &ChainConfig) -> NearEdgeReport {
    let p = cfg.bulk();
    let n = cfg.n;
    let left_generic = closeness(boundary_margin(cfg.k2, cfg.k31), n) == Closeness::Distinct;
    let mut edges = Vec::new();
    for (a, sigma) in [(1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
        let special = cfg.k2 * (1.0 + sigma);
        let left = closeness(cfg.k31 - special, n);
        let right = closeness(cfg.k32 - special, n);
        let possible = left != Closeness::Distinct || right != Closeness::Distinct;
        let required_k32_shift_sign = if cfg.k1 < cfg.k2 && left_generic && sigma > 0.0 {
            Some(if a < 0.0 { -1.0 } else { 1.0 })
        } else {
            None
        };
        edges.push(EdgeNeighborhood {
            a,
            sigma,
            omega2: band_edge_omega2(&p, a, sigma),
            special_k3: special,
            left,
            right,
            possible,
            required_k32_shift_sign,
        });
    }
    let near = |k3: f64| closeness(boundary_margin(cfg.k2, k3), n) == Closeness::Approx;
    let special_ends = near(cfg.k31) as usize + near(cfg.k32) as usize;
    let (max_band_edge_modes, out_of_band_edge_states, summary) = if cfg.k1 < cfg.k2 {
        match special_ends {
            0 => (
                Some(0),
                Some(2),
                "no eigenfrequencies at band edges; two outside the bands".to_string(),
            ),
            1 => (
                Some(1),
                Some(1),
                "at most one eigenfrequency at a band edge; one edge state outside the bands"
                    .to_string(),
            ),
            _ => {
                let optical = cfg.k31 > cfg.k2 && cfg.k32 > cfg.k2;
                let acoustic = cfg.k31 < cfg.k2 && cfg.k32 < cfg.k2;
                let where_ = if optical {
                    "near optical edges"
                } else if acoustic {
                    "near acoustic edges"
                } else {
                    "one near each band"
                };
                (
                    Some(2),
                    Some(0),
                    format!("at most two {where_}; no edge states"),
                )
            }
        }
    } else {
        (
            None,
            None,
            format!("{special_ends} end(s) near a special stiffness; counts follow the band-inversion case table"),
        )
    };
    NearEdgeReport {
        edges,
        special_ends,
        max_band_edge_modes,
        out_of_band_edge_states,
        summary,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::full_spectrum;

    fn cfg(n: usize, k1: f64, k2: f64, k31: f64) -> ChainConfig {
        ChainConfig::new(n, k1, k2, k31, 0.0).unwrap()
    }

    /// Smallest distance from `omega2` to an exact eigenfrequency.
    fn distance_to_spectrum(c: &ChainConfig, omega2: f64) -> f64 {
        let s = full_spectrum(c).unwrap();
        (0..s.len())
            .map(|r| (s.omega2(r) - omega2).abs())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn vanishing_c1_branch_example() {
        let (k1, k2, n) = (1.0, 2.3, 30);
        let m = band_edge_match(&cfg(n, k1, k2, 2.0 * k2 - 2.0 * k1), -1.0, 1.0).unwrap();
        assert_eq!(m.branch, BandEdgeBranch::VanishingC1);
        let want = 2.0 * k2 - 2.0 * k1 / (1.0 + (n as f64 - 1.0) * (2.0 * k2 - 2.0 * k1) / k2);
        assert!((m.k32 - want).abs() <= 1e-13);
        let c = cfg(n, k1, k2, 2.0 * k2 - 2.0 * k1).with_k32(m.k32);
        assert!(distance_to_spectrum(&c, 2.0 * k2) <= 1e-9);
    }

    #[test]
    fn zero_c2_gives_equal_stiffness() {
        let m = band_edge_match(&cfg(30, 1.0, 2.3, 4.6), 1.0, 1.0).unwrap();
        assert_eq!(m.c2, 0.0);
        assert!((m.k32 - 4.6).abs() <= 1e-14);
    }

    #[test]
    fn matched_stiffness_puts_an_eigenvalue_on_the_edge() {
        for (k31, a, sigma) in [
            (1.6, -1.0, 1.0),
            (1.3, 1.0, 1.0),
            (5.0, -1.0, 1.0),
            (0.7, -1.0, -1.0),
            (0.4, 1.0, -1.0),
        ] {
            let c = cfg(40, 1.0, 1.7, k31);
            match band_edge_match(&c, a, sigma) {
                Ok(m) => {
                    let d = distance_to_spectrum(&c.with_k32(m.k32), m.omega2);
                    assert!(d <= 1e-9, "k31={k31} a={a} sigma={sigma} d={d}");
                }
                Err(ChainError::NoMatch { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn far_tier_estimate_is_second_order_accurate() {
        let (k1, k2) = (1.0, 1.7);
        let mut scaled = Vec::new();
        for n in [50, 100, 200] {
            let m = band_edge_match(&cfg(n, k1, k2, 1.6), -1.0, 1.0).unwrap();
            assert_eq!(m.tier, BandEdgeTier::FarFromSpecial);
            let est = 2.0 * k2 - k1 * k2 / (n as f64 * (k2 - k1));
            assert!((m.asymptotic_k32.unwrap() - est).abs() <= 1e-14);
            scaled.push((m.k32 - est).abs() * (n * n) as f64);
        }
        let mean = scaled.iter().sum::<f64>() / 3.0;
        assert!(scaled.iter().all(|c| (c - mean).abs() <= 0.5 * mean), "{scaled:?}");
    }

    #[test]
    fn bisection_agrees_with_exact_match() {
        let c = cfg(50, 1.0, 1.7, 1.6);
        let m = band_edge_match(&c, -1.0, 1.0).unwrap();
        let k = crossing_k32(&c, 3.4, 2.0, 3.4, 1e-13).unwrap();
        assert!((k - m.k32).abs() <= 1e-9);
    }

    #[test]
    fn near_tier_is_the_mirror_rule() {
        let n = 100;
        let k31 = 3.4 + 1e-4;
        let m = band_edge_match(&cfg(n, 1.0, 1.7, k31), -1.0, 1.0).unwrap();
        assert_eq!(m.tier, BandEdgeTier::NearSpecial);
        assert!((m.k32 - m.asymptotic_k32.unwrap()).abs() <= 1e-6);
        assert!(m.k32 < 3.4);
    }

    #[test]
    fn intermediate_tier_obeys_sign_rule() {
        let n = 100;
        for k31 in [3.4 + 1.0 / n as f64, 3.4 - 1.0 / n as f64] {
            if let Ok(m) = band_edge_match(&cfg(n, 1.0, 1.7, k31), -1.0, 1.0) {
                assert_eq!(m.tier, BandEdgeTier::Intermediate);
                assert_eq!(m.sign_rule_holds, Some(true));
            }
        }
    }

    #[test]
    fn non_unit_a_is_rejected() {
        assert!(band_edge_match(&cfg(10, 1.0, 1.7, 1.6), 0.5, 1.0).is_err());
    }

    #[test]
    fn near_edge_report_counts() {
        let r = near_band_edge_existence(&ChainConfig::new(50, 1.0, 2.3, 1.3, 3.5).unwrap());
        assert_eq!(r.special_ends, 0);
        assert_eq!(r.max_band_edge_modes, Some(0));
        assert_eq!(r.out_of_band_edge_states, Some(2));
        let r = near_band_edge_existence(&ChainConfig::new(50, 1.0, 2.3, 4.6, 4.6).unwrap());
        assert_eq!(r.max_band_edge_modes, Some(2));
        assert!(r.summary.contains("near optical edges"));
        let r = near_band_edge_existence(&ChainConfig::new(50, 1.0, 2.3, 1.3, 4.55).unwrap());
        let lower = r.edges.iter().find(|e| e.a < 0.0 && e.sigma > 0.0).unwrap();
        assert_eq!(lower.required_k32_shift_sign, Some(-1.0));
        assert!(lower.possible);
    }
}
