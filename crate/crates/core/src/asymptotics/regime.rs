//! Boundary regimes of a long chain and the predicted set of edge states.
//!
//! Asymptotic statements of the form `x ≈ y` are turned into finite-`n`
//! decisions by comparing the margin `x - y` with `1/n`: it counts as close
//! when `|x - y| <= 5/n`, as far when `|x - y| >= 50/n`, and as ambiguous in
//! between.

use serde::{Deserialize, Serialize};

use crate::chain::{ChainConfig, ChainEnd};
use crate::modes::ModeLabel;
use crate::semi_infinite::{solve_semi_infinite, EdgeLocation, SemiInfiniteRoot};

/// A margin `m` counts as close to zero when `|m| <= APPROX_FACTOR / n`.
pub const APPROX_FACTOR: f64 = 5.0;
/// A margin `m` counts as far from zero when `|m| >= DISTINCT_FACTOR / n`.
pub const DISTINCT_FACTOR: f64 = 50.0;
/// `|k32 - k31| <= TWO_SIDED_FACTOR |a~|^n` places the chain inside the two-sided tube.
pub const TWO_SIDED_FACTOR: f64 = 0.1;
/// `|k32 - k31| >= ONE_SIDED_FACTOR |a~|^n` places the chain outside the two-sided tube.
pub const ONE_SIDED_FACTOR: f64 = 1e5;

/// Finite-`n` reading of an asymptotic comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Closeness {
    /// The margin is `O(1/n)` with a small constant.
    Approx,
    /// The margin is large compared with `1/n`.
    Distinct,
    /// The margin lies in the annulus between the two thresholds.
    Ambiguous,
}

/// Classifies a margin against the `1/n` thresholds.
pub fn closeness(margin: f64, n: usize) -> Closeness {
    let scale = 1.0 / n as f64;
    let m = margin.abs();
    if m <= APPROX_FACTOR * scale {
        Closeness::Approx
    } else if m >= DISTINCT_FACTOR * scale {
        Closeness::Distinct
    } else {
        Closeness::Ambiguous
    }
}

/// Three-regime taxonomy of the boundary stiffnesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeTag {
    /// Both ends are away from the special values `{0, 2k2}`.
    NearlyInfinite,
    /// The left end is generic and the right end sits near `0` or `2k2`.
    NearlySemiInfiniteLeft,
    /// The right end is generic and the left end sits near `0` or `2k2`.
    NearlySemiInfiniteRight,
    /// Both ends sit near `0` or `2k2`.
    Finite,
    /// At least one margin falls between the thresholds.
    Ambiguous,
}

/// Regime of one configuration together with the margins that decided it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub tag: RegimeTag,
    /// `|k31 - k2| - k2`.
    pub left_margin: f64,
    /// `|k32 - k2| - k2`.
    pub right_margin: f64,
    /// `k2 - k1`; its closeness says whether the bulk gap is nearly closed.
    pub gap_margin: f64,
    pub left: Closeness,
    pub right: Closeness,
    pub gap: Closeness,
}

/// Margin `|k3 - k2| - k2` that vanishes at the special values `0` and `2k2`.
pub fn boundary_margin(k2: f64, k3: f64) -> f64 {
    (k3 - k2).abs() - k2
}

/// Classifies the boundary regime of a configuration.
pub fn classify_regime(cfg: &ChainConfig) -> Regime {
    let left_margin = boundary_margin(cfg.k2, cfg.k31);
    let right_margin = boundary_margin(cfg.k2, cfg.k32);
    let gap_margin = cfg.k2 - cfg.k1;
    let left = closeness(left_margin, cfg.n);
    let right = closeness(right_margin, cfg.n);
    let gap = closeness(gap_margin, cfg.n);
    use Closeness::*;
    let tag = match (left, right) {
        (Distinct, Distinct) => RegimeTag::NearlyInfinite,
        (Distinct, Approx) => RegimeTag::NearlySemiInfiniteLeft,
        (Approx, Distinct) => RegimeTag::NearlySemiInfiniteRight,
        (Approx, Approx) => RegimeTag::Finite,
        _ => RegimeTag::Ambiguous,
    };
    Regime {
        tag,
        left_margin,
        right_margin,
        gap_margin,
        left,
        right,
        gap,
    }
}

/// Order class of a finite-size correction, written in terms of the
/// semi-infinite decay factor `a~`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrderClass {
    /// `O(|a~|^{2n})`
    PowTwoN,
    /// `Θ(|a~|^n)`
    ThetaPowN,
    /// `O(|a~|^{4n})`
    PowFourN,
    /// `Θ(|a~|^{2n})`
    ThetaPowTwoN,
}

impl OrderClass {
    /// Multiplier `p` of the exponent in `|a~|^{p n}`.
    pub fn exponent(&self) -> f64 {
        match self {
            OrderClass::PowTwoN | OrderClass::ThetaPowTwoN => 2.0,
            OrderClass::ThetaPowN => 1.0,
            OrderClass::PowFourN => 4.0,
        }
    }

    /// True for two-sided (`Θ`) bounds.
    pub fn is_tight(&self) -> bool {
        matches!(self, OrderClass::ThetaPowN | OrderClass::ThetaPowTwoN)
    }

    /// Magnitude `|a~|^{p n}` of the class.
    pub fn magnitude(&self, a_tilde: f64, n: usize) -> f64 {
        a_tilde.abs().powf(self.exponent() * n as f64)
    }

    /// Human-readable symbol.
    pub fn symbol(&self) -> &'static str {
        match self {
            OrderClass::PowTwoN => "O(a^2n)",
            OrderClass::ThetaPowN => "Theta(a^n)",
            OrderClass::PowFourN => "O(a^4n)",
            OrderClass::ThetaPowTwoN => "Theta(a^2n)",
        }
    }
}

/// Whether the two ends are close enough to hybridize their edge states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sidedness {
    OneSided,
    TwoSided,
    Ambiguous,
}

/// Predicted edge-state content of a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeEstimate {
    pub regime: Regime,
    /// Decay factor of the leading edge state (left end first, else right end).
    pub a_tilde: Option<f64>,
    /// End at which `a_tilde` lives.
    pub reference_end: Option<ChainEnd>,
    /// Decaying semi-infinite roots attached to each end.
    pub left_roots: Vec<SemiInfiniteRoot>,
    pub right_roots: Vec<SemiInfiniteRoot>,
    pub sidedness: Sidedness,
    /// Order of `|a - a~|` for the reference state.
    pub delta_a_order: Option<OrderClass>,
    /// Order of `|c2|` (with `c1 = 1`) for the reference state.
    pub c2_order: Option<OrderClass>,
    /// Expected multiset of edge labels, sorted.
    pub predicted_labels: Vec<ModeLabel>,
    /// `k3 - k2` at the reference end when it is close to `k2`.
    pub delta_k31: Option<f64>,
    /// Semi-infinite shift `a~ + k1/k2 ≈ k1 (k1^2 - k2^2) δk^2 / k2^5` of the
    /// reference end when `k3 ≈ k2`.
    pub predicted_delta_a: Option<f64>,
    /// Set when some decision fell inside an ambiguity tube.
    pub ambiguous: bool,
}

fn edge_roots(k1: f64, k2: f64, k3: f64) -> Vec<SemiInfiniteRoot> {
    solve_semi_infinite(k1, k2, k3)
        .unwrap_or_default()
        .into_iter()
        .filter(|r| r.location != EdgeLocation::None)
        .collect()
}

/// Leading-order shift of the semi-infinite root away from `-k1/k2` when the
/// boundary stiffness is `k2 + delta_k`.
pub fn special_root_shift(k1: f64, k2: f64, delta_k: f64) -> f64 {
    k1 * (k1 * k1 - k2 * k2) * delta_k * delta_k / k2.powi(5)
}

/// Predicts the number, type and finite-size orders of the edge states.
///
/// Each end contributes the edge states of its own semi-infinite chain
/// unless its stiffness sits near a special value. When the two stiffnesses
/// nearly coincide, the states of both ends pair up into two-sided states.
pub fn predict_edge_states(cfg: &ChainConfig) -> EdgeEstimate {
    let regime = classify_regime(cfg);
    let n = cfg.n;
    let mut ambiguous = regime.tag == RegimeTag::Ambiguous;
    let side_roots = |k3: f64, c: Closeness| match c {
        Closeness::Approx => Vec::new(),
        _ => edge_roots(cfg.k1, cfg.k2, k3),
    };
    let left_roots = side_roots(cfg.k31, regime.left);
    let right_roots = side_roots(cfg.k32, regime.right);

    let (reference_end, roots, k_ref, k_other) = if !left_roots.is_empty() {
        (Some(ChainEnd::Left), &left_roots, cfg.k31, cfg.k32)
    } else if !right_roots.is_empty() {
        (Some(ChainEnd::Right), &right_roots, cfg.k32, cfg.k31)
    } else {
        (None, &left_roots, cfg.k31, cfg.k32)
    };
    let a_tilde = roots
        .iter()
        .map(|r| r.a_tilde)
        .max_by(|x, y| x.abs().total_cmp(&y.abs()));

    // Two-sided tube: both ends carry states and the stiffnesses nearly match.
    let sidedness = if left_roots.is_empty() || right_roots.is_empty() {
        Sidedness::OneSided
    } else {
        let all: Vec<f64> = left_roots
            .iter()
            .chain(&right_roots)
            .map(|r| r.a_tilde.abs().powf(n as f64))
            .collect();
        let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = all.iter().copied().fold(0.0, f64::max);
        let d = (cfg.k32 - cfg.k31).abs();
        if d == 0.0 || d <= TWO_SIDED_FACTOR * lo {
            Sidedness::TwoSided
        } else if d >= ONE_SIDED_FACTOR * hi {
            Sidedness::OneSided
        } else {
            Sidedness::Ambiguous
        }
    };
    if sidedness == Sidedness::Ambiguous {
        ambiguous = true;
    }

    let mut predicted_labels = match sidedness {
        Sidedness::TwoSided => vec![ModeLabel::TwoSided; left_roots.len() + right_roots.len()],
        _ => {
            let mut v = vec![ModeLabel::LeftEdge; left_roots.len()];
            v.extend(vec![ModeLabel::RightEdge; right_roots.len()]);
            v
        }
    };
    predicted_labels.sort();

    // Order classes for the reference state.
    let ratio_pow = (cfg.k1 / cfg.k2).abs().powf(2.0 * n as f64);
    let near_k2 = |k: f64| (k - cfg.k2).abs() <= ratio_pow;
    let (delta_a_order, c2_order) = match a_tilde {
        None => (None, None),
        Some(_) => {
            if sidedness == Sidedness::TwoSided {
                if near_k2(k_ref) && near_k2(k_other) {
                    (Some(OrderClass::ThetaPowTwoN), Some(OrderClass::ThetaPowN))
                } else {
                    (Some(OrderClass::ThetaPowN), Some(OrderClass::ThetaPowN))
                }
            } else if near_k2(k_ref) && cfg.k1 < cfg.k2 {
                (Some(OrderClass::PowFourN), Some(OrderClass::PowTwoN))
            } else {
                (Some(OrderClass::PowTwoN), Some(OrderClass::PowTwoN))
            }
        }
    };

    let (delta_k31, predicted_delta_a) = match reference_end {
        Some(_) if cfg.k1 < cfg.k2 && (k_ref - cfg.k2).abs() <= 0.1 * cfg.k2 => {
            let dk = k_ref - cfg.k2;
            (Some(dk), Some(special_root_shift(cfg.k1, cfg.k2, dk)))
        }
        _ => (None, None),
    };

    EdgeEstimate {
        regime,
        a_tilde,
        reference_end,
        left_roots,
        right_roots,
        sidedness,
        delta_a_order,
        c2_order,
        predicted_labels,
        delta_k31,
        predicted_delta_a,
        ambiguous,
    }
}
