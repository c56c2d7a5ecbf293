//! Two coupled diatomic chains (two layers of `2n` masses each).
//!
//! Horizontal bonds alternate `k1, k2` along each layer. Vertical bonds are
//! `k5` at odd columns and `k6` at even columns. The first column is grounded
//! by `k31` (upper layer) and `k32` (lower layer), the last by `k41` and `k42`.

use nalgebra::{DMatrix, Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bulk::solve_decay;
use crate::chain::ChainConfig;
use crate::error::{require_nonnegative, require_positive, ChainError, Result};
use crate::modes::{ModeLabel, DEFAULT_EPS_LOC};
use crate::spectrum::full_spectrum;

/// Parameters of the two-layer chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLayerConfig {
    /// Number of unit cells per layer (each layer has `2n` masses).
    pub n: usize,
    pub k1: f64,
    pub k2: f64,
    /// Vertical stiffness at odd columns.
    pub k5: f64,
    /// Vertical stiffness at even columns.
    pub k6: f64,
    /// Left grounding of the upper and lower layer.
    pub k31: f64,
    pub k32: f64,
    /// Right grounding of the upper and lower layer.
    pub k41: f64,
    pub k42: f64,
}

impl TwoLayerConfig {
    /// Checks positivity of `k1, k2` and non-negativity of the rest.
    pub fn validate(&self) -> Result<()> {
        require_positive("k1", self.k1)?;
        require_positive("k2", self.k2)?;
        for (name, v) in [
            ("k5", self.k5),
            ("k6", self.k6),
            ("k31", self.k31),
            ("k32", self.k32),
            ("k41", self.k41),
            ("k42", self.k42),
        ] {
            require_nonnegative(name, v)?;
        }
        if self.n < 1 {
            return Err(ChainError::InvalidParameter {
                name: "n",
                value: 0.0,
                reason: "need at least one unit cell",
            });
        }
        Ok(())
    }

    /// Number of masses `4n`.
    pub fn len(&self) -> usize {
        4 * self.n
    }

    /// True for an empty chain (never for a valid configuration).
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Index of mass `(layer, column)`, both zero based.
    pub fn index(layer: usize, column: usize) -> usize {
        2 * column + layer
    }
}

/// Dense symmetric operator `L` with `q'' = L q`, ordered column by column
/// (upper layer first within a column).
pub fn assemble_two_layer(cfg: &TwoLayerConfig) -> DMatrix<f64> {
    let cols = 2 * cfg.n;
    let mut l = DMatrix::zeros(cfg.len(), cfg.len());
    let mut bond = |i: usize, j: usize, k: f64| {
        l[(i, i)] -= k;
        l[(j, j)] -= k;
        l[(i, j)] += k;
        l[(j, i)] += k;
    };
    for layer in 0..2 {
        for c in 0..cols - 1 {
            let k = if c % 2 == 0 { cfg.k1 } else { cfg.k2 };
            bond(TwoLayerConfig::index(layer, c), TwoLayerConfig::index(layer, c + 1), k);
        }
    }
    for c in 0..cols {
        let k = if c % 2 == 0 { cfg.k5 } else { cfg.k6 };
        bond(TwoLayerConfig::index(0, c), TwoLayerConfig::index(1, c), k);
    }
    let last = cols - 1;
    l[(TwoLayerConfig::index(0, 0), TwoLayerConfig::index(0, 0))] -= cfg.k31;
    l[(TwoLayerConfig::index(1, 0), TwoLayerConfig::index(1, 0))] -= cfg.k32;
    l[(TwoLayerConfig::index(0, last), TwoLayerConfig::index(0, last))] -= cfg.k41;
    l[(TwoLayerConfig::index(1, last), TwoLayerConfig::index(1, last))] -= cfg.k42;
    l
}

/// Closed interval of squared frequencies.
pub type Interval = (f64, f64);

/// The two band pairs of the two-layer chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLayerBands {
    /// Layer-symmetric pair, the single-chain bands.
    pub pair1: [Interval; 2],
    /// Layer-antisymmetric pair, shifted by the vertical bonds.
    pub pair2: [Interval; 2],
}

impl TwoLayerBands {
    fn contains(pair: &[Interval; 2], w: f64, tol: f64) -> bool {
        pair.iter().any(|(lo, hi)| w >= lo - tol && w <= hi + tol)
    }

    /// True when `w` lies in the first pair (within `tol`).
    pub fn in_pair1(&self, w: f64, tol: f64) -> bool {
        Self::contains(&self.pair1, w, tol)
    }

    /// True when `w` lies in the second pair (within `tol`).
    pub fn in_pair2(&self, w: f64, tol: f64) -> bool {
        Self::contains(&self.pair2, w, tol)
    }
}

/// Band pairs from the closed forms at `|a| = 1`.
pub fn two_layer_bands(cfg: &TwoLayerConfig) -> TwoLayerBands {
    let (k1, k2) = (cfg.k1, cfg.k2);
    let s = k1 + k2 + cfg.k5 + cfg.k6;
    let d2 = (cfg.k5 - cfg.k6).powi(2);
    let outer = (d2 + (k1 + k2).powi(2)).sqrt();
    let inner = (d2 + (k1 - k2).powi(2)).sqrt();
    TwoLayerBands {
        pair1: [(0.0, 2.0 * k1.min(k2)), (2.0 * k1.max(k2), 2.0 * (k1 + k2))],
        pair2: [(s - outer, s - inner), (s + inner, s + outer)],
    }
}

/// Which band pair a mode belongs to by its layer symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LayerChannel {
    /// Upper and lower layer move together.
    Symmetric,
    /// Upper and lower layer move opposite.
    Antisymmetric,
    /// Neither dominates.
    Mixed,
}

/// One mode of the two-layer chain with its band-pair membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoLayerMode {
    pub omega2: f64,
    pub in_pair1: bool,
    pub in_pair2: bool,
    /// `|u_upper + u_lower|^2 / (2 |u|^2)`, 1 for symmetric and 0 for antisymmetric modes.
    pub symmetry: f64,
    pub channel: LayerChannel,
    /// Outside the band pair of its own channel (outside both pairs when mixed).
    pub outside_own_pair: bool,
    /// Envelope label from the first and last unit cells.
    pub label: ModeLabel,
    /// Euclidean norm of the first and last unit cells (four masses each).
    pub envelope_left: f64,
    pub envelope_right: f64,
}

/// Exact spectrum of the two-layer chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoLayerSpectrum {
    pub config: TwoLayerConfig,
    pub bands: TwoLayerBands,
    /// Modes in ascending `omega^2`.
    pub modes: Vec<TwoLayerMode>,
    /// Unit eigenvectors aligned with `modes`.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl TwoLayerSpectrum {
    /// Squared frequencies in ascending order.
    pub fn omega2(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.omega2).collect()
    }

    /// Modes outside the band pair of their channel.
    pub fn edge_candidates(&self) -> Vec<&TwoLayerMode> {
        self.modes.iter().filter(|m| m.outside_own_pair).collect()
    }
}

/// Tolerance on band membership.
const BAND_TOL: f64 = 1e-9;
/// Symmetry fraction above which a mode counts as layer symmetric (and below `1 -` as antisymmetric).
const CHANNEL_THRESHOLD: f64 = 0.99;

/// Diagonalizes the two-layer chain and tags each mode.
pub fn two_layer_spectrum(cfg: &TwoLayerConfig) -> Result<TwoLayerSpectrum> {
    cfg.validate()?;
    let l = assemble_two_layer(cfg);
    let eig = SymmetricEigen::new(-l);
    let mut order: Vec<usize> = (0..cfg.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let bands = two_layer_bands(cfg);
    let cols = 2 * cfg.n;
    let mut modes = Vec::with_capacity(cfg.len());
    let mut vectors = Vec::with_capacity(cfg.len());
    for &i in &order {
        let w = eig.eigenvalues[i];
        let u: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        let sym: f64 = (0..cols)
            .map(|c| (u[TwoLayerConfig::index(0, c)] + u[TwoLayerConfig::index(1, c)]).powi(2))
            .sum::<f64>()
            / 2.0;
        let channel = if sym >= CHANNEL_THRESHOLD {
            LayerChannel::Symmetric
        } else if sym <= 1.0 - CHANNEL_THRESHOLD {
            LayerChannel::Antisymmetric
        } else {
            LayerChannel::Mixed
        };
        let (in1, in2) = (bands.in_pair1(w, BAND_TOL), bands.in_pair2(w, BAND_TOL));
        let outside = match channel {
            LayerChannel::Symmetric => !in1,
            LayerChannel::Antisymmetric => !in2,
            LayerChannel::Mixed => !in1 && !in2,
        };
        let left = u[..4].iter().map(|x| x * x).sum::<f64>().sqrt();
        let right = u[u.len() - 4..].iter().map(|x| x * x).sum::<f64>().sqrt();
        let label = if !outside {
            ModeLabel::Extended
        } else if localization_length(cfg, w, channel)? > cfg.n as f64 / 2.0 {
            ModeLabel::SlowDecaying
        } else if right <= DEFAULT_EPS_LOC * left {
            ModeLabel::LeftEdge
        } else if left <= DEFAULT_EPS_LOC * right {
            ModeLabel::RightEdge
        } else {
            ModeLabel::TwoSided
        };
        modes.push(TwoLayerMode {
            omega2: w,
            in_pair1: in1,
            in_pair2: in2,
            symmetry: sym,
            channel,
            outside_own_pair: outside,
            label,
            envelope_left: left,
            envelope_right: right,
        });
        vectors.push(u);
    }
    Ok(TwoLayerSpectrum {
        config: *cfg,
        bands,
        modes,
        eigenvectors: vectors,
    })
}

/// Decay length in unit cells of an out-of-band mode, from the decay factor
/// of its channel (the slower of the two for mixed modes).
fn localization_length(cfg: &TwoLayerConfig, omega2: f64, channel: LayerChannel) -> Result<f64> {
    let t = two_layer_transfer(cfg, omega2)?;
    let decay = match channel {
        LayerChannel::Symmetric => t.a1.norm(),
        LayerChannel::Antisymmetric => t.a2.norm(),
        LayerChannel::Mixed => t.a1.norm().max(t.a2.norm()),
    };
    Ok(if decay >= 1.0 { f64::INFINITY } else { -1.0 / decay.ln() })
}

/// Single-chain spectra that make up the two-layer spectrum when `k5 = k6`
/// and both layers have the same boundary stiffnesses: the symmetric block
/// and the antisymmetric block shifted by `2 k5`. Sorted ascending.
pub fn decoupled_spectrum(cfg: &TwoLayerConfig) -> Result<Vec<f64>> {
    if cfg.k5 != cfg.k6 || cfg.k31 != cfg.k32 || cfg.k41 != cfg.k42 {
        return Err(ChainError::InvalidParameter {
            name: "k5",
            value: cfg.k5,
            reason: "decoupling needs k5 = k6 and equal boundary stiffness in both layers",
        });
    }
    let chain = ChainConfig::new(cfg.n, cfg.k1, cfg.k2, cfg.k31, cfg.k41)?;
    let s = full_spectrum(&chain)?;
    let mut out: Vec<f64> = s.omega2_ascending();
    out.extend(s.omega2_ascending().iter().map(|w| w + 2.0 * cfg.k5));
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Transfer matrix between adjacent unit cells and its eigen-decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerTransfer {
    pub omega2: f64,
    /// Maps `(u_{1,2m-1}, u_{2,2m-1}, u_{1,2m}, u_{2,2m})` to the next cell.
    pub matrix: Matrix4<f64>,
    /// Layer-symmetric decay factor `a1` with `|a1| <= 1` and its branch sign.
    pub a1: Complex64,
    pub sigma1: f64,
    /// Layer-antisymmetric decay factor `a2` with `|a2| <= 1` and its branch sign.
    pub a2: Complex64,
    pub sigma2: f64,
    /// Closed-form eigenvectors for `a1, 1/a1, a2, 1/a2`.
    pub vectors: [Vector4<Complex64>; 4],
}

fn unit_root(s: Complex64) -> Complex64 {
    // Root of a^2 - s a + 1 = 0 with |a| <= 1.
    let disc = (s * s - 4.0).sqrt();
    let (r1, r2) = ((s + disc) / 2.0, (s - disc) / 2.0);
    if r1.norm() <= r2.norm() {
        r1
    } else {
        r2
    }
}

/// Builds `T(omega)` as the product of the inverse left factor and the right
/// factor of the cell recursion and evaluates the closed-form eigen-data.
///
/// Fails with `SingularFactor` when the left factor is singular (which for
/// positive `k1, k2` does not happen, since its determinant is `k1^2 k2^2`).
pub fn two_layer_transfer(cfg: &TwoLayerConfig, omega2: f64) -> Result<TwoLayerTransfer> {
    cfg.validate()?;
    let (k1, k2, k5, k6) = (cfg.k1, cfg.k2, cfg.k5, cfg.k6);
    let g5 = omega2 - k1 - k2 - k5;
    let g6 = k1 + k2 + k6 - omega2;
    #[rustfmt::skip]
    let left = Matrix4::new(
        k2, 0.0, 0.0, 0.0,
        0.0, k2, 0.0, 0.0,
        g5, k5, k1, 0.0,
        k5, g5, 0.0, k1,
    );
    #[rustfmt::skip]
    let right = Matrix4::new(
        -k1, 0.0, g6, -k6,
        0.0, -k1, -k6, g6,
        0.0, 0.0, -k2, 0.0,
        0.0, 0.0, 0.0, -k2,
    );
    let inv = left.try_inverse().ok_or(ChainError::SingularFactor { omega2 })?;
    if left.determinant().abs() <= 1e-14 * (k1 * k2).powi(2) {
        return Err(ChainError::SingularFactor { omega2 });
    }
    let matrix = inv * right;

    // Layer-symmetric channel: the single chain.
    let te = solve_decay(&cfg.bulk_single(), omega2);
    let (a1, sigma1) = (te.a, te.sigma);
    // Layer-antisymmetric channel: (omega^2 - S)^2 - (k5 - k6)^2 = P Q = k1^2 + k2^2 + k1 k2 (a + 1/a).
    let shift = omega2 - (k1 + k2 + k5 + k6);
    let sigma2 = if shift >= 0.0 { 1.0 } else { -1.0 };
    let pq = shift * shift - (k5 - k6).powi(2);
    let s = Complex64::new((pq - k1 * k1 - k2 * k2) / (k1 * k2), 0.0);
    let a2 = unit_root(s);

    let c = |x: f64| Complex64::new(x, 0.0);
    let sym = |a: Complex64, other: Complex64| -> Vector4<Complex64> {
        let p = c(k1) + k2 * a;
        let root = ((c(k1) + k2 * a) * (c(k1) + k2 * other)).sqrt();
        let r = p / root;
        Vector4::new(c(-sigma1), c(-sigma1), r, r) * c(0.5)
    };
    let d5 = k5 - k6;
    let anti = |a: Complex64, other: Complex64| -> Vector4<Complex64> {
        let pq = (c(k1) + k2 * a) * (c(k1) + k2 * other);
        let big = (c(d5 * d5) + pq).sqrt();
        let top = c(d5) + sigma2 * big;
        let d = (c(d5 * d5) + pq + sigma2 * d5 * big).sqrt();
        let p = c(k1) + k2 * a;
        Vector4::new(-top, top, p, -p) / (c(2.0) * d)
    };
    let vectors = [
        sym(a1, a1.inv()),
        sym(a1.inv(), a1),
        anti(a2, a2.inv()),
        anti(a2.inv(), a2),
    ];
    Ok(TwoLayerTransfer {
        omega2,
        matrix,
        a1,
        sigma1,
        a2,
        sigma2,
        vectors,
    })
}

impl TwoLayerConfig {
    fn bulk_single(&self) -> crate::bulk::BulkParams {
        crate::bulk::BulkParams {
            k1: self.k1,
            k2: self.k2,
        }
    }
}
