//! Square `N x N` diatomic lattice in which every row and every column is a
//! diatomic chain.
//!
//! Sites are `(r, c)` with zero-based row and column. The horizontal bond
//! between `(r, c)` and `(r, c + 1)` is `k1` when `r + c` is even and `k2`
//! otherwise; the vertical bond between `(r, c)` and `(r + 1, c)` is `k2`
//! when `r + c` is even and `k1` otherwise. Boundary sites are grounded by
//! `k3` (first column), `k4` (last column), `k5` (first row) and `k6` (last
//! row), with corners receiving both of their sides.

use std::f64::consts::PI;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{require_nonnegative, require_positive, ChainError, Result};
use crate::extensions::banded::{split_window, window_eigenpairs, BandedSymmetric};

/// Largest side handled by the dense solver.
pub const DENSE_CAP: usize = 60;
/// Largest side handled at all (windowed solver).
pub const WINDOW_CAP: usize = 120;
/// Fraction of the norm on the outer two rings above which a mode is an edge state.
pub const EDGE_FRACTION: f64 = 0.9;
/// Slack on band membership.
pub const BAND_SLACK: f64 = 1e-6;
/// Grid resolution per angle when extremizing the bulk bands.
const BAND_GRID: usize = 512;

/// Parameters of the square lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice2DConfig {
    /// Side length (even).
    pub n: usize,
    pub k1: f64,
    pub k2: f64,
    /// Grounding of the first column.
    #[serde(default)]
    pub k3: f64,
    /// Grounding of the last column.
    pub k4: f64,
    /// Grounding of the first row.
    pub k5: f64,
    /// Grounding of the last row.
    pub k6: f64,
}

impl Lattice2DConfig {
    /// Checks the stiffness signs, the parity of `n` and the size cap.
    pub fn validate(&self) -> Result<()> {
        require_positive("k1", self.k1)?;
        require_positive("k2", self.k2)?;
        for (name, v) in [("k3", self.k3), ("k4", self.k4), ("k5", self.k5), ("k6", self.k6)] {
            require_nonnegative(name, v)?;
        }
        if self.n < 4 || !self.n.is_multiple_of(2) {
            return Err(ChainError::InvalidParameter {
                name: "n",
                value: self.n as f64,
                reason: "lattice side must be even and at least 4",
            });
        }
        if self.n > WINDOW_CAP {
            return Err(ChainError::SizeCapExceeded {
                n: self.n,
                cap: WINDOW_CAP,
            });
        }
        Ok(())
    }

    /// Number of sites `N^2`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    /// True for an empty lattice (never for a valid configuration).
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Row-major index of site `(r, c)`.
    pub fn index(&self, r: usize, c: usize) -> usize {
        r * self.n + c
    }

    /// Stiffness of the bond from `(r, c)` to `(r, c + 1)`.
    pub fn horizontal_bond(&self, r: usize, c: usize) -> f64 {
        if (r + c).is_multiple_of(2) {
            self.k1
        } else {
            self.k2
        }
    }

    /// Stiffness of the bond from `(r, c)` to `(r + 1, c)`.
    pub fn vertical_bond(&self, r: usize, c: usize) -> f64 {
        if (r + c).is_multiple_of(2) {
            self.k2
        } else {
            self.k1
        }
    }

    /// Total grounding stiffness of site `(r, c)`.
    pub fn grounding(&self, r: usize, c: usize) -> f64 {
        let last = self.n - 1;
        let mut g = 0.0;
        if c == 0 {
            g += self.k3;
        }
        if c == last {
            g += self.k4;
        }
        if r == 0 {
            g += self.k5;
        }
        if r == last {
            g += self.k6;
        }
        g
    }
}

/// Stiffness matrix `K = -L` (so `omega^2` are its eigenvalues) in banded
/// form with half bandwidth `N`.
pub fn assemble_lattice(cfg: &Lattice2DConfig) -> BandedSymmetric {
    let n = cfg.n;
    let mut k = BandedSymmetric::zeros(cfg.len(), n);
    for r in 0..n {
        for c in 0..n {
            let i = cfg.index(r, c);
            k.add(i, i, cfg.grounding(r, c));
            if c + 1 < n {
                let s = cfg.horizontal_bond(r, c);
                let j = cfg.index(r, c + 1);
                k.add(i, i, s);
                k.add(j, j, s);
                k.add(j, i, -s);
            }
            if r + 1 < n {
                let s = cfg.vertical_bond(r, c);
                let j = cfg.index(r + 1, c);
                k.add(i, i, s);
                k.add(j, j, s);
                k.add(j, i, -s);
            }
        }
    }
    k
}

/// Bulk squared frequency for Bloch angles `(theta1, theta2)` and branch `sigma`.
pub fn bulk_omega2(k1: f64, k2: f64, theta1: f64, theta2: f64, sigma: f64) -> f64 {
    let x = k1 * k1 + k2 * k2 + 2.0 * k1 * k2 * theta1.cos();
    let y = 2.0 + 2.0 * theta2.cos();
    2.0 * (k1 + k2) + sigma * (x * y).max(0.0).sqrt()
}

/// Union of the bulk bands as merged closed intervals, from a grid search over
/// both Bloch angles and both branches.
pub fn band_union(k1: f64, k2: f64) -> Vec<(f64, f64)> {
    let mut branches = Vec::new();
    for sigma in [-1.0, 1.0] {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=BAND_GRID {
            let t1 = PI * i as f64 / BAND_GRID as f64;
            for j in 0..=BAND_GRID {
                let t2 = PI * j as f64 / BAND_GRID as f64;
                let w = bulk_omega2(k1, k2, t1, t2, sigma);
                lo = lo.min(w);
                hi = hi.max(w);
            }
        }
        branches.push((lo, hi));
    }
    branches.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in branches {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    merged
}

/// True when `w` lies in one of the intervals up to `slack`.
pub fn in_bands(bands: &[(f64, f64)], w: f64, slack: f64) -> bool {
    bands.iter().any(|&(lo, hi)| w >= lo - slack && w <= hi + slack)
}

/// Which solver produced a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lattice2DSolver {
    /// Dense below the dense cap, windowed above it.
    Auto,
    Dense,
    Windowed,
}

/// Classification of a 2D mode by where its norm sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lattice2DLabel {
    /// At least `EDGE_FRACTION` of the norm on the outer two rings.
    Edge,
    Extended,
}

/// One computed mode with its classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice2DMode {
    pub omega2: f64,
    pub boundary_fraction: f64,
    pub in_band: bool,
    pub label: Lattice2DLabel,
    /// `||K u - omega^2 u||` of the unit eigenvector.
    pub residual: f64,
}

impl Lattice2DMode {
    /// Boundary-concentrated and outside the bulk bands.
    pub fn is_in_gap_edge(&self) -> bool {
        self.label == Lattice2DLabel::Edge && !self.in_band
    }
}

/// Modes of the lattice in a frequency window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice2DSpectrum {
    pub config: Lattice2DConfig,
    pub bands: Vec<(f64, f64)>,
    /// Requested window (the whole spectrum when `None`).
    pub window: Option<(f64, f64)>,
    pub solver: Lattice2DSolver,
    /// Modes in ascending `omega^2`.
    pub modes: Vec<Lattice2DMode>,
    /// Unit eigenvectors in row-major site order, aligned with `modes`.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl Lattice2DSpectrum {
    /// Modes that are boundary concentrated and outside the bands.
    pub fn in_gap_edge_modes(&self) -> Vec<&Lattice2DMode> {
        self.modes.iter().filter(|m| m.is_in_gap_edge()).collect()
    }

    /// Extended modes that fall outside the bands (expected to be empty).
    pub fn extended_outside_bands(&self) -> Vec<&Lattice2DMode> {
        self.modes
            .iter()
            .filter(|m| m.label == Lattice2DLabel::Extended && !m.in_band)
            .collect()
    }

    /// `(row, col, value)` triples of mode `k`.
    pub fn mode_grid(&self, k: usize) -> Vec<(usize, usize, f64)> {
        let n = self.config.n;
        self.eigenvectors[k]
            .iter()
            .enumerate()
            .map(|(i, &v)| (i / n, i % n, v))
            .collect()
    }
}

/// Share of `|u|^2` on the two outermost rings of sites.
pub fn boundary_fraction(n: usize, u: &[f64]) -> f64 {
    let total: f64 = u.iter().map(|x| x * x).sum();
    let ring = |r: usize, c: usize| r < 2 || c < 2 || r + 2 >= n || c + 2 >= n;
    let edge: f64 = u
        .iter()
        .enumerate()
        .filter(|(i, _)| ring(i / n, i % n))
        .map(|(_, x)| x * x)
        .sum();
    edge / total
}

/// Spectrum with the automatic solver choice on a single thread.
pub fn lattice2d_spectrum(cfg: &Lattice2DConfig, window: Option<(f64, f64)>) -> Result<Lattice2DSpectrum> {
    lattice2d_spectrum_using(cfg, window, Lattice2DSolver::Auto, 1)
}

/// Spectrum with an explicit solver. The windowed solver processes disjoint
/// sub-windows on up to `threads` threads.
pub fn lattice2d_spectrum_using(
    cfg: &Lattice2DConfig,
    window: Option<(f64, f64)>,
    solver: Lattice2DSolver,
    threads: usize,
) -> Result<Lattice2DSpectrum> {
    cfg.validate()?;
    let solver = match solver {
        Lattice2DSolver::Auto if cfg.n <= DENSE_CAP => Lattice2DSolver::Dense,
        Lattice2DSolver::Auto => Lattice2DSolver::Windowed,
        s => s,
    };
    if solver == Lattice2DSolver::Dense && cfg.n > DENSE_CAP {
        return Err(ChainError::SizeCapExceeded {
            n: cfg.n,
            cap: DENSE_CAP,
        });
    }
    let k = assemble_lattice(cfg);
    let pairs: Vec<(f64, Vec<f64>, f64)> = match solver {
        Lattice2DSolver::Dense => dense_pairs(&k, window),
        _ => windowed_pairs(&k, window, threads.max(1))?,
    };
    let bands = band_union(cfg.k1, cfg.k2);
    let mut modes = Vec::with_capacity(pairs.len());
    let mut vectors = Vec::with_capacity(pairs.len());
    for (w, u, residual) in pairs {
        let frac = boundary_fraction(cfg.n, &u);
        modes.push(Lattice2DMode {
            omega2: w,
            boundary_fraction: frac,
            in_band: in_bands(&bands, w, BAND_SLACK),
            label: if frac >= EDGE_FRACTION {
                Lattice2DLabel::Edge
            } else {
                Lattice2DLabel::Extended
            },
            residual,
        });
        vectors.push(u);
    }
    Ok(Lattice2DSpectrum {
        config: *cfg,
        bands,
        window,
        solver,
        modes,
        eigenvectors: vectors,
    })
}

fn dense_pairs(k: &BandedSymmetric, window: Option<(f64, f64)>) -> Vec<(f64, Vec<f64>, f64)> {
    let dense = k.to_dense();
    let eig = SymmetricEigen::new(dense.clone());
    let mut out = Vec::new();
    for (i, &w) in eig.eigenvalues.iter().enumerate() {
        if let Some((lo, hi)) = window {
            if w < lo || w >= hi {
                continue;
            }
        }
        let u = eig.eigenvectors.column(i).clone_owned();
        let residual = (&dense * &u - &u * w).norm();
        out.push((w, u.iter().copied().collect(), residual));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn windowed_pairs(
    k: &BandedSymmetric,
    window: Option<(f64, f64)>,
    threads: usize,
) -> Result<Vec<(f64, Vec<f64>, f64)>> {
    let (lo, hi) = window.unwrap_or((-1.0, k.norm_inf() + 1.0));
    let parts = split_window(k, lo, hi);
    let chunks: Vec<Vec<(f64, f64, usize)>> = (0..threads)
        .map(|t| parts.iter().copied().skip(t).step_by(threads).collect())
        .collect();
    let results: Vec<Result<Vec<(f64, Vec<f64>, f64)>>> = std::thread::scope(|s| {
        let handles: Vec<_> = chunks
            .iter()
            .map(|chunk| {
                s.spawn(move || {
                    let mut out = Vec::new();
                    for &(l, h, m) in chunk {
                        for p in window_eigenpairs(k, l, h, m)? {
                            out.push((p.value, p.vector, p.residual));
                        }
                    }
                    Ok(out)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("window worker panicked"))
            .collect()
    });
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// A straight side of the square lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StraightEdge {
    /// First column (a vertical edge).
    Left,
    /// Last column (a vertical edge).
    Right,
    /// First row.
    Top,
    /// Last row.
    Bottom,
}

/// Side whose two outermost lines carry the largest share of the mode.
pub fn dominant_edge(n: usize, u: &[f64]) -> StraightEdge {
    [StraightEdge::Left, StraightEdge::Right, StraightEdge::Top, StraightEdge::Bottom]
        .into_iter()
        .max_by(|&a, &b| {
            let wa = transverse_cell_norms(n, u, a)[0];
            let wb = transverse_cell_norms(n, u, b)[0];
            wa.total_cmp(&wb)
        })
        .unwrap_or(StraightEdge::Left)
}

/// Norms of the transverse unit cells (pairs of lines parallel to `edge`),
/// counted from the edge inward.
pub fn transverse_cell_norms(n: usize, u: &[f64], edge: StraightEdge) -> Vec<f64> {
    let mut cells = vec![0.0; n / 2];
    for (i, x) in u.iter().enumerate() {
        let (r, c) = (i / n, i % n);
        let depth = match edge {
            StraightEdge::Left => c,
            StraightEdge::Right => n - 1 - c,
            StraightEdge::Top => r,
            StraightEdge::Bottom => n - 1 - r,
        };
        cells[depth / 2] += x * x;
    }
    cells.iter().map(|x| x.sqrt()).collect()
}

/// Transverse decay fit of a mode along one straight edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeAnsatzReport {
    pub edge: StraightEdge,
    /// Fitted decay factor `|a|` per transverse cell.
    pub decay: f64,
    /// `|log r_j - fit_j|` for each fitted cell `j`, counted from the edge.
    pub cell_residuals: Vec<f64>,
    /// Root mean square of `cell_residuals`.
    pub rms_residual: f64,
}

/// Fits a single transverse exponential `r_j = C |a|^j` to the cell norms of
/// `mode` over the half of the lattice next to `edge`. Cells below `1e-12` of
/// the largest cell are dropped since they sit at the rounding floor.
pub fn edge2d_ansatz_check(cfg: &Lattice2DConfig, edge: StraightEdge, mode: &[f64]) -> EdgeAnsatzReport {
    let norms = transverse_cell_norms(cfg.n, mode, edge);
    let half = (cfg.n / 4).max(2);
    let peak = norms.iter().fold(0.0f64, |m, x| m.max(*x));
    let pts: Vec<(f64, f64)> = norms
        .iter()
        .take(half)
        .enumerate()
        .filter(|(_, r)| **r > 1e-12 * peak)
        .map(|(j, r)| (j as f64, r.ln()))
        .collect();
    if pts.len() < 2 {
        return EdgeAnsatzReport {
            edge,
            decay: 0.0,
            cell_residuals: Vec::new(),
            rms_residual: 0.0,
        };
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let cell_residuals: Vec<f64> = pts
        .iter()
        .map(|(x, y)| (y - (my + slope * (x - mx))).abs())
        .collect();
    let rms_residual = (cell_residuals.iter().map(|r| r * r).sum::<f64>() / m).sqrt();
    EdgeAnsatzReport {
        edge,
        decay: slope.exp(),
        cell_residuals,
        rms_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn reference_lattice(n: usize) -> Lattice2DConfig {
        Lattice2DConfig {
            n,
            k1: 1.0,
            k2: 1.9,
            k3: 0.0,
            k4: 4.3,
            k5: 3.9,
            k6: 5.1,
        }
    }

    /// Oracle: each interior site carries two `k1` and two `k2` bonds, and
    /// the boundary rows reproduce the grounding pattern of the boundary
    /// equations (for example `2k1 + k2 + k5` at even columns of the first row).
    #[test]
    fn assembly_matches_bond_rules() {
        let cfg = reference_lattice(8);
        let k = assemble_lattice(&cfg);
        let (k1, k2) = (1.0, 1.9);
        let diag = |r: usize, c: usize| k.get(cfg.index(r, c), cfg.index(r, c));
        assert!((diag(3, 4) - 2.0 * (k1 + k2)).abs() < 1e-14);
        // One-based (1,1): k1 + k2 + k5; (1,2j): 2k1 + k2 + k5; (1,2j+1): k1 + 2k2 + k5.
        assert!((diag(0, 0) - (k1 + k2 + 3.9)).abs() < 1e-14);
        assert!((diag(0, 3) - (2.0 * k1 + k2 + 3.9)).abs() < 1e-14);
        assert!((diag(0, 4) - (k1 + 2.0 * k2 + 3.9)).abs() < 1e-14);
        // One-based (1,N): 2k1 + k4 + k5; (N,1): 2k2 + k3 + k6; (N,N): k1 + k2 + k4 + k6.
        assert!((diag(0, 7) - (2.0 * k1 + 4.3 + 3.9)).abs() < 1e-14);
        assert!((diag(7, 0) - (2.0 * k2 + 5.1)).abs() < 1e-14);
        assert!((diag(7, 7) - (k1 + k2 + 4.3 + 5.1)).abs() < 1e-14);
        // One-based (1,1) couples by k2 downward and k1 to the right.
        assert_eq!(k.get(cfg.index(0, 0), cfg.index(1, 0)), -k2);
        assert_eq!(k.get(cfg.index(0, 0), cfg.index(0, 1)), -k1);
        // Row sums vanish away from the grounded boundary.
        for r in 1..7 {
            for c in 1..7 {
                let i = cfg.index(r, c);
                let s: f64 = (0..64).map(|j| k.get(i, j)).sum();
                assert!(s.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn band_union_is_a_single_interval() {
        let b = band_union(1.0, 1.9);
        assert_eq!(b.len(), 1);
        assert!(b[0].0.abs() < 1e-12);
        assert!((b[0].1 - 4.0 * 2.9).abs() < 1e-12);
    }

    /// Oracle: a periodic lattice has exactly the Bloch frequencies, so its
    /// dense spectrum must sit inside the extremized band union.
    #[test]
    fn periodic_lattice_inside_bands() {
        let cfg = Lattice2DConfig {
            k3: 0.0,
            k4: 0.0,
            k5: 0.0,
            k6: 0.0,
            ..reference_lattice(8)
        };
        let n = cfg.n;
        let mut k = DMatrix::<f64>::zeros(n * n, n * n);
        for r in 0..n {
            for c in 0..n {
                let i = cfg.index(r, c);
                for (j, s) in [
                    (cfg.index(r, (c + 1) % n), cfg.horizontal_bond(r, c)),
                    (cfg.index((r + 1) % n, c), cfg.vertical_bond(r, c)),
                ] {
                    k[(i, i)] += s;
                    k[(j, j)] += s;
                    k[(i, j)] -= s;
                    k[(j, i)] -= s;
                }
            }
        }
        let bands = band_union(1.0, 1.9);
        for w in k.symmetric_eigenvalues().iter() {
            assert!(in_bands(&bands, *w, 1e-9), "{w}");
        }
    }

    #[test]
    fn reference_lattice_dense_has_in_gap_edge_states() {
        let s = lattice2d_spectrum(&reference_lattice(24), None).unwrap();
        assert_eq!(s.modes.len(), 576);
        assert!(!s.in_gap_edge_modes().is_empty());
        assert!(s.extended_outside_bands().is_empty());
        assert!(s.modes.iter().all(|m| m.residual <= 1e-9));
    }

    #[test]
    fn windowed_matches_dense() {
        let cfg = reference_lattice(16);
        let top = band_union(1.0, 1.9)[0].1;
        let window = Some((top - 0.5, top + 3.0));
        let d = lattice2d_spectrum_using(&cfg, window, Lattice2DSolver::Dense, 1).unwrap();
        let w = lattice2d_spectrum_using(&cfg, window, Lattice2DSolver::Windowed, 2).unwrap();
        assert_eq!(d.modes.len(), w.modes.len());
        for (a, b) in d.modes.iter().zip(&w.modes) {
            assert!((a.omega2 - b.omega2).abs() <= 1e-9);
            assert_eq!(a.label, b.label);
        }
    }

    #[test]
    fn size_caps() {
        assert!(matches!(
            lattice2d_spectrum(&reference_lattice(122), None),
            Err(ChainError::SizeCapExceeded { cap: 120, .. })
        ));
        assert!(matches!(
            lattice2d_spectrum_using(&reference_lattice(64), None, Lattice2DSolver::Dense, 1),
            Err(ChainError::SizeCapExceeded { cap: 60, .. })
        ));
        assert!(lattice2d_spectrum(&reference_lattice(7), None).is_err());
    }

    #[test]
    fn equal_stiffness_free_lattice_has_no_gap_modes() {
        let cfg = Lattice2DConfig {
            n: 20,
            k1: 1.5,
            k2: 1.5,
            k3: 0.0,
            k4: 0.0,
            k5: 0.0,
            k6: 0.0,
        };
        let s = lattice2d_spectrum(&cfg, None).unwrap();
        assert!(s.modes.iter().all(|m| m.in_band));
        assert!(s.in_gap_edge_modes().is_empty());
    }

    #[test]
    fn ansatz_fit() {
        let cfg = reference_lattice(24);
        let n = cfg.n;
        // Synthetic mode decaying by 0.4 per transverse cell from the left edge.
        let synthetic: Vec<f64> = (0..n * n)
            .map(|i| {
                let (r, c) = (i / n, i % n);
                let v = if c % 2 == 0 { 1.0 } else { -0.7 };
                v * (1.0 + 0.3 * (r as f64).sin()) * 0.4f64.powi((c / 2) as i32)
            })
            .collect();
        let rep = edge2d_ansatz_check(&cfg, StraightEdge::Left, &synthetic);
        assert!(rep.rms_residual <= 1e-10);
        assert!((rep.decay - 0.4).abs() <= 1e-10);

        let s = lattice2d_spectrum(&cfg, None).unwrap();
        let (k, _) = s
            .modes
            .iter()
            .enumerate()
            .filter(|(_, m)| m.is_in_gap_edge())
            .min_by(|a, b| b.1.boundary_fraction.total_cmp(&a.1.boundary_fraction))
            .unwrap();
        let u = &s.eigenvectors[k];
        let edge = dominant_edge(n, u);
        let rep = edge2d_ansatz_check(&cfg, edge, u);
        assert!(rep.decay < 1.0, "{rep:?}");

        let (j, _) = s
            .modes
            .iter()
            .enumerate()
            .filter(|(_, m)| m.label == Lattice2DLabel::Extended)
            .min_by(|a, b| a.1.boundary_fraction.total_cmp(&b.1.boundary_fraction))
            .unwrap();
        let rep = edge2d_ansatz_check(&cfg, StraightEdge::Left, &s.eigenvectors[j]);
        assert!(rep.rms_residual > 0.1 || rep.decay > 0.9, "{rep:?}");
    }
}
