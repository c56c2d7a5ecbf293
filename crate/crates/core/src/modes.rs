//! Transfer-matrix decomposition and classification of exact eigenmodes.
//!
//! Every eigenvector of a finite chain is written cell by cell as
//! `(u_{2m+1}, u_{2m+2}) = c1 a^m v1 + c2 a^{-m} v2`. The coefficient `c1` is
//! read from the first cell and `c2` from the last cell, so that both stay
//! accurate even when one of them is exponentially small.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bulk::{
    band_edge_omega2, cell_vectors, generalized_cell_vectors, solve_decay, Band, BulkParams,
    CellVectors, TransferEigen,
};
use crate::chain::ChainConfig;
use crate::error::{ChainError, Result};
use crate::semi_infinite::{solve_semi_infinite, EdgeLocation};
use crate::spectrum::Spectrum;

/// Default end-to-end envelope contrast that separates one-sided from two-sided states.
pub const DEFAULT_EPS_LOC: f64 = 1e-3;

/// Classification of one eigenmode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModeLabel {
    LeftEdge,
    RightEdge,
    TwoSided,
    SlowDecaying,
    Extended,
    BandEdge,
}

impl ModeLabel {
    /// Short name used in CSV output.
    pub fn as_str(&self) -> &'static str {
        match self {
            ModeLabel::LeftEdge => "LeftEdge",
            ModeLabel::RightEdge => "RightEdge",
            ModeLabel::TwoSided => "TwoSided",
            ModeLabel::SlowDecaying => "SlowDecaying",
            ModeLabel::Extended => "Extended",
            ModeLabel::BandEdge => "BandEdge",
        }
    }

    /// True for the localized out-of-band labels.
    pub fn is_edge(&self) -> bool {
        matches!(
            self,
            ModeLabel::LeftEdge | ModeLabel::RightEdge | ModeLabel::TwoSided
        )
    }
}

/// Transfer-matrix data of one exact eigenmode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeAnalysis {
    /// Rank of the mode in ascending `omega^2`.
    pub mode_index: usize,
    pub omega2: f64,
    pub te: TransferEigen,
    /// Coefficient of `a^m v1`, from the first cell.
    pub c1: Complex64,
    /// Coefficient of `a^{-m} v2`, i.e. `w2 a^{n-1}` with `w2` from the last cell.
    /// May underflow for strongly left-localized states; `w2` itself is kept.
    pub c2: Complex64,
    /// Coefficient of `v2` in the last cell.
    pub w2: Complex64,
    /// Phase of `c1 = r e^{i beta}` reduced to `[0, pi)` (bands only).
    pub beta: Option<f64>,
    /// Modulus `r = |c1|` (bands only).
    pub r: Option<f64>,
    /// `sqrt(k1 + k2 e^{-i theta}) = rho e^{i alpha}` (bands only).
    pub rho: Option<f64>,
    pub alpha: Option<f64>,
    /// `|c2 / c1| |a|^{2-2n}` (outside the bands only).
    pub eta: Option<f64>,
    /// Localization length `-1 / ln|a|` (outside the bands only).
    pub xi: Option<f64>,
    /// Envelope `|c1| |a|^{m-1} + |c2| |a|^{1-m}` at the first and last cells.
    pub envelope_left: f64,
    pub envelope_right: f64,
    /// Band-edge convention branch sign at a band edge (`None` elsewhere).
    pub edge_sigma: Option<f64>,
    pub label: ModeLabel,
}

impl ModeAnalysis {
    /// Cell `m` (zero based) rebuilt from the decomposition.
    pub fn reconstruct_cell(&self, cfg: &ChainConfig, m: usize) -> Result<[f64; 2]> {
        let p = cfg.bulk();
        let cv = self.basis(&p)?;
        let a = self.te.a;
        let (t1, t2) = if self.edge_sigma.is_some() {
            let ar = a.re;
            let kappa = crate::bulk::jordan_coefficient(&p, ar);
            let c1 = self.c1.re + self.c2.re * m as f64 * kappa;
            let s = ar.powi(m as i32);
            (
                Complex64::new(s * c1, 0.0),
                Complex64::new(s * self.c2.re, 0.0),
            )
        } else {
            let back = (cfg.n - 1 - m) as i32;
            (self.c1 * a.powi(m as i32), self.w2 * a.powi(back))
        };
        Ok([
            (t1 * cv.v1[0] + t2 * cv.v2[0]).re,
            (t1 * cv.v1[1] + t2 * cv.v2[1]).re,
        ])
    }

    fn basis(&self, p: &BulkParams) -> Result<CellVectors> {
        match self.edge_sigma {
            Some(s) => generalized_cell_vectors(p, self.te.a.re, s),
            None => cell_vectors(p, &self.te),
        }
    }

    /// Eigenvector rebuilt from the decomposition.
    pub fn reconstruct(&self, cfg: &ChainConfig) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(cfg.len());
        for m in 0..cfg.n {
            out.extend(self.reconstruct_cell(cfg, m)?);
        }
        Ok(out)
    }
}

/// Labels every mode of a spectrum and groups the band modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedSpectrum {
    pub spectrum: Spectrum,
    pub modes: Vec<ModeAnalysis>,
    /// Modes whose `omega^2` lies outside both closed bands.
    pub out_of_band_count: usize,
    /// Ranks of optical-band modes in ascending `omega^2`.
    pub optical: Vec<usize>,
    /// Ranks of acoustic-band modes in ascending `omega^2`.
    pub acoustic: Vec<usize>,
}

impl ClassifiedSpectrum {
    /// Analyses of the modes outside the bands.
    pub fn out_of_band(&self) -> Vec<&ModeAnalysis> {
        let p = self.spectrum.config.bulk();
        self.modes
            .iter()
            .filter(|m| p.band_of(m.omega2).is_none())
            .collect()
    }

    /// Sorted labels of the modes outside the bands.
    pub fn out_of_band_labels(&self) -> Vec<ModeLabel> {
        let mut v: Vec<ModeLabel> = self.out_of_band().iter().map(|m| m.label).collect();
        v.sort();
        v
    }

    /// Number of modes with the given label.
    pub fn count(&self, label: ModeLabel) -> usize {
        self.modes.iter().filter(|m| m.label == label).count()
    }
}

fn solve_cell(cv: &CellVectors, w: [f64; 2], omega2: f64) -> Result<(Complex64, Complex64)> {
    cv.coefficients([Complex64::new(w[0], 0.0), Complex64::new(w[1], 0.0)])
        .map_err(|_| ChainError::IllConditionedBasis { omega2 })
}

/// Branch sign `s` of the band-edge convention `omega^2 = k1 + k2 + a s (k1 + k2 a)`
/// that best matches `omega2`.
fn edge_sigma(p: &BulkParams, a: f64, omega2: f64) -> f64 {
    let plus = (band_edge_omega2(p, a, 1.0) - omega2).abs();
    let minus = (band_edge_omega2(p, a, -1.0) - omega2).abs();
    if plus <= minus {
        1.0
    } else {
        -1.0
    }
}

/// Decomposes one eigenpair into transfer-matrix data and labels it.
pub fn decompose(
    cfg: &ChainConfig,
    rank: usize,
    omega2: f64,
    u: &[f64],
    eps_loc: f64,
) -> Result<ModeAnalysis> {
    let p = cfg.bulk();
    let n = cfg.n;
    let te = solve_decay(&p, omega2);
    let first = [u[0], u[1]];
    let last = [u[2 * n - 2], u[2 * n - 1]];
    let mut ma = ModeAnalysis {
        mode_index: rank,
        omega2,
        te,
        c1: Complex64::new(0.0, 0.0),
        c2: Complex64::new(0.0, 0.0),
        w2: Complex64::new(0.0, 0.0),
        beta: None,
        r: None,
        rho: None,
        alpha: None,
        eta: None,
        xi: None,
        envelope_left: u[0].hypot(u[1]),
        envelope_right: u[2 * n - 2].hypot(u[2 * n - 1]),
        edge_sigma: None,
        label: ModeLabel::BandEdge,
    };
    if te.degenerate {
        let a = te.a.re.signum();
        let s = edge_sigma(&p, a, omega2);
        let cv = generalized_cell_vectors(&p, a, s)?;
        let (c1, c2) = solve_cell(&cv, first, omega2)?;
        ma.te.a = Complex64::new(a, 0.0);
        ma.te.theta = None;
        ma.c1 = c1;
        ma.c2 = c2;
        ma.w2 = c2;
        ma.edge_sigma = Some(s);
        return Ok(ma);
    }
    let cv = cell_vectors(&p, &te)?;
    let (c1, _) = solve_cell(&cv, first, omega2)?;
    let (_, w2) = solve_cell(&cv, last, omega2)?;
    ma.c1 = c1;
    ma.w2 = w2;
    match te.theta {
        Some(_) => {
            ma.c2 = w2 * te.a.powi(n as i32 - 1);
            let pi = std::f64::consts::PI;
            let beta = c1.arg().rem_euclid(pi);
            ma.beta = Some(if beta >= pi { 0.0 } else { beta });
            ma.r = Some(c1.norm());
            ma.rho = Some(cv.v1[0].norm());
            ma.alpha = Some(cv.v1[0].arg());
            ma.label = ModeLabel::Extended;
        }
        None => {
            let am = te.a.norm();
            let decay = am.powi(n as i32 - 1);
            ma.c2 = w2 * te.a.powi(n as i32 - 1);
            let (l1, l2) = (c1.norm(), w2.norm());
            ma.envelope_left = l1 + l2 * decay;
            ma.envelope_right = l1 * decay + l2;
            // eta = |w2| / (|c1| |a|^{n-1}) in the log domain to avoid overflow.
            ma.eta = Some((l2.ln() - l1.ln() - (n as f64 - 1.0) * am.ln()).exp());
            let xi = te.localization_length();
            ma.xi = Some(xi);
            ma.label = if xi > n as f64 / 2.0 {
                ModeLabel::SlowDecaying
            } else if ma.envelope_right <= eps_loc * ma.envelope_left {
                ModeLabel::LeftEdge
            } else if ma.envelope_left <= eps_loc * ma.envelope_right {
                ModeLabel::RightEdge
            } else {
                ModeLabel::TwoSided
            };
        }
    }
    Ok(ma)
}

/// Label from a decomposition (re-derives the decision for a given `eps_loc`).
pub fn classify(ma: &ModeAnalysis, cfg: &ChainConfig, eps_loc: f64) -> ModeLabel {
    if ma.te.degenerate || ma.edge_sigma.is_some() {
        return ModeLabel::BandEdge;
    }
    if ma.te.theta.is_some() {
        return ModeLabel::Extended;
    }
    if ma.xi.unwrap_or(f64::INFINITY) > cfg.n as f64 / 2.0 {
        return ModeLabel::SlowDecaying;
    }
    if ma.envelope_right <= eps_loc * ma.envelope_left {
        ModeLabel::LeftEdge
    } else if ma.envelope_left <= eps_loc * ma.envelope_right {
        ModeLabel::RightEdge
    } else {
        ModeLabel::TwoSided
    }
}

/// Decomposes and labels every mode of a spectrum.
pub fn classify_spectrum(spectrum: &Spectrum, eps_loc: f64) -> Result<ClassifiedSpectrum> {
    let cfg = spectrum.config;
    let p = cfg.bulk();
    let mut modes = Vec::with_capacity(spectrum.len());
    let mut optical = Vec::new();
    let mut acoustic = Vec::new();
    let mut out_of_band_count = 0;
    for rank in 0..spectrum.len() {
        let omega2 = spectrum.omega2(rank);
        let ma = decompose(&cfg, rank, omega2, spectrum.mode(rank), eps_loc)?;
        match p.band_of(omega2) {
            Some(Band::Optical) => optical.push(rank),
            Some(Band::Acoustic) => acoustic.push(rank),
            None => out_of_band_count += 1,
        }
        modes.push(ma);
    }
    Ok(ClassifiedSpectrum {
        spectrum: spectrum.clone(),
        modes,
        out_of_band_count,
        optical,
        acoustic,
    })
}

/// Predicted ratio `|c2 / c1|` of a left edge state near the semi-infinite
/// root, from the right boundary equation:
/// `c2 / c1 = -a^{2n-2} R(v1) / R(v2)` with `R(v) = k1 v_1 + (omega^2 - k1 - k32) v_2`.
pub fn predicted_c2_ratio(cfg: &ChainConfig, a: f64, sigma: f64, omega2: f64) -> Result<f64> {
    let p = cfg.bulk();
    let (rv1, rv2) = right_boundary_forms(&p, cfg.k32, a, sigma, omega2)?;
    if rv2 == 0.0 {
        return Err(ChainError::DegenerateDenominator("right boundary form of v2"));
    }
    Ok(a.abs().powi(2 * cfg.n as i32 - 2) * (rv1 / rv2).abs())
}

fn right_boundary_forms(
    p: &BulkParams,
    k32: f64,
    a: f64,
    sigma: f64,
    omega2: f64,
) -> Result<(f64, f64)> {
    let te = TransferEigen {
        a: Complex64::new(a, 0.0),
        sigma,
        omega2,
        theta: None,
        degenerate: false,
    };
    let cv = cell_vectors(p, &te)?;
    let form = |v: [Complex64; 2]| p.k1 * v[0].re + (omega2 - p.k1 - k32) * v[1].re;
    Ok((form(cv.v1), form(cv.v2)))
}

/// Smallest `n >= 2` for which every left edge state predicted from the
/// semi-infinite roots has `|c2 / c1| < epsilon`. The `n` field of `cfg` is ignored.
///
/// The ratio scales as `a~^{2n}` times the mismatch `k32 - k~32` in general,
/// and as `a~^{2n} / k32` when `k31 = k2` (where the second component of `v1`
/// vanishes); both follow from the same right-boundary expression.
pub fn min_chain_size(cfg: &ChainConfig, epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0) {
        return Err(ChainError::InvalidParameter {
            name: "epsilon",
            value: epsilon,
            reason: "purity bound must be positive",
        });
    }
    let p = cfg.bulk();
    let roots: Vec<_> = solve_semi_infinite(cfg.k1, cfg.k2, cfg.k31)?
        .into_iter()
        .filter(|r| r.location != EdgeLocation::None)
        .collect();
    if roots.is_empty() {
        return Err(ChainError::NoEdgeState);
    }
    let mut n_star = 2usize;
    for r in roots {
        let (rv1, rv2) = right_boundary_forms(&p, cfg.k32, r.a_tilde, r.sigma, r.omega2)?;
        if rv2 == 0.0 {
            return Err(ChainError::DegenerateDenominator("right boundary form of v2"));
        }
        let g = (rv1 / rv2).abs();
        if g == 0.0 {
            continue;
        }
        // Solve |a|^{2n-2} g < epsilon for the smallest integer n.
        let la = r.a_tilde.abs().ln();
        let bound = 1.0 + (epsilon / g).ln() / (2.0 * la);
        let mut n = if bound.is_finite() {
            bound.floor().max(2.0) as usize
        } else {
            2
        };
        while r.a_tilde.abs().powi(2 * n as i32 - 2) * g >= epsilon {
            n += 1;
        }
        while n > 2 && r.a_tilde.abs().powi(2 * n as i32 - 4) * g < epsilon {
            n -= 1;
        }
        n_star = n_star.max(n);
    }
    Ok(n_star)
}
