//! Time-periodic solutions of the chain with an on-site cubic term,
//! `omega^2 Q'' = L Q + b Q^3` with `Q(tau) = q(tau / omega)`.
//!
//! Solutions are expanded as even cosine series with odd harmonics only,
//! `Q_j(tau) = sum_h A_{j,h} cos(h tau)`, and the cubic term is evaluated at
//! `4H + 4` equispaced collocation points and projected back. With that many
//! points the projection of every harmonic up to `3H` is exact. Branches start
//! from a linear eigenmode and are continued by pseudo-arclength in `(A, omega)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bulk::Band;
use crate::chain::{assemble, ChainConfig, Tridiagonal};
use crate::error::{ChainError, Result};
use crate::spectrum::{full_spectrum, Spectrum};

/// Default odd-harmonic truncation.
pub const DEFAULT_HARMONICS: usize = 7;
/// Default bound on the largest harmonic-balance residual.
pub const DEFAULT_NEWTON_TOL: f64 = 1e-10;
/// Default distance from an integer below which a frequency ratio counts as resonant.
pub const DEFAULT_RESONANCE_MARGIN: f64 = 1e-3;

/// Parameters of the cubic on-site chain and of its harmonic-balance discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearConfig {
    pub chain: ChainConfig,
    /// Cubic coefficient `b` of `N(q) = b q^3`. Positive `b` lowers the frequency.
    pub b: f64,
    /// Highest odd harmonic `H`.
    pub harmonics: usize,
    pub newton_tol: f64,
    /// Initial pseudo-arclength step.
    pub step: f64,
}

impl NonlinearConfig {
    /// Configuration with the default truncation, tolerance and step.
    pub fn new(chain: ChainConfig, b: f64) -> Self {
        Self {
            chain,
            b,
            harmonics: DEFAULT_HARMONICS,
            newton_tol: DEFAULT_NEWTON_TOL,
            step: 0.05,
        }
    }

    /// Checks the truncation and tolerances.
    pub fn validate(&self) -> Result<()> {
        self.chain.validate()?;
        if self.harmonics == 0 || self.harmonics.is_multiple_of(2) {
            return Err(ChainError::InvalidParameter {
                name: "harmonics",
                value: self.harmonics as f64,
                reason: "must be odd and >= 1",
            });
        }
        if !(self.newton_tol > 0.0) {
            return Err(ChainError::InvalidParameter {
                name: "newton_tol",
                value: self.newton_tol,
                reason: "must be > 0",
            });
        }
        if !(self.step > 0.0) || !self.b.is_finite() {
            return Err(ChainError::InvalidParameter {
                name: "step",
                value: self.step,
                reason: "step must be > 0 and b finite",
            });
        }
        Ok(())
    }
}

/// Odd harmonics `1, 3, ..., H` with their collocation tables.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    pub orders: Vec<usize>,
    /// `cos(h tau_m)` for every harmonic and collocation point.
    cos: Vec<Vec<f64>>,
    sin: Vec<Vec<f64>>,
    points: usize,
}

impl HarmonicBasis {
    /// Basis with odd harmonics up to `h_max` and `4 h_max + 4` collocation points.
    pub fn new(h_max: usize) -> Self {
        let orders: Vec<usize> = (1..=h_max).step_by(2).collect();
        let points = 4 * h_max + 4;
        let tau = |m: usize| 2.0 * PI * m as f64 / points as f64;
        let cos = orders
            .iter()
            .map(|&h| (0..points).map(|m| (h as f64 * tau(m)).cos()).collect())
            .collect();
        let sin = orders
            .iter()
            .map(|&h| (0..points).map(|m| (h as f64 * tau(m)).sin()).collect())
            .collect();
        Self {
            orders,
            cos,
            sin,
            points,
        }
    }

    /// Number of harmonics.
    pub fn len(&self) -> usize {
        self.orders.len()
    }

    /// True when the basis has no harmonics (never for a valid truncation).
    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    /// Number of collocation points.
    pub fn points(&self) -> usize {
        self.points
    }

    /// `Q(tau_m)` for one site.
    fn sample(&self, amps: &[f64]) -> Vec<f64> {
        (0..self.points)
            .map(|m| amps.iter().zip(&self.cos).map(|(a, c)| a * c[m]).sum())
            .collect()
    }

    /// Cosine coefficients `(2/M) sum_m f(tau_m) cos(h tau_m)` of sampled values.
    fn project(&self, f: &[f64]) -> Vec<f64> {
        let scale = 2.0 / self.points as f64;
        self.cos
            .iter()
            .map(|c| scale * c.iter().zip(f).map(|(x, y)| x * y).sum::<f64>())
            .collect()
    }

    /// Harmonic coefficients of `Q^3` for one site.
    pub fn cubic_projection(&self, amps: &[f64]) -> Vec<f64> {
        let q = self.sample(amps);
        let cube: Vec<f64> = q.iter().map(|x| x * x * x).collect();
        self.project(&cube)
    }

    /// `d P_h(Q^3) / d A_{h'}` for one site, row-major over `(h, h')`.
    fn cubic_jacobian(&self, amps: &[f64]) -> Vec<f64> {
        let q = self.sample(amps);
        let hc = self.len();
        let scale = 2.0 / self.points as f64;
        let mut out = vec![0.0; hc * hc];
        for i in 0..hc {
            for k in i..hc {
                let v: f64 = (0..self.points)
                    .map(|m| 3.0 * q[m] * q[m] * self.cos[i][m] * self.cos[k][m])
                    .sum::<f64>()
                    * scale;
                out[i * hc + k] = v;
                out[k * hc + i] = v;
            }
        }
        out
    }
}

/// Harmonic-balance residual `-omega^2 h^2 A_h - L A_h - b P_h(Q^3)` for an
/// arbitrary tridiagonal operator. `coeffs` is site-major: `coeffs[j * Hc + i]`.
pub fn residual_with_operator(
    op: &Tridiagonal<f64>,
    b: f64,
    basis: &HarmonicBasis,
    coeffs: &[f64],
    omega: f64,
) -> Vec<f64> {
    let dim = op.dim();
    let hc = basis.len();
    let mut r = vec![0.0; dim * hc];
    for j in 0..dim {
        let site = &coeffs[j * hc..(j + 1) * hc];
        let cubic = basis.cubic_projection(site);
        for (i, &h) in basis.orders.iter().enumerate() {
            let mut la = op.diag[j] * site[i];
            if j > 0 {
                la += op.off[j - 1] * coeffs[(j - 1) * hc + i];
            }
            if j + 1 < dim {
                la += op.off[j] * coeffs[(j + 1) * hc + i];
            }
            let h2 = (h * h) as f64;
            r[j * hc + i] = -omega * omega * h2 * site[i] - la - b * cubic[i];
        }
    }
    r
}

/// Harmonic-balance residual of a candidate solution of the cubic chain.
pub fn residual(cfg: &NonlinearConfig, coeffs: &[f64], omega: f64) -> Vec<f64> {
    let basis = HarmonicBasis::new(cfg.harmonics);
    residual_with_operator(&assemble(&cfg.chain), cfg.b, &basis, coeffs, omega)
}

/// Jacobian of the residual with respect to `(coeffs, omega)`, as a dense
/// matrix with one spare trailing row for a scalar constraint.
fn bordered_jacobian(
    op: &Tridiagonal<f64>,
    b: f64,
    basis: &HarmonicBasis,
    coeffs: &[f64],
    omega: f64,
) -> DMatrix<f64> {
    let dim = op.dim();
    let hc = basis.len();
    let n = dim * hc;
    let mut jac = DMatrix::zeros(n + 1, n + 1);
    for j in 0..dim {
        let site = &coeffs[j * hc..(j + 1) * hc];
        let cj = basis.cubic_jacobian(site);
        for (i, &h) in basis.orders.iter().enumerate() {
            let row = j * hc + i;
            let h2 = (h * h) as f64;
            jac[(row, row)] += -omega * omega * h2 - op.diag[j];
            if j > 0 {
                jac[(row, (j - 1) * hc + i)] -= op.off[j - 1];
            }
            if j + 1 < dim {
                jac[(row, (j + 1) * hc + i)] -= op.off[j];
            }
            for k in 0..hc {
                jac[(row, j * hc + k)] -= b * cj[i * hc + k];
            }
            jac[(row, n)] = -2.0 * omega * h2 * site[i];
        }
    }
    jac
}

/// Energy and localization data of one solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSolution {
    /// Site-major cosine amplitudes `A_{j,h}` for the odd harmonics `1..=H`.
    pub coeffs: Vec<f64>,
    pub harmonics: usize,
    pub omega: f64,
    /// Energy evaluated at `tau = 0`, where all velocities vanish.
    pub energy: f64,
    /// Energy averaged over the collocation points of one period.
    pub energy_quadrature: f64,
    /// `sum_j p_j^2` with `p_j = A_{j,1}^2 / sum A_{.,1}^2`.
    pub ipr: f64,
    /// Largest absolute harmonic-balance residual.
    pub residual: f64,
    /// Projection of the fundamental harmonic on the seed mode.
    pub amplitude: f64,
    /// Euclidean norm of all amplitudes.
    pub norm: f64,
    /// Pseudo-arclength from the first point.
    pub arclength: f64,
}

impl PeriodicSolution {
    /// Squared frequency.
    pub fn omega2(&self) -> f64 {
        self.omega * self.omega
    }

    /// Fundamental-harmonic profile `A_{.,1}`.
    pub fn fundamental(&self) -> Vec<f64> {
        let hc = self.harmonics.div_ceil(2);
        self.coeffs.iter().step_by(hc).copied().collect()
    }

    /// Index of the site with the largest fundamental amplitude.
    pub fn peak_site(&self) -> usize {
        self.fundamental()
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Whether the fundamental profile peaks in the central half or near an end.
    pub fn localization_site(&self) -> LocalizationSite {
        let len = self.fundamental().len() as f64;
        let x = (self.peak_site() as f64 + 0.5) / len;
        if (0.25..=0.75).contains(&x) {
            LocalizationSite::Middle
        } else {
            LocalizationSite::Boundary
        }
    }
}

/// Coarse position of the peak of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LocalizationSite {
    Middle,
    Boundary,
}

/// Inverse participation ratio of a profile, `sum p_j^2` with `p_j = x_j^2 / |x|^2`.
pub fn ipr(profile: &[f64]) -> f64 {
    let total: f64 = profile.iter().map(|x| x * x).sum();
    if total == 0.0 {
        return 0.0;
    }
    profile.iter().map(|x| (x * x / total).powi(2)).sum()
}

/// Energy `sum (q'^2/2 - b q^4/4) + q^T (-L) q / 2` at the collocation point `m`.
fn energy_at(op: &Tridiagonal<f64>, b: f64, basis: &HarmonicBasis, coeffs: &[f64], omega: f64, m: usize) -> f64 {
    let dim = op.dim();
    let hc = basis.len();
    let mut q = vec![0.0; dim];
    let mut kinetic = 0.0;
    for j in 0..dim {
        let site = &coeffs[j * hc..(j + 1) * hc];
        let mut v = 0.0;
        for (i, &h) in basis.orders.iter().enumerate() {
            q[j] += site[i] * basis.cos[i][m];
            v -= omega * h as f64 * site[i] * basis.sin[i][m];
        }
        kinetic += 0.5 * v * v;
    }
    let lq = op.mul_vec(&q);
    let potential: f64 = -0.5 * q.iter().zip(&lq).map(|(x, y)| x * y).sum::<f64>();
    let quartic: f64 = q.iter().map(|x| x.powi(4)).sum::<f64>() * b / 4.0;
    kinetic + potential - quartic
}

fn describe(
    cfg: &NonlinearConfig,
    op: &Tridiagonal<f64>,
    basis: &HarmonicBasis,
    seed: &[f64],
    x: &[f64],
    arclength: f64,
) -> PeriodicSolution {
    let n = x.len() - 1;
    let coeffs = x[..n].to_vec();
    let omega = x[n];
    let hc = basis.len();
    let fundamental: Vec<f64> = coeffs.iter().step_by(hc).copied().collect();
    let r = residual_with_operator(op, cfg.b, basis, &coeffs, omega);
    let energy = energy_at(op, cfg.b, basis, &coeffs, omega, 0);
    let energy_quadrature =
        (0..basis.points()).map(|m| energy_at(op, cfg.b, basis, &coeffs, omega, m)).sum::<f64>() / basis.points() as f64;
    PeriodicSolution {
        harmonics: cfg.harmonics,
        omega,
        energy,
        energy_quadrature,
        ipr: ipr(&fundamental),
        residual: r.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        amplitude: fundamental.iter().zip(seed).map(|(a, u)| a * u).sum(),
        norm: coeffs.iter().map(|a| a * a).sum::<f64>().sqrt(),
        arclength,
        coeffs,
    }
}

/// Outcome of the nonresonance test for one seed mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonresonanceReport {
    pub seed_rank: usize,
    pub seed_omega: f64,
    pub passes: bool,
    /// Smallest distance of `omega_j / omega_seed` to an integer `>= 2`.
    pub min_margin: f64,
    /// `(rank, ratio, margin)` for every other mode.
    pub margins: Vec<(usize, f64, f64)>,
}

/// Distance of `x` to the nearest integer `>= 2`.
fn integer_margin(x: f64) -> f64 {
    (x - x.round().max(2.0)).abs()
}

/// Checks that no frequency `omega_j` is an integer multiple (`>= 2`) of
/// `omega`, within `margin`. The seed itself is skipped.
pub fn check_nonresonance_at(spectrum: &Spectrum, seed_rank: usize, omega: f64, margin: f64) -> NonresonanceReport {
    let margins: Vec<(usize, f64, f64)> = (0..spectrum.len())
        .filter(|&r| r != seed_rank)
        .map(|r| {
            let ratio = spectrum.omega2(r).max(0.0).sqrt() / omega;
            (r, ratio, integer_margin(ratio))
        })
        .collect();
    let min_margin = margins.iter().map(|m| m.2).fold(f64::INFINITY, f64::min);
    NonresonanceReport {
        seed_rank,
        seed_omega: omega,
        passes: min_margin > margin,
        min_margin,
        margins,
    }
}

/// Nonresonance test at the linear frequency of the seed mode.
pub fn check_nonresonance(spectrum: &Spectrum, seed_rank: usize, margin: f64) -> NonresonanceReport {
    let omega = spectrum.omega2(seed_rank).max(0.0).sqrt();
    check_nonresonance_at(spectrum, seed_rank, omega, margin)
}

/// Rank of the lowest mode of the optical band (the first in-band mode above its lower edge).
pub fn lowest_optical_rank(spectrum: &Spectrum) -> Option<usize> {
    let p = spectrum.config.bulk();
    let (lo, hi) = p.optical_band();
    (0..spectrum.len()).find(|&r| {
        let w = spectrum.omega2(r);
        w > lo && w < hi
    })
}

/// Settings of the branch continuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSettings {
    /// Seed-projection amplitude of the first point.
    pub amplitude_start: f64,
    /// Stop once the amplitude norm exceeds this value.
    pub amplitude_max: f64,
    pub max_points: usize,
    pub step_min: f64,
    pub step_max: f64,
    /// Stop once `omega^2` is this far past the band edge it leaves through.
    pub gap_depth: Option<f64>,
    pub resonance_margin: f64,
    pub max_newton: usize,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        Self {
            amplitude_start: 1e-4,
            amplitude_max: 10.0,
            max_points: 400,
            step_min: 1e-10,
            step_max: 0.25,
            gap_depth: None,
            resonance_margin: DEFAULT_RESONANCE_MARGIN,
            max_newton: 12,
        }
    }
}

/// Crossing of a band edge along a branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitEvent {
    /// Index of the first point past the edge.
    pub point: usize,
    pub edge_omega2: f64,
    /// Arclength at the crossing, interpolated linearly in `omega^2`.
    pub arclength: f64,
}

/// Reason a branch stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopReason {
    AmplitudeReached,
    GapDepthReached,
    MaxPoints,
    StepUnderflow { step: f64 },
    Resonance { rank: usize, ratio: f64, margin: f64 },
}

/// A continued family of periodic solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationBranch {
    pub points: Vec<PeriodicSolution>,
    pub seed_mode: usize,
    pub seed_omega: f64,
    pub exit_event: Option<ExitEvent>,
    pub stop: StopReason,
}

impl ContinuationBranch {
    /// True when the IPR grows strictly from each point to the next.
    pub fn ipr_strictly_increasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].ipr > w[0].ipr)
    }
}

struct Solver<'a> {
    cfg: &'a NonlinearConfig,
    op: Tridiagonal<f64>,
    basis: HarmonicBasis,
    max_newton: usize,
}

impl Solver<'_> {
    /// Newton iteration on `R(x) = 0` plus one scalar constraint `g(x) = 0`
    /// with gradient `grad`. Returns the iterate and the number of steps.
    fn newton(&self, mut x: Vec<f64>, constraint: &dyn Fn(&[f64]) -> f64, grad: &[f64]) -> Option<(Vec<f64>, usize)> {
        let n = x.len() - 1;
        for it in 0..self.max_newton {
            let r = residual_with_operator(&self.op, self.cfg.b, &self.basis, &x[..n], x[n]);
            let res = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let g = constraint(&x);
            if !res.is_finite() {
                return None;
            }
            let mut jac = bordered_jacobian(&self.op, self.cfg.b, &self.basis, &x[..n], x[n]);
            for (k, gk) in grad.iter().enumerate() {
                jac[(n, k)] = *gk;
            }
            let mut rhs = DVector::from_vec(r);
            rhs = rhs.insert_row(n, g);
            let dx = jac.lu().solve(&(-rhs))?;
            let step = dx.amax();
            for (xi, d) in x.iter_mut().zip(dx.iter()) {
                *xi += d;
            }
            let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if res <= self.cfg.newton_tol && step <= 1e-13 * scale {
                return Some((x, it + 1));
            }
            if step <= 1e-15 * scale {
                let r = residual_with_operator(&self.op, self.cfg.b, &self.basis, &x[..n], x[n]);
                let res = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                return (res <= self.cfg.newton_tol).then_some((x, it + 1));
            }
        }
        let r = residual_with_operator(&self.op, self.cfg.b, &self.basis, &x[..n], x[n]);
        let res = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (res <= self.cfg.newton_tol).then_some((x, self.max_newton))
    }

    /// Point with a prescribed seed projection of the fundamental harmonic.
    fn at_amplitude(&self, guess: Vec<f64>, seed: &[f64], eps: f64) -> Option<Vec<f64>> {
        let hc = self.basis.len();
        let n = guess.len() - 1;
        let mut grad = vec![0.0; n + 1];
        for (j, u) in seed.iter().enumerate() {
            grad[j * hc] = *u;
        }
        let g = |x: &[f64]| -> f64 { seed.iter().enumerate().map(|(j, u)| u * x[j * hc]).sum::<f64>() - eps };
        self.newton(guess, &g, &grad).map(|(x, _)| x)
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Continues the linear mode of rank `seed_rank` into a branch of periodic
/// solutions of the cubic chain.
///
/// Fails with `ResonanceEncountered` when the seed violates the nonresonance
/// condition and with `StepUnderflow` when not even the first two points can
/// be computed. Later failures end the branch with the matching `stop` reason.
pub fn continue_branch(
    cfg: &NonlinearConfig,
    seed_rank: usize,
    settings: &ContinuationSettings,
) -> Result<ContinuationBranch> {
    cfg.validate()?;
    let spectrum = full_spectrum(&cfg.chain)?;
    if seed_rank >= spectrum.len() {
        return Err(ChainError::InvalidParameter {
            name: "seed",
            value: seed_rank as f64,
            reason: "seed rank exceeds the number of modes",
        });
    }
    let report = check_nonresonance(&spectrum, seed_rank, settings.resonance_margin);
    if !report.passes {
        let worst = report
            .margins
            .iter()
            .min_by(|x, y| x.2.total_cmp(&y.2))
            .copied()
            .unwrap_or((0, f64::NAN, f64::NAN));
        return Err(ChainError::ResonanceEncountered {
            index: worst.0,
            ratio: worst.1,
            margin: worst.2,
        });
    }
    let seed: Vec<f64> = spectrum.mode(seed_rank).to_vec();
    let omega0 = spectrum.omega2(seed_rank).sqrt();
    let solver = Solver {
        cfg,
        op: assemble(&cfg.chain),
        basis: HarmonicBasis::new(cfg.harmonics),
        max_newton: settings.max_newton,
    };
    let hc = solver.basis.len();
    let dim = seed.len();
    let n = dim * hc;
    let linear = |eps: f64| -> Vec<f64> {
        let mut x = vec![0.0; n + 1];
        for (j, u) in seed.iter().enumerate() {
            x[j * hc] = eps * u;
        }
        x[n] = omega0;
        x
    };
    let eps0 = settings.amplitude_start;
    let underflow = ChainError::StepUnderflow { step: eps0 };
    let x0 = solver.at_amplitude(linear(eps0), &seed, eps0).ok_or(underflow.clone())?;
    let x1 = solver.at_amplitude(linear(2.0 * eps0), &seed, 2.0 * eps0).ok_or(underflow)?;

    // Edge the frequency moves towards: down for softening, up for hardening.
    let p = cfg.chain.bulk();
    let edge = if cfg.b == 0.0 {
        None
    } else {
        let w0 = omega0 * omega0;
        let band = p.band_of(w0);
        let (lo, hi) = match band {
            Some(Band::Acoustic) => p.acoustic_band(),
            Some(Band::Optical) => p.optical_band(),
            None => (f64::NAN, f64::NAN),
        };
        band.map(|_| if cfg.b > 0.0 { (lo, -1.0) } else { (hi, 1.0) })
    };

    let mut points = vec![describe(cfg, &solver.op, &solver.basis, &seed, &x0, 0.0)];
    let mut s_total = distance(&x0, &x1);
    points.push(describe(cfg, &solver.op, &solver.basis, &seed, &x1, s_total));
    let (mut prev, mut cur) = (x0, x1);
    let mut step = cfg.step.min(settings.step_max).max(distance(&prev, &cur));
    let mut exit_event = None;
    let stop = loop {
        if let Some(reason) = stop_reason(points.last().unwrap(), settings, edge, points.len()) {
            break reason;
        }
        let d = distance(&prev, &cur);
        let tangent: Vec<f64> = cur.iter().zip(&prev).map(|(c, p)| (c - p) / d).collect();
        let accepted = loop {
            let pred: Vec<f64> = cur.iter().zip(&tangent).map(|(c, t)| c + step * t).collect();
            let constraint = |x: &[f64]| -> f64 { x.iter().zip(&pred).zip(&tangent).map(|((x, p), t)| (x - p) * t).sum() };
            match solver.newton(pred.clone(), &constraint, &tangent) {
                Some((x, iters)) => break Some((x, iters)),
                None => {
                    step *= 0.5;
                    if step < settings.step_min {
                        break None;
                    }
                }
            }
        };
        let Some((x, iters)) = accepted else {
            break StopReason::StepUnderflow { step };
        };
        s_total += distance(&cur, &x);
        let sol = describe(cfg, &solver.op, &solver.basis, &seed, &x, s_total);
        let live = check_nonresonance_at(&spectrum, seed_rank, sol.omega, settings.resonance_margin);
        if !live.passes {
            let w = live.margins.iter().min_by(|x, y| x.2.total_cmp(&y.2)).copied().unwrap_or((0, f64::NAN, f64::NAN));
            break StopReason::Resonance {
                rank: w.0,
                ratio: w.1,
                margin: w.2,
            };
        }
        if let (None, Some((e, dir))) = (exit_event, edge) {
            let before = points.last().unwrap();
            if (sol.omega2() - e) * dir > 0.0 {
                let t = (e - before.omega2()) / (sol.omega2() - before.omega2());
                exit_event = Some(ExitEvent {
                    point: points.len(),
                    edge_omega2: e,
                    arclength: before.arclength + t * (sol.arclength - before.arclength),
                });
            }
        }
        points.push(sol);
        prev = std::mem::replace(&mut cur, x);
        if iters <= 4 {
            step = (step * 1.5).min(settings.step_max);
        }
    };
    Ok(ContinuationBranch {
        points,
        seed_mode: seed_rank,
        seed_omega: omega0,
        exit_event,
        stop,
    })
}

fn stop_reason(
    last: &PeriodicSolution,
    settings: &ContinuationSettings,
    edge: Option<(f64, f64)>,
    count: usize,
) -> Option<StopReason> {
    if last.norm >= settings.amplitude_max {
        return Some(StopReason::AmplitudeReached);
    }
    if let (Some(depth), Some((e, dir))) = (settings.gap_depth, edge) {
        if (last.omega2() - e) * dir >= depth {
            return Some(StopReason::GapDepthReached);
        }
    }
    (count >= settings.max_points).then_some(StopReason::MaxPoints)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize, k32: f64) -> ChainConfig {
        ChainConfig::new(n, 1.0, 2.3, 1.3, k32).unwrap()
    }

    #[test]
    fn linear_mode_has_zero_residual() {
        let c = chain(10, 3.5);
        let s = full_spectrum(&c).unwrap();
        let cfg = NonlinearConfig { b: 0.0, ..NonlinearConfig::new(c, 0.0) };
        let rank = 12;
        let eps = 0.3;
        let hc = 4;
        let mut coeffs = vec![0.0; 20 * hc];
        for (j, u) in s.mode(rank).iter().enumerate() {
            coeffs[j * hc] = eps * u;
        }
        let r = residual(&cfg, &coeffs, s.omega2(rank).sqrt());
        assert!(r.iter().all(|v| v.abs() <= 1e-12 * eps));
        let zero = residual(&NonlinearConfig::new(c, 1.0), &vec![0.0; 20 * hc], 2.0);
        assert!(zero.iter().all(|v| *v == 0.0));
    }

    /// Oracle: scalar Duffing harmonic balance, `cos^3 = (3 cos + cos 3τ) / 4`.
    #[test]
    fn scalar_duffing_projection() {
        let basis = HarmonicBasis::new(7);
        let a = 0.7;
        let p = basis.cubic_projection(&[a, 0.0, 0.0, 0.0]);
        assert!((p[0] - 0.75 * a * a * a).abs() <= 1e-14);
        assert!((p[1] - 0.25 * a * a * a).abs() <= 1e-14);
        assert!(p[2].abs() <= 1e-14 && p[3].abs() <= 1e-14);
        let op = Tridiagonal { diag: vec![-2.0], off: vec![] };
        let (b, w) = (0.5, 1.3);
        let r = residual_with_operator(&op, b, &basis, &[a, 0.0, 0.0, 0.0], w);
        assert!((r[0] - (-w * w * a + 2.0 * a - b * 0.75 * a * a * a)).abs() <= 1e-14);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let c = chain(3, 3.5);
        let basis = HarmonicBasis::new(5);
        let op = assemble(&c);
        let hc = basis.len();
        let x: Vec<f64> = (0..6 * hc).map(|i| 0.3 * ((i as f64) * 0.7).sin()).collect();
        let w = 2.1;
        let jac = bordered_jacobian(&op, 0.8, &basis, &x, w);
        let h = 1e-6;
        for k in 0..=x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            let (mut wp, mut wm) = (w, w);
            if k < x.len() {
                xp[k] += h;
                xm[k] -= h;
            } else {
                wp += h;
                wm -= h;
            }
            let rp = residual_with_operator(&op, 0.8, &basis, &xp, wp);
            let rm = residual_with_operator(&op, 0.8, &basis, &xm, wm);
            for row in 0..x.len() {
                let fd = (rp[row] - rm[row]) / (2.0 * h);
                assert!((fd - jac[(row, k)]).abs() <= 1e-6, "({row},{k})");
            }
        }
    }

    #[test]
    fn nonresonance_examples() {
        let s = full_spectrum(&chain(100, 3.5)).unwrap();
        let seed = lowest_optical_rank(&s).unwrap();
        let r = check_nonresonance(&s, seed, DEFAULT_RESONANCE_MARGIN);
        assert!(r.passes);
        assert_eq!(r.margins.len(), 199);
        // Doubling the seed frequency lands above the whole spectrum.
        assert!(2.0 * r.seed_omega > (2.0f64 * 3.3).sqrt());
        // A seed at a third of an existing frequency is resonant.
        let top = s.omega2(s.len() - 1).sqrt();
        let forced = check_nonresonance_at(&s, usize::MAX, top / 3.0, DEFAULT_RESONANCE_MARGIN);
        assert!(!forced.passes);
        assert!(forced.min_margin <= 1e-12);
    }

    #[test]
    fn linear_branch_is_a_ray() {
        let c = chain(8, 3.5);
        let cfg = NonlinearConfig::new(c, 0.0);
        let settings = ContinuationSettings {
            amplitude_max: 1.0,
            ..Default::default()
        };
        let s = full_spectrum(&c).unwrap();
        let seed = lowest_optical_rank(&s).unwrap();
        let br = continue_branch(&cfg, seed, &settings).unwrap();
        assert!(br.points.len() > 3);
        for p in &br.points {
            assert!((p.omega - br.seed_omega).abs() <= 1e-12);
            let f = p.fundamental();
            let dot: f64 = f.iter().zip(s.mode(seed)).map(|(x, y)| x * y).sum();
            let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((dot.abs() - norm).abs() <= 1e-10 * norm);
        }
        assert!(br.exit_event.is_none());
    }

    #[test]
    fn softening_branch_small_chain() {
        let c = chain(20, 3.5);
        let cfg = NonlinearConfig::new(c, 1.0);
        let settings = ContinuationSettings {
            gap_depth: Some(0.05),
            ..Default::default()
        };
        let s = full_spectrum(&c).unwrap();
        let seed = lowest_optical_rank(&s).unwrap();
        let br = continue_branch(&cfg, seed, &settings).unwrap();
        assert_eq!(br.stop, StopReason::GapDepthReached, "{:?}", br.stop);
        let first = &br.points[0];
        assert!((first.omega - br.seed_omega).abs() <= 1e-8);
        let f = first.fundamental();
        let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
        let err = f.iter().zip(s.mode(seed)).map(|(x, y)| (x / norm - y).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-6);
        // Positive b lowers the frequency at small amplitude.
        assert!(br.points[1].omega < br.seed_omega);
        for p in &br.points {
            assert!(p.residual <= 1e-10);
            assert!((p.energy - p.energy_quadrature).abs() <= 1e-6 * p.energy.abs());
        }
        assert!(br.exit_event.is_some());
        assert!(br.ipr_strictly_increasing());
    }

    #[test]
    fn hardening_raises_the_frequency() {
        let c = chain(10, 3.5);
        let cfg = NonlinearConfig::new(c, -1.0);
        let settings = ContinuationSettings {
            max_points: 6,
            ..Default::default()
        };
        let s = full_spectrum(&c).unwrap();
        let br = continue_branch(&cfg, lowest_optical_rank(&s).unwrap(), &settings).unwrap();
        assert!(br.points.last().unwrap().omega > br.seed_omega);
    }

    #[test]
    fn truncation_is_converged() {
        let c = chain(10, 3.5);
        let s = full_spectrum(&c).unwrap();
        let seed = lowest_optical_rank(&s).unwrap();
        let mut omegas = Vec::new();
        for h in [7, 15] {
            let cfg = NonlinearConfig {
                harmonics: h,
                ..NonlinearConfig::new(c, 1.0)
            };
            let solver = Solver {
                cfg: &cfg,
                op: assemble(&c),
                basis: HarmonicBasis::new(h),
                max_newton: 20,
            };
            let hc = solver.basis.len();
            let mut x = vec![0.0; 20 * hc + 1];
            for (j, u) in s.mode(seed).iter().enumerate() {
                x[j * hc] = 0.5 * u;
            }
            x[20 * hc] = s.omega2(seed).sqrt();
            let x = solver.at_amplitude(x, s.mode(seed), 0.5).unwrap();
            omegas.push(x[20 * hc]);
        }
        assert!((omegas[0] - omegas[1]).abs() <= 1e-6 * omegas[0]);
    }

    #[test]
    fn invalid_truncation_is_rejected() {
        let cfg = NonlinearConfig {
            harmonics: 4,
            ..NonlinearConfig::new(chain(5, 3.5), 1.0)
        };
        assert!(cfg.validate().is_err());
    }
}
