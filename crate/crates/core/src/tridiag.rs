//! Symmetric tridiagonal eigensolver: Sturm-sequence bisection for the
//! eigenvalues and pivoted inverse iteration for the eigenvectors.
//!
//! The kernels are generic over [`Real`], so the same code runs in `f64` and in
//! double-double arithmetic when exponentially small splittings must be resolved.

use crate::chain::Tridiagonal;
use crate::error::{ChainError, Result};
use crate::real::Real;

/// Maximum number of inverse-iteration sweeps per eigenvector.
pub const MAX_INVERSE_ITERATIONS: usize = 100;

/// Minimum number of inverse-iteration sweeps per eigenvector.
pub const MIN_INVERSE_ITERATIONS: usize = 3;

/// Tolerances of the solver, expressed relative to `||L||`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Absolute width of the final bisection interval divided by `||L||`.
    pub bisection: f64,
    /// Eigenvalues closer than this (relative) are reorthogonalized as a cluster.
    pub cluster: f64,
    /// Accepted eigen-residual of an inverse-iteration vector (relative).
    pub residual: f64,
}

impl Tolerances {
    /// Default tolerances for the working precision `R`.
    ///
    /// In `f64` these are `1e-13`, `1e-8` and `1e-11`; in double-double they
    /// shrink with the unit roundoff.
    pub fn for_precision<R: Real>() -> Self {
        if R::EPSILON >= f64::EPSILON {
            Self {
                bisection: 1e-13,
                cluster: 1e-8,
                residual: 1e-11,
            }
        } else {
            Self {
                bisection: 20.0 * R::EPSILON,
                cluster: 1e-16,
                residual: 1e5 * R::EPSILON,
            }
        }
    }
}

/// Eigenvalues in ascending order with matching unit eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpairs<R> {
    pub values: Vec<R>,
    pub vectors: Vec<Vec<R>>,
}

/// Gershgorin interval containing every eigenvalue.
pub fn gershgorin<R: Real>(t: &Tridiagonal<R>) -> (R, R) {
    let n = t.dim();
    let mut lo = t.diag[0];
    let mut hi = t.diag[0];
    for i in 0..n {
        let mut r = R::zero();
        if i > 0 {
            r = r + t.off[i - 1].abs();
        }
        if i + 1 < n {
            r = r + t.off[i].abs();
        }
        let a = t.diag[i] - r;
        let b = t.diag[i] + r;
        if a < lo {
            lo = a;
        }
        if b > hi {
            hi = b;
        }
    }
    (lo, hi)
}

/// Number of eigenvalues strictly below `x`, from the signs of the pivots of
/// the `LDL^T` factorization of `T - xI`.
pub fn sturm_count<R: Real>(t: &Tridiagonal<R>, x: R) -> usize {
    let pivmin = R::from_f64(f64::MIN_POSITIVE.sqrt());
    let mut count = 0;
    let mut q = t.diag[0] - x;
    for i in 0..t.dim() {
        if i > 0 {
            let e = t.off[i - 1];
            q = t.diag[i] - x - e * e / q;
        }
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < R::zero() {
            count += 1;
        }
    }
    count
}

/// The `k`-th smallest eigenvalue (zero based) by bisection.
pub fn eigenvalue_by_index<R: Real>(t: &Tridiagonal<R>, k: usize, tol: R) -> R {
    let (mut lo, mut hi) = gershgorin(t);
    let two = R::from_f64(2.0);
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        let mid = (lo + hi) / two;
        if !(mid > lo && mid < hi) {
            break;
        }
        if sturm_count(t, mid) <= k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / two
}

/// All eigenvalues in ascending order.
pub fn eigenvalues<R: Real>(t: &Tridiagonal<R>) -> Vec<R> {
    let tol = Tolerances::for_precision::<R>();
    let abs_tol = R::from_f64(tol.bisection) * t.norm();
    (0..t.dim())
        .map(|k| eigenvalue_by_index(t, k, abs_tol))
        .collect()
}

/// Partial-pivoting LU factorization of a shifted tridiagonal matrix.
struct TridiagonalLu<R> {
    dl: Vec<R>,
    d: Vec<R>,
    du: Vec<R>,
    du2: Vec<R>,
    swapped: Vec<bool>,
}

impl<R: Real> TridiagonalLu<R> {
    fn factor(t: &Tridiagonal<R>, shift: R, pivmin: R) -> Self {
        let n = t.dim();
        let mut d: Vec<R> = t.diag.iter().map(|&x| x - shift).collect();
        let mut dl = t.off.clone();
        let mut du = t.off.clone();
        let mut du2 = vec![R::zero(); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i].abs() < pivmin {
                    d[i] = pivmin;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] = d[i + 1] - fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if d[n - 1].abs() < pivmin {
            d[n - 1] = pivmin;
        }
        Self {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [R]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] = b[i + 1] - self.dl[i] * b[i];
            }
        }
        b[n - 1] = b[n - 1] / self.d[n - 1];
        if n >= 2 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

fn norm2<R: Real>(x: &[R]) -> R {
    x.iter().fold(R::zero(), |s, &v| s + v * v).sqrt()
}

fn dot<R: Real>(x: &[R], y: &[R]) -> R {
    x.iter().zip(y).fold(R::zero(), |s, (&a, &b)| s + a * b)
}

/// Euclidean norm of `T x - lambda x`.
pub fn residual_norm<R: Real>(t: &Tridiagonal<R>, lambda: R, x: &[R]) -> R {
    let y = t.mul_vec(x);
    let r: Vec<R> = y.iter().zip(x).map(|(&a, &b)| a - lambda * b).collect();
    norm2(&r)
}

/// Flips the sign so the largest-magnitude component is positive; ties go to
/// the lowest index.
pub fn fix_sign<R: Real>(x: &mut [R]) {
    let mut best = 0;
    for i in 1..x.len() {
        if x[i].abs() > x[best].abs() {
            best = i;
        }
    }
    if x[best] < R::zero() {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
}

/// Deterministic, index-dependent start vector for inverse iteration.
fn start_vector<R: Real>(n: usize, k: usize) -> Vec<R> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64 ^ ((k as u64 + 1).wrapping_mul(0xBF58_476D_1CE4_E5B9));
    (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            R::from_f64(0.5 + (state >> 11) as f64 / (1u64 << 53) as f64)
        })
        .collect()
}

/// Eigenvectors for the given ascending eigenvalues by inverse iteration, with
/// modified Gram-Schmidt inside clusters of close eigenvalues.
pub fn eigenvectors<R: Real>(t: &Tridiagonal<R>, values: &[R]) -> Result<Vec<Vec<R>>> {
    let n = t.dim();
    let tol = Tolerances::for_precision::<R>();
    let norm = t.norm().max(R::from_f64(f64::MIN_POSITIVE));
    let cluster_gap = R::from_f64(tol.cluster) * norm;
    let res_tol = R::from_f64(tol.residual) * norm;
    let pivmin = R::from_f64(R::EPSILON) * norm;
    let mut vectors: Vec<Vec<R>> = Vec::with_capacity(values.len());
    let mut cluster_start = 0;
    for (k, &lambda) in values.iter().enumerate() {
        if k > 0 && (lambda - values[k - 1]).abs() > cluster_gap {
            cluster_start = k;
        }
        let lu = TridiagonalLu::factor(t, lambda, pivmin);
        let mut x = start_vector::<R>(n, k);
        let mut converged = false;
        for sweep in 0..MAX_INVERSE_ITERATIONS {
            lu.solve(&mut x);
            for v in &vectors[cluster_start..k] {
                let c = dot(&x, v);
                for (xi, &vi) in x.iter_mut().zip(v) {
                    *xi = *xi - c * vi;
                }
            }
            let nx = norm2(&x);
            for xi in x.iter_mut() {
                *xi = *xi / nx;
            }
            // Extra sweeps after the first purge the start-vector contamination
            // that the residual alone cannot see.
            if sweep >= MIN_INVERSE_ITERATIONS - 1 && residual_norm(t, lambda, &x) <= res_tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(ChainError::ConvergenceFailure {
                index: k,
                iterations: MAX_INVERSE_ITERATIONS,
            });
        }
        fix_sign(&mut x);
        vectors.push(x);
    }
    Ok(vectors)
}

/// Full eigendecomposition: bisection eigenvalues plus inverse-iteration vectors.
pub fn eigenpairs<R: Real>(t: &Tridiagonal<R>) -> Result<Eigenpairs<R>> {
    let values = eigenvalues(t);
    let vectors = eigenvectors(t, &values)?;
    Ok(Eigenpairs { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::DoubleDouble;
    use nalgebra::DMatrix;

    fn laplacian(n: usize) -> Tridiagonal<f64> {
        Tridiagonal {
            diag: vec![2.0; n],
            off: vec![-1.0; n - 1],
        }
    }

    #[test]
    fn dirichlet_laplacian_eigenvalues() {
        let n = 9;
        let vals = eigenvalues(&laplacian(n));
        for (k, v) in vals.iter().enumerate() {
            let x = (k as f64 + 1.0) * std::f64::consts::PI / (n as f64 + 1.0);
            let exact = 2.0 - 2.0 * x.cos();
            assert!((v - exact).abs() <= 1e-12);
        }
    }

    #[test]
    fn matches_dense_symmetric_solver() {
        let t = Tridiagonal {
            diag: vec![-1.3, -3.3, -3.3, -3.3, -3.3, -4.5],
            off: vec![1.0, 2.3, 1.0, 2.3, 1.0],
        };
        let dense = t.to_dense();
        let mut oracle: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        let pairs = eigenpairs(&t).unwrap();
        for (a, b) in pairs.values.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-12);
        }
        let v = DMatrix::from_fn(6, 6, |i, j| pairs.vectors[j][i]);
        let gram = v.transpose() * &v;
        let err = (gram - DMatrix::identity(6, 6)).amax();
        assert!(err <= 1e-12, "{err}");
    }

    #[test]
    fn sign_convention_prefers_lowest_index_on_ties() {
        let mut x = vec![-0.5, 0.5, 0.1];
        fix_sign(&mut x);
        assert_eq!(x, vec![0.5, -0.5, -0.1]);
    }

    #[test]
    fn clustered_eigenvalues_get_orthogonal_vectors() {
        // Two decoupled identical blocks give exactly repeated eigenvalues.
        let t = Tridiagonal {
            diag: vec![2.0, 2.0, 2.0, 2.0],
            off: vec![-1.0, 0.0, -1.0],
        };
        let pairs = eigenpairs(&t).unwrap();
        for i in 0..4 {
            for j in 0..i {
                assert!(dot(&pairs.vectors[i], &pairs.vectors[j]).abs() <= 1e-12);
            }
            assert!(residual_norm(&t, pairs.values[i], &pairs.vectors[i]) <= 1e-11 * 4.0);
        }
    }

    #[test]
    fn double_double_path_agrees_with_f64() {
        let t = laplacian(7);
        let td = Tridiagonal {
            diag: t.diag.iter().map(|&x| DoubleDouble::from(x)).collect(),
            off: t.off.iter().map(|&x| DoubleDouble::from(x)).collect(),
        };
        let a = eigenpairs(&t).unwrap();
        let b = eigenpairs(&td).unwrap();
        for k in 0..7 {
            assert!((a.values[k] - b.values[k].to_f64()).abs() <= 1e-12);
            let r = residual_norm(&td, b.values[k], &b.vectors[k]);
            assert!(r.to_f64() <= 1e-26);
        }
    }
}
