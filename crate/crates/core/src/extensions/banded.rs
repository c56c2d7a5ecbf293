//! Symmetric banded matrices: `L D L^T` factorization without pivoting,
//! inertia counts and shift-invert Lanczos for the eigenpairs in a window.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{ChainError, Result};

/// Symmetric matrix stored by its lower band, `lower[i][b]` holding entry
/// `(i, i - bw + b)` for `b = 0..=bw`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSymmetric {
    dim: usize,
    bw: usize,
    lower: Vec<f64>,
}

impl BandedSymmetric {
    /// Zero matrix of size `dim` with half bandwidth `bw`.
    pub fn zeros(dim: usize, bw: usize) -> Self {
        Self {
            dim,
            bw,
            lower: vec![0.0; dim * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw + j - i)
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.lower[self.slot(i, j)]
        }
    }

    /// Adds `v` to entries `(i, j)` and `(j, i)` (once on the diagonal).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry ({i}, {j}) outside the band");
        let s = self.slot(i, j);
        self.lower[s] += v;
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        for i in 0..self.dim {
            let j0 = i.saturating_sub(self.bw);
            let row = &self.lower[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            let off = self.bw + j0 - i;
            let mut acc = row[self.bw] * x[i];
            for (j, a) in (j0..i).zip(&row[off..self.bw]) {
                acc += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += acc;
        }
        y
    }

    /// Largest absolute row sum, an upper bound on the spectral radius.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| {
                let lo = i.saturating_sub(self.bw);
                let hi = (i + self.bw).min(self.dim - 1);
                (lo..=hi).map(|j| self.get(i, j).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Dense copy (for small problems and tests).
    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// Factors `A - shift I = L D L^T` without pivoting.
    pub fn factor_shifted(&self, shift: f64) -> BandedLdl {
        let (n, bw) = (self.dim, self.bw);
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        let mut d = vec![0.0; n];
        // Scratch row holding L_ik d_k for the current row.
        let mut ld = vec![0.0; w];
        // Exact zero pivots are replaced by a tiny positive one, so an
        // eigenvalue equal to the shift does not count as below it.
        let tiny = f64::EPSILON * (self.norm_inf() + shift.abs()).max(f64::MIN_POSITIVE);
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = self.get(i, j);
                for k in k0..j {
                    s -= ld[bw + k - i] * l[j * w + bw + k - j];
                }
                let lij = s / d[j];
                l[i * w + bw + j - i] = lij;
                ld[bw + j - i] = lij * d[j];
            }
            let mut s = self.get(i, i) - shift;
            for k in j0..i {
                s -= ld[bw + k - i] * l[i * w + bw + k - i];
            }
            d[i] = if s == 0.0 { tiny } else { s };
        }
        BandedLdl { dim: n, bw, l, d, shift }
    }

    /// Number of eigenvalues strictly below `x` (Sylvester inertia).
    pub fn count_below(&self, x: f64) -> usize {
        self.factor_shifted(x).negative_pivots()
    }
}

/// `L D L^T` factors of a shifted banded matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedLdl {
    dim: usize,
    bw: usize,
    l: Vec<f64>,
    d: Vec<f64>,
    shift: f64,
}

impl BandedLdl {
    /// Number of negative pivots, the count of eigenvalues below the shift.
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&x| x < 0.0).count()
    }

    /// Smallest pivot magnitude relative to the largest.
    pub fn pivot_ratio(&self) -> f64 {
        let (lo, hi) = self
            .d
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x.abs()), hi.max(x.abs())));
        lo / hi
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Solves `(A - shift I) x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.dim, self.bw, self.bw + 1);
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            let mut s = b[i];
            for j in j0..i {
                s -= self.l[i * w + bw + j - i] * b[j];
            }
            b[i] = s;
        }
        for (x, d) in b.iter_mut().zip(&self.d) {
            *x /= d;
        }
        for i in (0..n).rev() {
            let j0 = i.saturating_sub(bw);
            let xi = b[i];
            for j in j0..i {
                b[j] -= self.l[i * w + bw + j - i] * xi;
            }
        }
    }
}

/// Eigenpair of a banded matrix found by the windowed solver.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `||A x - value x||` for the unit vector.
    pub residual: f64,
}

/// Largest eigenvalue count handled by one Lanczos run before the window is split.
pub const MAX_PER_WINDOW: usize = 40;

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(b, a)| *b += alpha * a);
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            axpy(-c, q, v);
        }
    }
}

/// Splits `[lo, hi)` into sub-windows holding at most `MAX_PER_WINDOW`
/// eigenvalues each, returned with their counts.
pub fn split_window(a: &BandedSymmetric, lo: f64, hi: f64) -> Vec<(f64, f64, usize)> {
    fn rec(a: &BandedSymmetric, lo: f64, hi: f64, clo: usize, chi: usize, out: &mut Vec<(f64, f64, usize)>) {
        let m = chi - clo;
        if m == 0 {
            return;
        }
        if m <= MAX_PER_WINDOW || hi - lo <= 1e-9 * (1.0 + hi.abs()) {
            out.push((lo, hi, m));
            return;
        }
        let mid = 0.5 * (lo + hi);
        let cmid = a.count_below(mid);
        rec(a, lo, mid, clo, cmid, out);
        rec(a, mid, hi, cmid, chi, out);
    }
    let mut out = Vec::new();
    rec(a, lo, hi, a.count_below(lo), a.count_below(hi), &mut out);
    out
}

/// All eigenpairs of `a` with eigenvalue in `[lo, hi)`, for a window already
/// known to hold `count` of them, by shift-invert Lanczos with full
/// reorthogonalization and locking of converged vectors.
pub fn window_eigenpairs(a: &BandedSymmetric, lo: f64, hi: f64, count: usize) -> Result<Vec<WindowPair>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let n = a.dim();
    let scale = a.norm_inf().max(f64::MIN_POSITIVE);
    // Nudge the shift away from an eigenvalue if a pivot collapses.
    let mut shift = 0.5 * (lo + hi);
    let mut ldl = a.factor_shifted(shift);
    for attempt in 1..8 {
        if ldl.pivot_ratio() > 1e-13 {
            break;
        }
        shift = 0.5 * (lo + hi) + (hi - lo) * 1e-3 * attempt as f64 * 0.37;
        ldl = a.factor_shifted(shift);
    }
    let mut locked: Vec<WindowPair> = Vec::new();
    let max_steps = n.min(8 * count + 120);
    for round in 0..4 {
        if locked.len() >= count {
            break;
        }
        let lock_vecs: Vec<Vec<f64>> = locked.iter().map(|p| p.vector.clone()).collect();
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + ((i as f64 + 1.0) * (0.618_033_988_75 + 0.1 * round as f64)).fract())
            .collect();
        orthogonalize(&mut v, &lock_vecs);
        let nv = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        let mut basis: Vec<Vec<f64>> = vec![v];
        let (mut alpha, mut beta): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut found: Vec<WindowPair> = Vec::new();
        let limit = max_steps.saturating_sub(lock_vecs.len()).max(1);
        for k in 0..limit {
            let mut w = basis[k].clone();
            ldl.solve(&mut w);
            let ak = dot(&w, &basis[k]);
            alpha.push(ak);
            axpy(-ak, &basis[k], &mut w);
            if k > 0 {
                axpy(-beta[k - 1], &basis[k - 1], &mut w);
            }
            orthogonalize(&mut w, &basis);
            orthogonalize(&mut w, &lock_vecs);
            let bk = dot(&w, &w).sqrt();
            let done = k + 1 == limit || bk <= 1e-14 * alpha.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let check = done || (k + 1 >= count - locked.len() && (k + 1) % 10 == 0);
            if check {
                found = ritz_pairs(a, &basis, &alpha, &beta, bk, shift, lo, hi, scale);
                if locked.len() + found.len() >= count || done {
                    break;
                }
            }
            beta.push(bk);
            w.iter_mut().for_each(|x| *x /= bk);
            basis.push(w);
        }
        locked.extend(found);
    }
    if locked.len() < count {
        return Err(ChainError::ConvergenceFailure {
            index: locked.len(),
            iterations: max_steps,
        });
    }
    locked.sort_by(|x, y| x.value.total_cmp(&y.value));
    locked.truncate(count);
    Ok(locked)
}

#[allow(clippy::too_many_arguments)]
fn ritz_pairs(
    a: &BandedSymmetric,
    basis: &[Vec<f64>],
    alpha: &[f64],
    beta: &[f64],
    last_beta: f64,
    shift: f64,
    lo: f64,
    hi: f64,
    scale: f64,
) -> Vec<WindowPair> {
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 {
            beta[j]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let mut out = Vec::new();
    for (idx, &theta) in eig.eigenvalues.iter().enumerate() {
        if theta == 0.0 {
            continue;
        }
        let value = shift + 1.0 / theta;
        if value < lo || value >= hi {
            continue;
        }
        let s = eig.eigenvectors.column(idx);
        // Cheap convergence estimate before forming the Ritz vector.
        if (last_beta * s[k - 1]).abs() > 1e-8 * theta.abs() {
            continue;
        }
        let mut y = vec![0.0; a.dim()];
        for (q, c) in basis.iter().zip(s.iter()) {
            axpy(*c, q, &mut y);
        }
        let ny = dot(&y, &y).sqrt();
        y.iter_mut().for_each(|x| *x /= ny);
        let mut r = a.matvec(&y);
        axpy(-value, &y, &mut r);
        let residual = dot(&r, &r).sqrt();
        if residual <= 1e-9 * scale {
            out.push(WindowPair {
                value,
                vector: y,
                residual,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(n: usize, bw: usize) -> BandedSymmetric {
        let mut a = BandedSymmetric::zeros(n, bw);
        for i in 0..n {
            a.add(i, i, 4.0 + (i as f64 * 0.37).sin());
            for b in 1..=bw {
                if i + b < n {
                    a.add(i + b, i, 0.3 * ((i * b) as f64 * 0.11).cos() / b as f64);
                }
            }
        }
        a
    }

    #[test]
    fn factor_solve_and_inertia_match_dense() {
        let a = test_matrix(60, 5);
        let dense = a.to_dense();
        let eig = dense.clone().symmetric_eigenvalues();
        for x in [3.0, 3.9, 4.0, 4.2, 5.1] {
            let want = eig.iter().filter(|&&e| e < x).count();
            assert_eq!(a.count_below(x), want, "shift {x}");
        }
        let ldl = a.factor_shifted(4.05);
        let b: Vec<f64> = (0..60).map(|i| (i as f64).cos()).collect();
        let mut x = b.clone();
        ldl.solve(&mut x);
        let shifted = &dense - DMatrix::identity(60, 60) * 4.05;
        let r = shifted * nalgebra::DVector::from_vec(x) - nalgebra::DVector::from_vec(b);
        assert!(r.norm() <= 1e-10);
        let y = a.matvec(&[1.0; 60]);
        let yd = &dense * nalgebra::DVector::from_element(60, 1.0);
        assert!(y.iter().zip(yd.iter()).all(|(p, q)| (p - q).abs() <= 1e-12));
    }

    #[test]
    fn window_matches_dense_eigenvalues() {
        let a = test_matrix(300, 12);
        let mut eig: Vec<f64> = a.to_dense().symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        let (lo, hi) = (3.6, 4.4);
        let want: Vec<f64> = eig.iter().copied().filter(|&e| e >= lo && e < hi).collect();
        let mut got = Vec::new();
        for (l, h, m) in split_window(&a, lo, hi) {
            got.extend(window_eigenpairs(&a, l, h, m).unwrap());
        }
        got.sort_by(|x, y| x.value.total_cmp(&y.value));
        assert_eq!(got.len(), want.len());
        assert!(want.len() > MAX_PER_WINDOW);
        for (p, w) in got.iter().zip(&want) {
            assert!((p.value - w).abs() <= 1e-9, "{} vs {w}", p.value);
            assert!(p.residual <= 1e-8);
        }
    }

    #[test]
    fn degenerate_eigenvalues_are_all_found() {
        // Two identical uncoupled blocks give every eigenvalue twice.
        let block = test_matrix(50, 3);
        let mut a = BandedSymmetric::zeros(100, 3);
        for i in 0..50usize {
            for j in i.saturating_sub(3)..=i {
                let v = block.get(i, j);
                a.add(i, j, v);
                a.add(i + 50, j + 50, v);
            }
        }
        let (lo, hi) = (3.8, 4.3);
        let pairs: Vec<WindowPair> = split_window(&a, lo, hi)
            .into_iter()
            .flat_map(|(l, h, m)| window_eigenpairs(&a, l, h, m).unwrap())
            .collect();
        let single = block.to_dense().symmetric_eigenvalues();
        let want = single.iter().filter(|&&e| e >= lo && e < hi).count();
        assert_eq!(pairs.len(), 2 * want);
    }
}
