//! Largest (signed) eigenpair of a symmetric operator.
//!
//! Small problems are solved densely. Larger ones use Lanczos with full
//! reorthogonalisation and explicit restarts; the operator is only touched
//! through matrix-vector products, so sparse-plus-low-rank matrices never
//! have to be formed. An optional set of orthonormal vectors can be
//! deflated, in which case the result is the largest eigenpair of the
//! operator restricted to their orthogonal complement.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::random::{derive_seed, rng_from_seed};
use rand::Rng;

pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;
    /// `y = M x`; `y` is fully overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            e[j] = 0.0;
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        // symmetrise away rounding asymmetry
        (&m + m.transpose()) * 0.5
    }
}

/// A dense symmetric matrix viewed as an operator.
pub struct DenseSymmetric<'a>(pub &'a DMatrix<f64>);

impl SymmetricOperator for DenseSymmetric<'_> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let m = self.0;
        y.iter_mut().for_each(|v| *v = 0.0);
        // column-major storage: accumulate column by column
        for (j, &xj) in x.iter().enumerate() {
            axpy(xj, m.column(j).as_slice(), y);
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.0.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Target accuracy of the eigenvalue, judged by the smaller of the
    /// Ritz residual and residual^2 / (gap to the next Ritz value).
    pub tol: f64,
    /// Total Lanczos steps across restarts; `None` means `10 n`.
    pub max_iter: Option<usize>,
    /// Problems of at most this dimension are solved densely.
    pub dense_threshold: usize,
    /// Krylov basis size before a restart.
    pub max_basis: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-9,
            max_iter: None,
            dense_threshold: 64,
            max_basis: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Unit norm.
    pub vector: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

fn project_out(basis: &[&[f64]], w: &mut [f64]) {
    for u in basis {
        let c = dot(u, w);
        axpy(-c, u, w);
    }
}

/// Largest eigenpair of `op` on the orthogonal complement of `deflate`
/// (which must be orthonormal).
pub fn largest_eigenpair(
    op: &dyn SymmetricOperator,
    deflate: &[&[f64]],
    opts: &EigenOptions,
) -> Result<EigenPair> {
    let n = op.dim();
    if n <= deflate.len() {
        return Err(Error::TooFewNodes {
            n,
            needed: deflate.len() + 1,
        });
    }
    if n <= opts.dense_threshold {
        dense_largest(&op.to_dense(), deflate)
    } else {
        lanczos_largest(op, deflate, opts)
    }
}

/// Dense reference path: eigen-decompose the operator compressed onto an
/// orthonormal basis of the complement of `deflate`.
pub fn dense_largest(m: &DMatrix<f64>, deflate: &[&[f64]]) -> Result<EigenPair> {
    let n = m.nrows();
    if deflate.is_empty() {
        let eig = SymmetricEigen::new(m.clone());
        let (k, &value) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .ok_or(Error::TooFewNodes { n, needed: 1 })?;
        let vector = eig.eigenvectors.column(k).iter().copied().collect();
        return Ok(EigenPair { value, vector });
    }
    let q = complement_basis(n, deflate);
    let reduced = q.transpose() * m * &q;
    let eig = SymmetricEigen::new(reduced);
    let (k, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::TooFewNodes { n, needed: deflate.len() + 1 })?;
    let v = &q * eig.eigenvectors.column(k);
    let scale = v.norm();
    Ok(EigenPair {
        value,
        vector: v.iter().map(|x| x / scale).collect(),
    })
}

/// Columns form an orthonormal basis of the complement of `deflate`.
fn complement_basis(n: usize, deflate: &[&[f64]]) -> DMatrix<f64> {
    let mut basis: Vec<Vec<f64>> = deflate.iter().map(|u| u.to_vec()).collect();
    let k = basis.len();
    for j in 0..n {
        if basis.len() == n {
            break;
        }
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &e);
                axpy(-c, b, &mut e);
            }
        }
        let len = norm(&e);
        if len > 0.5 / (n as f64).sqrt() {
            e.iter_mut().for_each(|x| *x /= len);
            basis.push(e);
        }
    }
    DMatrix::from_fn(n, n - k, |i, j| basis[k + j][i])
}

fn start_vector(n: usize, deflate: &[&[f64]], attempt: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(derive_seed(0x5eed_1a2c_2052, attempt));
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    project_out(deflate, &mut v);
    project_out(deflate, &mut v);
    let len = norm(&v);
    v.iter_mut().for_each(|x| *x /= len);
    v
}

fn lanczos_largest(
    op: &dyn SymmetricOperator,
    deflate: &[&[f64]],
    opts: &EigenOptions,
) -> Result<EigenPair> {
    let n = op.dim();
    let max_iter = opts.max_iter.unwrap_or(10 * n).max(1);
    let max_basis = opts.max_basis.clamp(2, n - deflate.len());

    let mut start = start_vector(n, deflate, 0);
    let mut total = 0usize;
    let mut best = (f64::NEG_INFINITY, f64::INFINITY);
    let mut w = vec![0.0; n];

    loop {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_basis);
        let mut alpha: Vec<f64> = Vec::with_capacity(max_basis);
        let mut beta: Vec<f64> = Vec::with_capacity(max_basis);
        basis.push(start);

        loop {
            let j = basis.len() - 1;
            op.apply(&basis[j], &mut w);
            project_out(deflate, &mut w);
            let a = dot(&basis[j], &w);
            alpha.push(a);
            axpy(-a, &basis[j], &mut w);
            if j > 0 {
                axpy(-beta[j - 1], &basis[j - 1], &mut w);
            }
            // full reorthogonalisation, one modified Gram-Schmidt sweep
            for v in &basis {
                let c = dot(v, &w);
                axpy(-c, v, &mut w);
            }
            project_out(deflate, &mut w);
            let b = norm(&w);
            total += 1;

            let (theta, s) = tridiagonal_top_pair(&alpha, &beta);
            let residual = b * s[j].abs();
            // Once the top Ritz value is separated from the next one, the
            // eigenvalue error is bounded by residual^2 / gap.
            let error_bound = if j > 0 {
                let gap = theta - tridiagonal_eigenvalue(&alpha, &beta[..j], j - 1);
                residual.min(residual * residual / gap.max(f64::MIN_POSITIVE))
            } else {
                residual
            };
            if error_bound < best.1 {
                best = (theta, error_bound);
            }
            let invariant = b <= 1e-12 * theta.abs().max(1.0);
            if error_bound <= opts.tol || invariant {
                return Ok(EigenPair {
                    value: theta,
                    vector: ritz_vector(&basis, &s),
                });
            }
            if total >= max_iter {
                return Err(Error::NoConvergence {
                    iterations: total,
                    estimate: best.0,
                    residual: best.1,
                });
            }
            if basis.len() == max_basis {
                start = ritz_vector(&basis, &s);
                project_out(deflate, &mut start);
                let len = norm(&start);
                start.iter_mut().for_each(|x| *x /= len);
                log::trace!("lanczos restart after {total} steps, residual {residual:e}");
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
    }
}

fn ritz_vector(basis: &[Vec<f64>], s: &[f64]) -> Vec<f64> {
    let n = basis[0].len();
    let mut y = vec![0.0; n];
    for (v, &c) in basis.iter().zip(s) {
        axpy(c, v, &mut y);
    }
    let len = norm(&y);
    y.iter_mut().for_each(|x| *x /= len);
    y
}

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`
/// (Sturm sequence via the LDL^T pivots).
fn count_below(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..alpha.len() {
        let off = if i == 0 { 0.0 } else { beta[i - 1] * beta[i - 1] / d };
        d = alpha[i] - x - off;
        if d == 0.0 {
            d = -f64::EPSILON * (alpha[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Eigenvalue number `k` (ascending, from zero) of a symmetric tridiagonal
/// matrix, by bisection on the Sturm count.
fn tridiagonal_eigenvalue(alpha: &[f64], beta: &[f64], k: usize) -> f64 {
    let m = alpha.len();
    let (mut lo, mut hi) = gershgorin(alpha, beta);
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    while hi - lo > 4.0 * f64::EPSILON * scale {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(alpha, &beta[..m - 1], mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn gershgorin(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let m = alpha.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let r = if i > 0 { beta[i - 1].abs() } else { 0.0 } + if i + 1 < m { beta[i].abs() } else { 0.0 };
        lo = lo.min(alpha[i] - r);
        hi = hi.max(alpha[i] + r);
    }
    (lo, hi)
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta`, plus its unit eigenvector.
pub(crate) fn tridiagonal_top_pair(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let m = alpha.len();
    if m == 1 {
        return (alpha[0], vec![1.0]);
    }
    let (lo, hi) = gershgorin(alpha, &beta[..m - 1]);
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let theta = tridiagonal_eigenvalue(alpha, beta, m - 1);
    (theta, inverse_iteration(alpha, &beta[..m - 1], theta, scale))
}

/// Eigenvector of a tridiagonal matrix for a known eigenvalue, by two
/// steps of inverse iteration with partial pivoting.
fn inverse_iteration(alpha: &[f64], beta: &[f64], theta: f64, scale: f64) -> Vec<f64> {
    let m = alpha.len();
    let tiny = f64::EPSILON * scale;
    // LU of (T - theta I) with row pivoting; U has up to two superdiagonals.
    let mut d = vec![0.0; m]; // U diagonal
    let mut u1 = vec![0.0; m]; // first superdiagonal
    let mut u2 = vec![0.0; m]; // second superdiagonal (fill)
    let mut l = vec![0.0; m]; // multipliers
    let mut swapped = vec![false; m];
    let mut diag = alpha[0] - theta;
    let mut sup = if m > 1 { beta[0] } else { 0.0 };
    for i in 0..m - 1 {
        let sub = beta[i];
        let next_diag = alpha[i + 1] - theta;
        let next_sup = if i + 2 < m { beta[i + 1] } else { 0.0 };
        if sub.abs() > diag.abs() {
            // swap rows i and i+1
            swapped[i] = true;
            d[i] = sub;
            u1[i] = next_diag;
            u2[i] = next_sup;
            let mult = diag / sub;
            l[i] = mult;
            diag = sup - mult * next_diag;
            sup = -mult * next_sup;
        } else {
            if diag == 0.0 {
                diag = tiny;
            }
            d[i] = diag;
            u1[i] = sup;
            u2[i] = 0.0;
            let mult = sub / diag;
            l[i] = mult;
            diag = next_diag - mult * sup;
            sup = next_sup;
        }
    }
    d[m - 1] = if diag == 0.0 { tiny } else { diag };

    let mut x = vec![1.0; m];
    for _ in 0..3 {
        // forward: apply the row operations to x
        for i in 0..m - 1 {
            if swapped[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] -= l[i] * x[i];
        }
        // back substitution
        for i in (0..m).rev() {
            let mut acc = x[i];
            if i + 1 < m {
                acc -= u1[i] * x[i + 1];
            }
            if i + 2 < m {
                acc -= u2[i] * x[i + 2];
            }
            let piv = if d[i].abs() < tiny { tiny.copysign(d[i]) } else { d[i] };
            x[i] = acc / piv;
        }
        let len = norm(&x);
        x.iter_mut().for_each(|v| *v /= len);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};

    struct Dense(DMatrix<f64>);

    impl SymmetricOperator for Dense {
        fn dim(&self) -> usize {
            self.0.nrows()
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            for i in 0..self.dim() {
                y[i] = (0..self.dim()).map(|j| self.0[(i, j)] * x[j]).sum();
            }
        }
    }

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rng_from_seed(seed);
        let m = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        &m + m.transpose()
    }

    fn dense_top(m: &DMatrix<f64>) -> f64 {
        SymmetricEigen::new(m.clone()).eigenvalues.max()
    }

    #[test]
    fn tridiagonal_pair_matches_dense() {
        let alpha = [1.0, -2.0, 0.5, 3.0, 0.0];
        let beta = [0.7, 1.1, -0.4, 2.0];
        let t = DMatrix::from_fn(5, 5, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let (theta, s) = tridiagonal_top_pair(&alpha, &beta);
        assert!((theta - dense_top(&t)).abs() < 1e-13);
        let ts = &t * nalgebra::DVector::from_column_slice(&s);
        for i in 0..5 {
            assert!((ts[i] - theta * s[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn tridiagonal_with_zero_offdiagonal() {
        let (theta, s) = tridiagonal_top_pair(&[1.0, 5.0, 2.0], &[0.0, 0.0]);
        assert!((theta - 5.0).abs() < 1e-14);
        assert!((s[1].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lanczos_matches_dense_on_random_matrices() {
        let opts = EigenOptions {
            dense_threshold: 0,
            ..EigenOptions::default()
        };
        for seed in 0..5 {
            let m = random_symmetric(120, seed);
            let pair = largest_eigenpair(&Dense(m.clone()), &[], &opts).unwrap();
            assert!((pair.value - dense_top(&m)).abs() < 1e-8);
            assert!((norm(&pair.vector) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn returns_largest_signed_not_largest_magnitude() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(
            (0..80).map(|i| if i == 0 { -10.0 } else { i as f64 / 100.0 }).collect(),
        ));
        let opts = EigenOptions {
            dense_threshold: 0,
            ..EigenOptions::default()
        };
        let pair = largest_eigenpair(&Dense(m), &[], &opts).unwrap();
        assert!((pair.value - 0.79).abs() < 1e-9);
    }

    #[test]
    fn deflation_gives_second_eigenvalue() {
        let n = 90;
        let m = random_symmetric(n, 42);
        let eig = SymmetricEigen::new(m.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let top: Vec<f64> = eig.eigenvectors.column(order[0]).iter().copied().collect();
        let expected = eig.eigenvalues[order[1]];
        for threshold in [0, 1000] {
            let opts = EigenOptions {
                dense_threshold: threshold,
                ..EigenOptions::default()
            };
            let pair = largest_eigenpair(&Dense(m.clone()), &[&top], &opts).unwrap();
            assert!((pair.value - expected).abs() < 1e-8, "threshold {threshold}");
            assert!(dot(&pair.vector, &top).abs() < 1e-8);
        }
    }

    #[test]
    fn restarts_still_converge() {
        let m = random_symmetric(150, 3);
        let opts = EigenOptions {
            dense_threshold: 0,
            max_basis: 12,
            ..EigenOptions::default()
        };
        let pair = largest_eigenpair(&Dense(m.clone()), &[], &opts).unwrap();
        assert!((pair.value - dense_top(&m)).abs() < 1e-8);
    }

    #[test]
    fn iteration_cap_reports_best_estimate() {
        let m = random_symmetric(150, 3);
        let opts = EigenOptions {
            dense_threshold: 0,
            max_iter: Some(3),
            ..EigenOptions::default()
        };
        match largest_eigenpair(&Dense(m), &[], &opts) {
            Err(Error::NoConvergence { iterations, estimate, .. }) => {
                assert_eq!(iterations, 3);
                assert!(estimate.is_finite());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn lanczos_agrees_with_dense(seed in any::<u64>(), n in 65usize..110) {
            let m = random_symmetric(n, seed);
            let pair = largest_eigenpair(&Dense(m.clone()), &[], &EigenOptions::default()).unwrap();
            prop_assert!((pair.value - dense_top(&m)).abs() < 1e-8);
        }
    }
}
