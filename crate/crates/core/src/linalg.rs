//! Small dense linear-algebra helpers shared by the filter and the samplers.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

/// Jitter added to the diagonal when a Cholesky factorization fails once.
pub const JITTER: f64 = 1e-10;

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub(crate) fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square()
        && (0..m.nrows()).all(|i| {
            (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol * (1.0 + m[(i, j)].abs()))
        })
}

/// Symmetric positive definite check via Cholesky.
pub fn is_spd(m: &DMatrix<f64>) -> bool {
    m.is_square()
        && m.iter().all(|v| v.is_finite())
        && is_symmetric(m, 1e-9)
        && Cholesky::new(m.clone()).is_some()
}

/// Cholesky with one retry after adding [`JITTER`] to the diagonal.
pub(crate) fn cholesky_jitter(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c);
    }
    let mut j = m.clone();
    for i in 0..j.nrows() {
        j[(i, i)] += JITTER;
    }
    Cholesky::new(j)
}

/// Lower factor `L` with `L Lᵀ ≈ m` for a symmetric PSD matrix. Falls back to a
/// clamped eigen-decomposition when the matrix is (numerically) singular.
pub(crate) fn psd_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(c) = cholesky_jitter(m) {
        return c.l();
    }
    let mut s = m.clone();
    symmetrize(&mut s);
    let eig = s.symmetric_eigen();
    let mut f = eig.eigenvectors.clone();
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        let root = lam.max(0.0).sqrt();
        f.column_mut(k).scale_mut(root);
    }
    f
}

pub(crate) fn log_det_chol(c: &Cholesky<f64, Dyn>) -> f64 {
    let l = c.l_dirty();
    (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0
}

pub(crate) fn std_normal_vec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Draw from `N(mean, L Lᵀ)` given the lower factor `L`.
pub(crate) fn mvn_draw<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    lower: &DMatrix<f64>,
    rng: &mut R,
) -> DVector<f64> {
    let eps = std_normal_vec(mean.len(), rng);
    mean + lower * eps
}

/// Upper-triangular `U` with positive diagonal such that `U Uᵀ = m`.
pub(crate) fn upper_cholesky(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    // J m J = L Lᵀ with J the exchange matrix, hence m = (J L J)(J L J)ᵀ.
    let flipped = DMatrix::from_fn(n, n, |i, j| m[(n - 1 - i, n - 1 - j)]);
    let l = Cholesky::new(flipped)?.l();
    Some(DMatrix::from_fn(n, n, |i, j| l[(n - 1 - i, n - 1 - j)]))
}
