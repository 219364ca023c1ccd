use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::upper_cholesky;

/// Upper-triangular factor `U` of a correlation matrix `R = U Uᵀ`.
///
/// Rows of `U` have unit Euclidean norm and the diagonal is strictly
/// positive, so `R` has unit diagonal and is positive definite. The last
/// row is `(0, …, 0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationFactor {
    u: DMatrix<f64>,
}

impl CorrelationFactor {
    pub fn identity(n: usize) -> Self {
        Self {
            u: DMatrix::identity(n, n),
        }
    }

    /// Scale each row of an upper-triangular matrix with positive diagonal to
    /// unit norm.
    pub fn normalize(raw: &DMatrix<f64>) -> Result<Self> {
        let n = raw.nrows();
        if n == 0 || !raw.is_square() {
            return Err(Error::Dimension("U must be square and non-empty".into()));
        }
        let mut u = raw.clone();
        for i in 0..n {
            if (0..i).any(|j| raw[(i, j)] != 0.0) {
                return Err(Error::param("U", "must be upper triangular"));
            }
            if !(raw[(i, i)].is_finite() && raw[(i, i)] > 0.0) {
                return Err(Error::param(
                    format!("U[{},{}]", i + 1, i + 1),
                    "diagonal must be positive",
                ));
            }
            let norm = raw.row(i).norm();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(Error::param("U", format!("row {} has zero norm", i + 1)));
            }
            u.row_mut(i).unscale_mut(norm);
        }
        Ok(Self { u })
    }

    /// Factor an existing correlation matrix.
    pub fn from_correlation(r: &DMatrix<f64>) -> Result<Self> {
        let n = r.nrows();
        if !r.is_square() || n == 0 {
            return Err(Error::Dimension("R must be square".into()));
        }
        for i in 0..n {
            if (r[(i, i)] - 1.0).abs() > 1e-9 {
                return Err(Error::param("R", "diagonal must equal 1"));
            }
            for j in 0..i {
                if (r[(i, j)] - r[(j, i)]).abs() > 1e-12 {
                    return Err(Error::param("R", "must be symmetric"));
                }
            }
        }
        let u = upper_cholesky(r).ok_or_else(|| Error::param("R", "must be positive definite"))?;
        Self::normalize(&u)
    }

    /// Bivariate correlation with coefficient `rho` in (−1, 1).
    pub fn from_rho(rho: f64) -> Result<Self> {
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::param("rho", "must lie in (-1, 1)"));
        }
        Self::from_correlation(&DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]))
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.u
    }

    /// `R = U Uᵀ` with an exactly unit diagonal.
    pub fn correlation(&self) -> DMatrix<f64> {
        let mut r = &self.u * self.u.transpose();
        for i in 0..r.nrows() {
            r[(i, i)] = 1.0;
            for j in 0..i {
                let v = 0.5 * (r[(i, j)] + r[(j, i)]);
                r[(i, j)] = v;
                r[(j, i)] = v;
            }
        }
        r
    }
}

/// Normalize `raw` and return the factor together with `R = U Uᵀ`.
pub fn correlation_from_factor(raw: &DMatrix<f64>) -> Result<(CorrelationFactor, DMatrix<f64>)> {
    let f = CorrelationFactor::normalize(raw)?;
    let r = f.correlation();
    Ok((f, r))
}
