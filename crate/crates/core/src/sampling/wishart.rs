use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_jitter, symmetrize};
use crate::model::{ModelSpec, SeriesData, StateCov};

use super::priors::std_normal;

/// Draw from the inverse-Wishart distribution `IW(df, scale)` with density
/// proportional to `|X|^{-(df+p+1)/2} exp(-tr(scale X⁻¹)/2)`.
///
/// Bartlett decomposition: with `scale = L Lᵀ` and `A` the Bartlett factor
/// of `W(df, I)`, `X = (L A⁻ᵀ)(L A⁻ᵀ)ᵀ`.
pub fn inverse_wishart<R: Rng + ?Sized>(df: f64, scale: &DMatrix<f64>, rng: &mut R) -> Result<DMatrix<f64>> {
    let p = scale.nrows();
    if !scale.is_square() || p == 0 {
        return Err(Error::Dimension("inverse-Wishart scale must be square".into()));
    }
    if !(df > p as f64 - 1.0) {
        return Err(Error::param("df", format!("must exceed {}", p - 1)));
    }
    let l = cholesky_jitter(scale)
        .ok_or_else(|| Error::Numerical("inverse-Wishart scale is not positive definite".into()))?
        .l();
    let mut a = DMatrix::zeros(p, p);
    for i in 0..p {
        let chi = ChiSquared::new(df - i as f64).map_err(|e| Error::Numerical(e.to_string()))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = std_normal(rng);
        }
    }
    let mut a_inv = DMatrix::identity(p, p);
    if !a.solve_lower_triangular_mut(&mut a_inv) {
        return Err(Error::Numerical("degenerate Bartlett factor".into()));
    }
    let t = l * a_inv.transpose();
    let mut x = &t * t.transpose();
    symmetrize(&mut x);
    Ok(x)
}

/// Sum of squared state innovations `Σ_{t=1}^T (θ_t − Gθ_{t−1})(θ_t − Gθ_{t−1})ᵀ`.
pub fn state_innovation_scatter(states: &DMatrix<f64>, spec: &ModelSpec) -> Result<DMatrix<f64>> {
    let r = spec.r();
    if states.ncols() != r || states.nrows() == 0 {
        return Err(Error::Dimension(format!("state path must have {r} columns")));
    }
    let g = spec.g();
    let mut s = DMatrix::zeros(r, r);
    for t in 1..states.nrows() {
        let d = states.row(t).transpose() - g * states.row(t - 1).transpose();
        s.ger(1.0, &d, &d, 1.0);
    }
    Ok(s)
}

/// Conjugate update `W | θ ~ IW(df + T, scale + Σ innovations)`.
pub fn sample_w_conjugate<R: Rng + ?Sized>(
    states: &DMatrix<f64>,
    spec: &ModelSpec,
    df: f64,
    scale: &DMatrix<f64>,
    rng: &mut R,
) -> Result<StateCov> {
    let s = state_innovation_scatter(states, spec)?;
    let t = (states.nrows() - 1) as f64;
    StateCov::new(inverse_wishart(df + t, &(scale + s), rng)?)
}

/// Conjugate update of a constant observation covariance given states and
/// completed observations (`y` without `NaN`).
pub fn sample_v_conjugate<R: Rng + ?Sized>(
    states: &DMatrix<f64>,
    y: &DMatrix<f64>,
    spec: &ModelSpec,
    df: f64,
    scale: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let n = spec.n();
    if y.ncols() != n || states.nrows() != y.nrows() + 1 {
        return Err(Error::Dimension("states must have one more row than observations".into()));
    }
    let fp = spec.f_prime();
    let mut s = scale.clone();
    for t in 0..y.nrows() {
        let d = y.row(t).transpose() - fp * states.row(t + 1).transpose();
        s.ger(1.0, &d, &d, 1.0);
    }
    inverse_wishart(df + y.nrows() as f64, &s, rng)
}

/// Observations with missing cells replaced by `imputed` (in
/// [`SeriesData::missing_cells`] order).
pub fn completed_observations(data: &SeriesData, imputed: &[f64]) -> DMatrix<f64> {
    let mut y = data.y().clone();
    for (&(t, i), &v) in data.missing_cells().iter().zip(imputed) {
        y[(t, i)] = v;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn inverse_wishart_mean() {
        // E[X] = scale / (df − p − 1).
        let scale = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let df = 9.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 40_000;
        let mut acc = DMatrix::zeros(2, 2);
        for _ in 0..n {
            acc += inverse_wishart(df, &scale, &mut rng).unwrap();
        }
        acc /= n as f64;
        let expected = &scale / (df - 3.0);
        assert!((acc - &expected).amax() < 0.01, "{expected}");
    }

    #[test]
    fn univariate_is_inverse_gamma() {
        // IW(ν, s) in one dimension is InvGamma(ν/2, s/2), mean s/(ν−2).
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = DMatrix::from_element(1, 1, 3.0);
        let draws: Vec<f64> = (0..50_000).map(|_| inverse_wishart(8.0, &s, &mut rng).unwrap()[(0, 0)]).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }

    #[test]
    fn rejects_bad_arguments() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(inverse_wishart(0.5, &DMatrix::identity(2, 2), &mut rng).is_err());
        assert!(inverse_wishart(5.0, &(-DMatrix::<f64>::identity(2, 2)), &mut rng).is_err());
    }

    #[test]
    fn scatter_of_random_walk() {
        let spec = ModelSpec::random_walk_plus_noise(1).unwrap();
        let states = DMatrix::from_column_slice(4, 1, &[0.0, 1.0, 3.0, 2.0]);
        let s = state_innovation_scatter(&states, &spec).unwrap();
        assert_eq!(s[(0, 0)], 1.0 + 4.0 + 1.0);
    }
}
