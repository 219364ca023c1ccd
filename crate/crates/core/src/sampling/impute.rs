use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_jitter, psd_factor, std_normal_vec};
use crate::model::{GarchParams, ModelSpec, SeriesData};

/// Draw every missing cell from its conditional distribution given the
/// state path and the observed components at the same time point.
///
/// At time `t` with observed set `o` and missing set `m`,
/// `y_m | θ_t, y_o ~ N(μ_m + V_mo V_oo⁻¹ (y_o − μ_o), V_mm − V_mo V_oo⁻¹ V_om)`
/// where `μ = F'θ_t` and `V_t = D_t R D_t` with `D_t = diag(√s2_t)`.
/// Values are returned in [`SeriesData::missing_cells`] order.
pub fn impute_missing<R: Rng + ?Sized>(
    states: &DMatrix<f64>,
    spec: &ModelSpec,
    s2: &DMatrix<f64>,
    corr: &DMatrix<f64>,
    data: &SeriesData,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let (t_len, n) = (data.len(), data.n());
    if states.nrows() != t_len + 1 || states.ncols() != spec.r() {
        return Err(Error::Dimension("state path does not match data".into()));
    }
    if s2.shape() != (t_len, n) || corr.shape() != (n, n) {
        return Err(Error::Dimension("variance path or correlation does not match data".into()));
    }
    let fp = spec.f_prime();
    let mut out = Vec::new();
    for t in 0..t_len {
        let (obs, miss): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| data.is_observed(t, i));
        if miss.is_empty() {
            continue;
        }
        let mu = fp * states.row(t + 1).transpose();
        let sd: Vec<f64> = (0..n).map(|i| s2[(t, i)].sqrt()).collect();
        let v = |i: usize, j: usize| sd[i] * sd[j] * corr[(i, j)];
        let v_mm = DMatrix::from_fn(miss.len(), miss.len(), |a, b| v(miss[a], miss[b]));
        let (mean, cov) = if obs.is_empty() {
            (DVector::from_iterator(miss.len(), miss.iter().map(|&i| mu[i])), v_mm)
        } else {
            let v_oo = DMatrix::from_fn(obs.len(), obs.len(), |a, b| v(obs[a], obs[b]));
            let v_om = DMatrix::from_fn(obs.len(), miss.len(), |a, b| v(obs[a], miss[b]));
            let chol = cholesky_jitter(&v_oo)
                .ok_or_else(|| Error::Numerical(format!("observation covariance at t = {} is singular", t + 1)))?;
            let resid = DVector::from_iterator(obs.len(), obs.iter().map(|&i| data.y()[(t, i)] - mu[i]));
            let coef = chol.solve(&v_om); // V_oo⁻¹ V_om
            let mean = DVector::from_iterator(miss.len(), miss.iter().map(|&i| mu[i])) + coef.transpose() * resid;
            let cov = v_mm - v_om.transpose() * coef;
            (mean, cov)
        };
        let draw = mean + psd_factor(&cov) * std_normal_vec(miss.len(), rng);
        out.extend(draw.iter());
    }
    Ok(out)
}

/// Conditional standard deviations driven by the errors `z_t = y_t − F'θ_t`
/// of a sampled state path, with `y` completed at missing cells.
/// Pre-sample lags are set to the unconditional variance.
pub fn state_sigma_path(
    garch: &GarchParams,
    states: &DMatrix<f64>,
    y: &DMatrix<f64>,
    spec: &ModelSpec,
) -> Result<DMatrix<f64>> {
    let (t_len, n) = y.shape();
    if states.nrows() != t_len + 1 || garch.n() != n || spec.n() != n {
        return Err(Error::Dimension("state path, data and GARCH parameters disagree".into()));
    }
    let fp = spec.f_prime();
    let mut z2 = DMatrix::zeros(t_len, n);
    for t in 0..t_len {
        let fit = fp * states.row(t + 1).transpose();
        for i in 0..n {
            z2[(t, i)] = (y[(t, i)] - fit[i]).powi(2);
        }
    }
    let mut s2 = DMatrix::zeros(t_len, n);
    for i in 0..n {
        let u = garch.series(i).unconditional_variance();
        for t in 0..t_len {
            let lag = |path: &DMatrix<f64>, j: usize| if j > t { u } else { path[(t - j, i)] };
            s2[(t, i)] = garch.step_unchecked(i, |j| lag(&z2, j), |j| lag(&s2, j));
        }
    }
    Ok(s2.map(f64::sqrt))
}
