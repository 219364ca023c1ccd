use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{ModelSpec, SeriesData};

use super::summary::PointEstimate;

/// One-sample Kolmogorov–Smirnov test against `N(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

fn std_normal() -> Normal {
    Normal::standard()
}

/// Kolmogorov survival function `P(K > λ)`.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Small-λ form converges fast where the alternating series does not.
        let x = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=6).map(|k| (((2 * k - 1) as f64).powi(2) * x).exp()).sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// KS statistic and p-value using Stephens' finite-sample correction
/// `λ = (√n + 0.12 + 0.11/√n)·D`.
pub fn ks_normal(values: &[f64]) -> Result<KsResult> {
    if values.is_empty() {
        return Err(Error::Insufficient("KS test needs at least one value".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("KS input must be finite".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let dist = std_normal();
    let statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = dist.cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    let rn = n.sqrt();
    Ok(KsResult {
        statistic,
        p_value: kolmogorov_sf((rn + 0.12 + 0.11 / rn) * statistic),
        n: sorted.len(),
    })
}

/// Normal QQ pairs `(Φ⁻¹((k − ½)/m), x_(k))`, ascending.
pub fn qq_pairs(values: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let dist = std_normal();
    sorted
        .into_iter()
        .enumerate()
        .map(|(k, x)| (dist.inverse_cdf((k as f64 + 0.5) / m), x))
        .collect()
}

/// Residuals at the point estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// `T × n` raw residuals `y − F'θ̂`; `NaN` at missing cells.
    pub residuals: DMatrix<f64>,
    /// `T × n` fitted standard deviations `σ̂_{i,t}`.
    pub sigma: DMatrix<f64>,
    /// `T × n` heteroskedasticity-adjusted residuals; `NaN` at missing cells.
    pub standardized: DMatrix<f64>,
    /// Per series, QQ pairs of the standardized residuals.
    pub qq: Vec<Vec<(f64, f64)>>,
    /// Per series, KS test of the standardized residuals.
    pub ks: Vec<KsResult>,
    /// Per series, KS test of the raw residuals rescaled to unit sample
    /// standard deviation, so only their shape is tested.
    pub ks_raw: Vec<KsResult>,
}

impl ResidualReport {
    /// Observed entries of column `i` of `m`.
    pub fn observed_column(m: &DMatrix<f64>, i: usize) -> Vec<f64> {
        m.column(i).iter().copied().filter(|v| !v.is_nan()).collect()
    }
}

fn unit_scale(mut v: Vec<f64>) -> Vec<f64> {
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
    if sd > 0.0 {
        v.iter_mut().for_each(|x| *x = (*x - mean) / sd);
    }
    v
}

/// Residual diagnostics at parameter point estimates and a state point
/// estimate `(T+1) × r`.
///
/// For the GARCH model `σ̂` follows the variance recursion driven by the
/// squared residuals; at a missing cell the squared residual is replaced by
/// its expectation `σ̂²`. The standard model uses `√V_ii`.
pub fn residual_analysis(
    data: &SeriesData,
    spec: &ModelSpec,
    estimate: &PointEstimate,
    states: &DMatrix<f64>,
) -> Result<ResidualReport> {
    let (t_len, n) = (data.len(), data.n());
    if spec.n() != n || states.nrows() != t_len + 1 || states.ncols() != spec.r() {
        return Err(Error::Dimension("state estimate does not match data and model".into()));
    }
    let fp = spec.f_prime();
    let mut resid = DMatrix::from_element(t_len, n, f64::NAN);
    for t in 0..t_len {
        let fit = fp * states.row(t + 1).transpose();
        for i in 0..n {
            if data.is_observed(t, i) {
                resid[(t, i)] = data.y()[(t, i)] - fit[i];
            }
        }
    }

    let mut sigma = DMatrix::zeros(t_len, n);
    match &estimate.garch {
        Some(g) => {
            let mut z2 = DMatrix::zeros(t_len, n);
            let mut s2 = DMatrix::zeros(t_len, n);
            for i in 0..n {
                let u = g.series(i).unconditional_variance();
                for t in 0..t_len {
                    let lag = |path: &DMatrix<f64>, j: usize| if j > t { u } else { path[(t - j, i)] };
                    s2[(t, i)] = g.step_unchecked(i, |j| lag(&z2, j), |j| lag(&s2, j));
                    z2[(t, i)] = if resid[(t, i)].is_nan() { s2[(t, i)] } else { resid[(t, i)].powi(2) };
                }
            }
            sigma = s2.map(f64::sqrt);
        }
        None => {
            for i in 0..n {
                sigma.column_mut(i).fill(estimate.obs[(i, i)].sqrt());
            }
        }
    }

    let standardized = resid.zip_map(&sigma, |r, s| r / s);
    let mut qq = Vec::with_capacity(n);
    let mut ks = Vec::with_capacity(n);
    let mut ks_raw = Vec::with_capacity(n);
    for i in 0..n {
        let col = ResidualReport::observed_column(&standardized, i);
        qq.push(qq_pairs(&col));
        ks.push(ks_normal(&col)?);
        ks_raw.push(ks_normal(&unit_scale(ResidualReport::observed_column(&resid, i)))?);
    }
    Ok(ResidualReport {
        residuals: resid,
        sigma,
        standardized,
        qq,
        ks,
        ks_raw,
    })
}
