use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::is_spd;
use crate::model::{GarchParams, SeriesGarch};
use crate::sampling::{ObservationModel, PosteriorDraws};

/// Posterior summary of one scalar parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    /// Equal-tailed 95% interval.
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Linear-interpolation quantile of sorted values (`p` in [0, 1]).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize_values(name: &str, values: &[f64]) -> Result<ParameterSummary> {
    if values.is_empty() {
        return Err(Error::Insufficient(format!("no draws for `{name}`")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(ParameterSummary {
        name: name.to_string(),
        mean,
        median: quantile_sorted(&sorted, 0.5),
        sd,
        ci_lo: quantile_sorted(&sorted, 0.025),
        ci_hi: quantile_sorted(&sorted, 0.975),
    })
}

/// Summaries of every scalar parameter, including derived correlations.
pub fn summarize(draws: &PosteriorDraws) -> Result<Vec<ParameterSummary>> {
    if draws.is_empty() {
        return Err(Error::Insufficient("no posterior draws".into()));
    }
    draws
        .scalar_parameters()
        .iter()
        .map(|(name, v)| summarize_values(name, v))
        .collect()
}

/// Running means: `trace[k]` is the mean of the first `k + 1` values.
pub fn ergodic_means(values: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            sum += v;
            sum / (k + 1) as f64
        })
        .collect()
}

/// Parameter point estimates used for residual analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEstimate {
    pub model: ObservationModel,
    pub garch: Option<GarchParams>,
    /// Observation-error correlation (GARCH) or covariance `V` (standard).
    pub obs: DMatrix<f64>,
    pub w: DMatrix<f64>,
}

impl PointEstimate {
    /// Posterior medians, taken coordinate-wise from `summaries`. When the
    /// medians leave the parameter space (stationarity, positive
    /// definiteness) the posterior means of that block are used instead,
    /// which stay inside because the constraint sets are convex.
    pub fn from_summaries(model: ObservationModel, n: usize, r: usize, summaries: &[ParameterSummary]) -> Result<Self> {
        let get = |name: &str, median: bool| -> Result<f64> {
            summaries
                .iter()
                .find(|s| s.name == name)
                .map(|s| if median { s.median } else { s.mean })
                .ok_or_else(|| Error::Insufficient(format!("no summary for `{name}`")))
        };
        let sym = |label: &str, d: usize, median: bool| -> Result<DMatrix<f64>> {
            let mut m = DMatrix::zeros(d, d);
            for i in 0..d {
                for j in i..d {
                    let v = get(&format!("{label}[{},{}]", i + 1, j + 1), median)?;
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            Ok(m)
        };
        let corr = |median: bool| -> Result<DMatrix<f64>> {
            let mut m = DMatrix::identity(n, n);
            for i in 0..n {
                for j in (i + 1)..n {
                    let name = if n == 2 { "rho_obs".to_string() } else { format!("R[{},{}]", i + 1, j + 1) };
                    let v = get(&name, median)?;
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            Ok(m)
        };
        let spd_or_mean = |median: DMatrix<f64>, mean: DMatrix<f64>| if is_spd(&median) { median } else { mean };

        let w = spd_or_mean(sym("W", r, true)?, sym("W", r, false)?);
        match model {
            ObservationModel::Garch { p, q } => {
                let block = |i: usize, median: bool| -> Result<SeriesGarch> {
                    let k = i + 1;
                    let alpha0 = get(&format!("alpha0[{k}]"), median)?;
                    let alpha = (1..=p).map(|j| get(&format!("alpha{j}[{k}]"), median)).collect::<Result<_>>()?;
                    let beta = (1..=q).map(|j| get(&format!("beta{j}[{k}]"), median)).collect::<Result<_>>()?;
                    Ok(SeriesGarch::new(alpha0, alpha, beta))
                };
                let series = (0..n)
                    .map(|i| {
                        let med = block(i, true)?;
                        Ok(if med.is_valid() { med } else { block(i, false)? })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self {
                    model,
                    garch: Some(GarchParams::new(series)?),
                    obs: spd_or_mean(corr(true)?, corr(false)?),
                    w,
                })
            }
            ObservationModel::Constant => Ok(Self {
                model,
                garch: None,
                obs: spd_or_mean(sym("V", n, true)?, sym("V", n, false)?),
                w,
            }),
        }
    }
}

/// Pointwise mean and equal-tailed 95% band over a set of equally shaped paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBands {
    pub mean: DMatrix<f64>,
    pub median: DMatrix<f64>,
    pub lo: DMatrix<f64>,
    pub hi: DMatrix<f64>,
}

pub fn path_bands<'a>(paths: impl IntoIterator<Item = &'a DMatrix<f64>>) -> Result<PathBands> {
    let paths: Vec<&DMatrix<f64>> = paths.into_iter().collect();
    let first = paths.first().ok_or_else(|| Error::Insufficient("no stored paths".into()))?;
    let (rows, cols) = first.shape();
    if paths.iter().any(|p| p.shape() != (rows, cols)) {
        return Err(Error::Dimension("paths differ in shape".into()));
    }
    let mut out = PathBands {
        mean: DMatrix::zeros(rows, cols),
        median: DMatrix::zeros(rows, cols),
        lo: DMatrix::zeros(rows, cols),
        hi: DMatrix::zeros(rows, cols),
    };
    let mut buf = vec![0.0; paths.len()];
    for i in 0..rows {
        for j in 0..cols {
            for (b, p) in buf.iter_mut().zip(&paths) {
                *b = p[(i, j)];
            }
            out.mean[(i, j)] = buf.iter().sum::<f64>() / buf.len() as f64;
            buf.sort_by(f64::total_cmp);
            out.median[(i, j)] = quantile_sorted(&buf, 0.5);
            out.lo[(i, j)] = quantile_sorted(&buf, 0.025);
            out.hi[(i, j)] = quantile_sorted(&buf, 0.975);
        }
    }
    Ok(out)
}

/// Which standard-deviation path to summarize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaSource {
    /// `σ_{i,t}` recomputed from the sampled errors `y_t − F'θ_t` of each draw.
    Sampled,
    /// The filter's `√S²_{i,t}` at each draw's parameters.
    Filtered,
}

/// Posterior mean and 95% band of `σ_{i,t}` (`T × n`).
pub fn dynamic_variance_path(draws: &PosteriorDraws, source: SigmaSource) -> Result<PathBands> {
    path_bands(draws.paths.iter().map(|p| match source {
        SigmaSource::Sampled => &p.sigma_state,
        SigmaSource::Filtered => &p.sigma,
    }))
}

/// Posterior mean and 95% band of the states (`(T+1) × r`).
pub fn state_bands(draws: &PosteriorDraws) -> Result<PathBands> {
    path_bands(draws.paths.iter().map(|p| &p.states))
}
