use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Above this persistence the pre-sample variance falls back to `alpha0`.
const PERSISTENCE_FALLBACK: f64 = 0.999;

/// GARCH(p, q) coefficients of one series:
/// `σ²_t = α₀ + Σ αⱼ z²_{t-j} + Σ βⱼ σ²_{t-j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesGarch {
    pub alpha0: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl SeriesGarch {
    pub fn new(alpha0: f64, alpha: Vec<f64>, beta: Vec<f64>) -> Self {
        Self {
            alpha0,
            alpha,
            beta,
        }
    }

    /// Constant variance `alpha0` with zero ARCH/GARCH loadings of order (p, q).
    pub fn homoskedastic(alpha0: f64, p: usize, q: usize) -> Self {
        Self::new(alpha0, vec![0.0; p], vec![0.0; q])
    }

    pub fn persistence(&self) -> f64 {
        self.alpha.iter().sum::<f64>() + self.beta.iter().sum::<f64>()
    }

    pub fn is_valid(&self) -> bool {
        self.alpha0.is_finite()
            && self.alpha0 > 0.0
            && self
                .alpha
                .iter()
                .chain(self.beta.iter())
                .all(|v| v.is_finite() && *v >= 0.0)
            && self.persistence() < 1.0
    }

    /// Pre-sample variance: `α₀ / (1 − Σα − Σβ)`, or `α₀` near the
    /// non-stationary boundary.
    pub fn unconditional_variance(&self) -> f64 {
        let s = self.persistence();
        if s > PERSISTENCE_FALLBACK {
            self.alpha0
        } else {
            self.alpha0 / (1.0 - s)
        }
    }

    /// Flat parameter vector `(α₀, α₁..α_p, β₁..β_q)`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(1 + self.alpha.len() + self.beta.len());
        v.push(self.alpha0);
        v.extend_from_slice(&self.alpha);
        v.extend_from_slice(&self.beta);
        v
    }

    pub fn from_slice(v: &[f64], p: usize, q: usize) -> Self {
        debug_assert_eq!(v.len(), 1 + p + q);
        Self::new(v[0], v[1..1 + p].to_vec(), v[1 + p..].to_vec())
    }
}

/// Per-series GARCH coefficients with common orders `(p, q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GarchParams {
    series: Vec<SeriesGarch>,
    p: usize,
    q: usize,
}

impl GarchParams {
    pub fn new(series: Vec<SeriesGarch>) -> Result<Self> {
        let first = series
            .first()
            .ok_or_else(|| Error::param("garch", "need at least one series"))?;
        let (p, q) = (first.alpha.len(), first.beta.len());
        for (i, s) in series.iter().enumerate() {
            if s.alpha.len() != p || s.beta.len() != q {
                return Err(Error::Dimension(format!(
                    "series {} has GARCH orders ({}, {}), expected ({p}, {q})",
                    i + 1,
                    s.alpha.len(),
                    s.beta.len()
                )));
            }
            if !(s.alpha0.is_finite() && s.alpha0 > 0.0) {
                return Err(Error::param(
                    format!("alpha0[{}]", i + 1),
                    "must be positive",
                ));
            }
            if s.alpha.iter().chain(s.beta.iter()).any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::param(
                    format!("garch[{}]", i + 1),
                    "ARCH/GARCH loadings must be nonnegative",
                ));
            }
            if s.persistence() >= 1.0 {
                return Err(Error::param(
                    format!("garch[{}]", i + 1),
                    format!("stationarity requires Σα+Σβ < 1, got {}", s.persistence()),
                ));
            }
        }
        Ok(Self { series, p, q })
    }

    /// GARCH(1,1) from per-series vectors.
    pub fn garch11(alpha0: &[f64], alpha1: &[f64], beta1: &[f64]) -> Result<Self> {
        if alpha0.len() != alpha1.len() || alpha0.len() != beta1.len() {
            return Err(Error::Dimension("alpha0/alpha1/beta1 lengths differ".into()));
        }
        Self::new(
            alpha0
                .iter()
                .zip(alpha1)
                .zip(beta1)
                .map(|((&a0, &a1), &b1)| SeriesGarch::new(a0, vec![a1], vec![b1]))
                .collect(),
        )
    }

    /// All loadings zero: the model collapses to a standard DLM.
    pub fn homoskedastic(alpha0: &[f64], p: usize, q: usize) -> Result<Self> {
        Self::new(
            alpha0
                .iter()
                .map(|&a| SeriesGarch::homoskedastic(a, p, q))
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.series.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn series(&self, i: usize) -> &SeriesGarch {
        &self.series[i]
    }

    pub fn all(&self) -> &[SeriesGarch] {
        &self.series
    }

    /// Replace one series' coefficients, re-checking constraints.
    pub fn with_series(&self, i: usize, s: SeriesGarch) -> Result<Self> {
        let mut series = self.series.clone();
        series[i] = s;
        Self::new(series)
    }

    pub fn lag_depth(&self) -> usize {
        self.p.max(self.q)
    }

    pub fn step(&self, i: usize, lagged_z2: &[f64], lagged_sigma2: &[f64]) -> Result<f64> {
        garch_variance_step(self, i, lagged_z2, lagged_sigma2)
    }

    /// Unchecked recursion used inside the filter and simulator; inputs are
    /// already known to be valid.
    pub(crate) fn step_unchecked(&self, i: usize, z2: impl Fn(usize) -> f64, s2: impl Fn(usize) -> f64) -> f64 {
        let s = &self.series[i];
        let mut v = s.alpha0;
        for (j, a) in s.alpha.iter().enumerate() {
            v += a * z2(j + 1);
        }
        for (j, b) in s.beta.iter().enumerate() {
            v += b * s2(j + 1);
        }
        v
    }
}

/// One step of the variance recursion for series `i`; `lagged_z2[j-1]` holds
/// `z²_{t-j}` and `lagged_sigma2[j-1]` holds `σ²_{t-j}`.
pub fn garch_variance_step(
    params: &GarchParams,
    i: usize,
    lagged_z2: &[f64],
    lagged_sigma2: &[f64],
) -> Result<f64> {
    if i >= params.n() {
        return Err(Error::Dimension(format!("series index {i} out of range")));
    }
    if lagged_z2.len() != params.p() || lagged_sigma2.len() != params.q() {
        return Err(Error::Dimension(format!(
            "expected {} squared-error lags and {} variance lags",
            params.p(),
            params.q()
        )));
    }
    if params.series(i).alpha0 <= 0.0 {
        return Err(Error::param("alpha0", "must be positive"));
    }
    if lagged_z2
        .iter()
        .chain(lagged_sigma2)
        .any(|v| !(v.is_finite() && *v >= 0.0))
    {
        return Err(Error::param("lags", "lagged inputs must be nonnegative"));
    }
    Ok(params.step_unchecked(i, |j| lagged_z2[j - 1], |j| lagged_sigma2[j - 1]))
}

/// `V = D R D` with `D = diag(sigma)`.
pub fn build_observation_cov(sigma: &DVector<f64>, corr: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = sigma.len();
    if corr.shape() != (n, n) {
        return Err(Error::Dimension(format!("R must be {n}×{n}")));
    }
    if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::param("sigma", "standard deviations must be positive"));
    }
    Ok(scale_by_sd(corr, sigma.as_slice()))
}

pub(crate) fn scale_by_sd(corr: &DMatrix<f64>, sd: &[f64]) -> DMatrix<f64> {
    let n = sd.len();
    DMatrix::from_fn(n, n, |i, j| sd[i] * sd[j] * corr[(i, j)])
}
