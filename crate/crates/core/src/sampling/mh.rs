use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::filter::{filter_likelihood, ObservationNoise};
use crate::model::{CorrelationFactor, GarchParams, ModelSpec, SeriesData, SeriesGarch, StateCov};

use super::priors::{log_half_cauchy, log_normal_kernel, PriorSpec};
use super::proposal::AdaptiveProposal;

/// Data, structure and state covariance held fixed during an MH block update.
#[derive(Debug, Clone, Copy)]
pub struct Target<'a> {
    pub data: &'a SeriesData,
    pub spec: &'a ModelSpec,
    pub w: &'a StateCov,
}

impl Target<'_> {
    /// State-marginalized log-likelihood. A numerically singular forecast
    /// covariance yields `-∞`.
    pub fn log_likelihood(&self, garch: &GarchParams, corr: &DMatrix<f64>) -> Result<f64> {
        match filter_likelihood(
            self.data,
            self.spec,
            ObservationNoise::Garch { params: garch, corr },
            self.w,
        ) {
            Ok(out) => Ok(out.loglik),
            Err(Error::SingularForecast { .. }) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MhOutcome<T> {
    pub value: T,
    pub loglik: f64,
    pub accepted: bool,
}

/// Parameterization of the constant correlation matrix being sampled.
#[derive(Debug, Clone, PartialEq)]
pub enum CorrParam {
    /// Nothing to sample (single series).
    Fixed(usize),
    /// Bivariate `ρ` with a uniform prior on (−1, 1).
    Rho(f64),
    /// Upper-triangular `U` with unit-norm rows; the last row is `(0, …, 0, 1)`.
    Factor(DMatrix<f64>),
}

impl CorrParam {
    pub fn n(&self) -> usize {
        match self {
            CorrParam::Fixed(n) => *n,
            CorrParam::Rho(_) => 2,
            CorrParam::Factor(u) => u.nrows(),
        }
    }

    /// Sampled coordinates: `ρ`, or the upper triangle of `U` above the last
    /// row in row-major order.
    pub fn free(&self) -> Vec<f64> {
        match self {
            CorrParam::Fixed(_) => Vec::new(),
            CorrParam::Rho(r) => vec![*r],
            CorrParam::Factor(u) => {
                let n = u.nrows();
                (0..n.saturating_sub(1))
                    .flat_map(|i| (i..n).map(move |j| (i, j)))
                    .map(|(i, j)| u[(i, j)])
                    .collect()
            }
        }
    }

    pub fn with_free(&self, v: &[f64]) -> Self {
        match self {
            CorrParam::Fixed(n) => CorrParam::Fixed(*n),
            CorrParam::Rho(_) => CorrParam::Rho(v[0]),
            CorrParam::Factor(u) => {
                let n = u.nrows();
                let mut out = u.clone();
                let mut k = 0;
                for i in 0..n.saturating_sub(1) {
                    for j in i..n {
                        out[(i, j)] = v[k];
                        k += 1;
                    }
                }
                CorrParam::Factor(out)
            }
        }
    }

    /// Rows of a factor rescaled to unit norm; `None` if a diagonal entry is
    /// not positive.
    pub fn normalized(&self) -> Option<Self> {
        match self {
            CorrParam::Factor(u) => CorrelationFactor::normalize(u)
                .ok()
                .map(|f| CorrParam::Factor(f.factor().clone())),
            other => Some(other.clone()),
        }
    }

    /// Log prior up to a constant; `-∞` outside the support.
    pub fn log_prior(&self, prior: &PriorSpec) -> f64 {
        match self {
            CorrParam::Fixed(_) => 0.0,
            CorrParam::Rho(r) => {
                if *r > -1.0 && *r < 1.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            CorrParam::Factor(u) => {
                let n = u.nrows();
                let mut lp = 0.0;
                for i in 0..n.saturating_sub(1) {
                    if !(u[(i, i)] > 0.0) {
                        return f64::NEG_INFINITY;
                    }
                    lp += log_half_cauchy(u[(i, i)], prior.cauchy_scale_udiag);
                    for j in (i + 1)..n {
                        lp += log_normal_kernel(u[(i, j)], prior.normal_sd_uoffdiag);
                    }
                }
                lp
            }
        }
    }

    /// Correlation matrix, or `None` outside the support.
    pub fn correlation(&self) -> Option<DMatrix<f64>> {
        match self {
            CorrParam::Fixed(n) => Some(DMatrix::identity(*n, *n)),
            CorrParam::Rho(r) => {
                (*r > -1.0 && *r < 1.0).then(|| DMatrix::from_row_slice(2, 2, &[1.0, *r, *r, 1.0]))
            }
            CorrParam::Factor(u) => CorrelationFactor::normalize(u).ok().map(|f| f.correlation()),
        }
    }
}

fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio.is_nan() {
        return false;
    }
    log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio
}

/// Random-walk Metropolis–Hastings update of the GARCH coefficients of one
/// series on the state-marginalized posterior. Proposals outside the
/// constraint set are rejected without evaluating the likelihood.
#[allow(clippy::too_many_arguments)]
pub fn mh_update_garch<R: Rng + ?Sized>(
    target: &Target<'_>,
    garch: &GarchParams,
    corr: &DMatrix<f64>,
    current_loglik: f64,
    series: usize,
    prior: &PriorSpec,
    proposal: &AdaptiveProposal,
    rng: &mut R,
) -> Result<MhOutcome<GarchParams>> {
    let current = garch.series(series);
    let x = current.to_vec();
    if proposal.dim() != x.len() {
        return Err(Error::Dimension("proposal dimension does not match GARCH block".into()));
    }
    let y = proposal.propose(&x, rng);
    let cand = SeriesGarch::from_slice(&y, garch.p(), garch.q());
    let lp_cand = prior.log_garch(&cand);
    let reject = MhOutcome {
        value: garch.clone(),
        loglik: current_loglik,
        accepted: false,
    };
    if lp_cand == f64::NEG_INFINITY {
        return Ok(reject);
    }
    let proposed = garch.with_series(series, cand)?;
    let ll = target.log_likelihood(&proposed, corr)?;
    let ratio = ll + lp_cand - current_loglik - prior.log_garch(current);
    Ok(if accept(ratio, rng) {
        MhOutcome {
            value: proposed,
            loglik: ll,
            accepted: true,
        }
    } else {
        reject
    })
}

/// Random-walk Metropolis–Hastings update of the correlation block.
///
/// For a factor the chain state has unit-norm rows: a proposal adds a step
/// to the free entries and rescales each row back to unit norm. With an
/// isotropic step (a scale-only [`AdaptiveProposal`]) the projected proposal
/// density depends only on the angle between old and new rows, so it is
/// symmetric and cancels from the ratio. The prior is the unnormalized-`U`
/// density evaluated at the unit rows.
#[allow(clippy::too_many_arguments)]
pub fn mh_update_correlation<R: Rng + ?Sized>(
    target: &Target<'_>,
    garch: &GarchParams,
    current: &CorrParam,
    current_loglik: f64,
    prior: &PriorSpec,
    proposal: &AdaptiveProposal,
    rng: &mut R,
) -> Result<MhOutcome<CorrParam>> {
    let reject = MhOutcome {
        value: current.clone(),
        loglik: current_loglik,
        accepted: false,
    };
    let x = current.free();
    if x.is_empty() {
        return Ok(reject);
    }
    if proposal.dim() != x.len() {
        return Err(Error::Dimension("proposal dimension does not match correlation block".into()));
    }
    let Some(cand) = current.with_free(&proposal.propose(&x, rng)).normalized() else {
        return Ok(reject);
    };
    let lp_cand = cand.log_prior(prior);
    let r = match cand.correlation() {
        Some(r) if lp_cand.is_finite() => r,
        _ => return Ok(reject),
    };
    let ll = target.log_likelihood(garch, &r)?;
    let ratio = ll + lp_cand - current_loglik - current.log_prior(prior);
    Ok(if accept(ratio, rng) {
        MhOutcome {
            value: cand,
            loglik: ll,
            accepted: true,
        }
    } else {
        reject
    })
}

/// Log inverse-Wishart density of `w` up to a constant.
pub fn log_inverse_wishart(w: &DMatrix<f64>, df: f64, scale: &DMatrix<f64>) -> f64 {
    let r = w.nrows() as f64;
    let Some(chol) = w.clone().cholesky() else {
        return f64::NEG_INFINITY;
    };
    let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let trace = chol.solve(scale).trace();
    -0.5 * (df + r + 1.0) * logdet - 0.5 * trace
}

/// Metropolis–Hastings rescaling `W' = D W D` with `log D` drawn from the
/// random-walk `proposal` (centred at `log diag(W)`), targeting the
/// state-marginalized posterior of `W`. The move keeps the correlation
/// structure of `W`; its Jacobian is `Π dᵢ^{r+1}`.
///
/// `loglik` returns the marginal log-likelihood at a candidate; `-∞`
/// rejects.
pub fn mh_update_state_scale<R: Rng + ?Sized>(
    loglik: impl Fn(&StateCov) -> Result<f64>,
    w: &StateCov,
    current_loglik: f64,
    df: f64,
    scale: &DMatrix<f64>,
    proposal: &AdaptiveProposal,
    rng: &mut R,
) -> Result<MhOutcome<StateCov>> {
    let wm = w.matrix();
    let r = wm.nrows();
    if proposal.dim() != r {
        return Err(Error::Dimension("proposal dimension does not match W".into()));
    }
    let x: Vec<f64> = (0..r).map(|i| wm[(i, i)].ln()).collect();
    let y = proposal.propose(&x, rng);
    let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (b - a).exp()).collect();
    let cand = DMatrix::from_fn(r, r, |i, j| d[i] * wm[(i, j)] * d[j]);
    let reject = MhOutcome {
        value: w.clone(),
        loglik: current_loglik,
        accepted: false,
    };
    let Ok(cand) = StateCov::new(cand) else {
        return Ok(reject);
    };
    let ll = loglik(&cand)?;
    let log_jac: f64 = (r as f64 + 1.0) * x.iter().zip(&y).map(|(a, b)| b - a).sum::<f64>();
    let ratio = ll + log_inverse_wishart(cand.matrix(), df, scale) - current_loglik
        - log_inverse_wishart(wm, df, scale)
        + log_jac;
    Ok(if accept(ratio, rng) {
        MhOutcome {
            value: cand,
            loglik: ll,
            accepted: true,
        }
    } else {
        reject
    })
}
