use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::GarchParams;

/// Observation-error structure being fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationModel {
    /// CCC-GARCH(p, q) errors.
    Garch { p: usize, q: usize },
    /// Time-constant covariance `V` with an inverse-Wishart prior (standard DLM).
    Constant,
}

impl ObservationModel {
    pub fn name(&self) -> &'static str {
        match self {
            ObservationModel::Garch { .. } => "garch",
            ObservationModel::Constant => "standard",
        }
    }
}

/// State path and conditional standard deviations attached to one retained draw.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDraw {
    /// Index of the draw this path belongs to.
    pub draw: usize,
    /// `(T+1) × r` sampled states.
    pub states: DMatrix<f64>,
    /// `T × n` filtered standard deviations `√S²_{i,t}` at the drawn parameters.
    pub sigma: DMatrix<f64>,
    /// `T × n` standard deviations driven by the sampled errors `y_t − F'θ_t`.
    pub sigma_state: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockAcceptance {
    pub chain: usize,
    pub block: String,
    /// Acceptance rate over the retained (post-burn-in) iterations.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainFailure {
    pub chain: usize,
    pub message: String,
}

/// Retained posterior draws, possibly merged over several chains.
///
/// Per-draw vectors are aligned: entry `s` of `garch`, `corr`, `v`, `w`,
/// `loglik`, `imputed` and row `s` of `pointwise_lp` belong to the same draw.
/// `garch` and `corr` are empty for the standard model and `v` is empty for
/// the GARCH model.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub model: ObservationModel,
    pub n: usize,
    pub r: usize,
    pub t_len: usize,
    pub chain_id: Vec<usize>,
    pub iteration: Vec<usize>,
    pub garch: Vec<GarchParams>,
    /// Correlation matrices `R`.
    pub corr: Vec<DMatrix<f64>>,
    pub v: Vec<DMatrix<f64>>,
    pub w: Vec<DMatrix<f64>>,
    /// State-marginalized log-likelihood at each draw.
    pub loglik: Vec<f64>,
    /// `draws × T` pointwise log predictive densities.
    pub pointwise_lp: DMatrix<f64>,
    /// Imputed values of the missing cells, in `SeriesData::missing_cells` order.
    pub imputed: Vec<Vec<f64>>,
    pub paths: Vec<PathDraw>,
    pub acceptance_rates: Vec<BlockAcceptance>,
    pub failures: Vec<ChainFailure>,
}

impl PosteriorDraws {
    pub fn empty(model: ObservationModel, n: usize, r: usize, t_len: usize) -> Self {
        Self {
            model,
            n,
            r,
            t_len,
            chain_id: Vec::new(),
            iteration: Vec::new(),
            garch: Vec::new(),
            corr: Vec::new(),
            v: Vec::new(),
            w: Vec::new(),
            loglik: Vec::new(),
            pointwise_lp: DMatrix::zeros(0, t_len),
            imputed: Vec::new(),
            paths: Vec::new(),
            acceptance_rates: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.chain_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain_id.is_empty()
    }

    /// Concatenate chains in the given order.
    pub fn merge(parts: Vec<PosteriorDraws>) -> Result<Self> {
        let mut iter = parts.into_iter();
        let mut out = iter
            .next()
            .ok_or_else(|| Error::Insufficient("no chains to merge".into()))?;
        for part in iter {
            if (part.model, part.n, part.r, part.t_len) != (out.model, out.n, out.r, out.t_len) {
                return Err(Error::Dimension("chains disagree on model dimensions".into()));
            }
            let offset = out.len();
            let rows = out.len() + part.len();
            let mut lp = DMatrix::zeros(rows, out.t_len);
            lp.rows_mut(0, offset).copy_from(&out.pointwise_lp);
            lp.rows_mut(offset, part.len()).copy_from(&part.pointwise_lp);
            out.pointwise_lp = lp;
            out.chain_id.extend(part.chain_id);
            out.iteration.extend(part.iteration);
            out.garch.extend(part.garch);
            out.corr.extend(part.corr);
            out.v.extend(part.v);
            out.w.extend(part.w);
            out.loglik.extend(part.loglik);
            out.imputed.extend(part.imputed);
            out.paths.extend(part.paths.into_iter().map(|mut p| {
                p.draw += offset;
                p
            }));
            out.acceptance_rates.extend(part.acceptance_rates);
            out.failures.extend(part.failures);
        }
        Ok(out)
    }

    /// Named scalar parameters, one column per parameter.
    ///
    /// GARCH model: `alpha0[i]`, `alpha<j>[i]`, `beta<j>[i]`, then the
    /// correlation (`rho_obs` for two series, `R[i,j]` otherwise). Standard
    /// model: `V[i,j]` and derived `rho_obs`. Both: `W[i,j]` and derived
    /// `rho_s`. Indices are 1-based.
    pub fn scalar_parameters(&self) -> Vec<(String, Vec<f64>)> {
        let mut cols = Vec::new();
        let n = self.n;
        if let ObservationModel::Garch { p, q } = self.model {
            for i in 0..n {
                let name = i + 1;
                cols.push((format!("alpha0[{name}]"), self.garch.iter().map(|g| g.series(i).alpha0).collect()));
                for j in 0..p {
                    cols.push((
                        format!("alpha{}[{name}]", j + 1),
                        self.garch.iter().map(|g| g.series(i).alpha[j]).collect(),
                    ));
                }
                for j in 0..q {
                    cols.push((
                        format!("beta{}[{name}]", j + 1),
                        self.garch.iter().map(|g| g.series(i).beta[j]).collect(),
                    ));
                }
            }
            push_offdiag(&mut cols, &self.corr, "rho_obs", "R", |m, i, j| m[(i, j)]);
        } else {
            push_upper(&mut cols, &self.v, "V");
            push_offdiag(&mut cols, &self.v, "rho_obs", "rho_obs", correlation_entry);
        }
        push_upper(&mut cols, &self.w, "W");
        push_offdiag(&mut cols, &self.w, "rho_s", "rho_s", correlation_entry);
        cols
    }
}

fn correlation_entry(m: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    m[(i, j)] / (m[(i, i)] * m[(j, j)]).sqrt()
}

fn push_upper(cols: &mut Vec<(String, Vec<f64>)>, mats: &[DMatrix<f64>], label: &str) {
    let Some(first) = mats.first() else { return };
    let d = first.nrows();
    for i in 0..d {
        for j in i..d {
            cols.push((format!("{label}[{},{}]", i + 1, j + 1), mats.iter().map(|m| m[(i, j)]).collect()));
        }
    }
}

/// Off-diagonal entries; a 2×2 matrix yields a single column named `scalar`.
fn push_offdiag(
    cols: &mut Vec<(String, Vec<f64>)>,
    mats: &[DMatrix<f64>],
    scalar: &str,
    label: &str,
    entry: fn(&DMatrix<f64>, usize, usize) -> f64,
) {
    let Some(first) = mats.first() else { return };
    let d = first.nrows();
    if d == 2 {
        cols.push((scalar.to_string(), mats.iter().map(|m| entry(m, 0, 1)).collect()));
        return;
    }
    for i in 0..d {
        for j in (i + 1)..d {
            cols.push((format!("{label}[{},{}]", i + 1, j + 1), mats.iter().map(|m| entry(m, i, j)).collect()));
        }
    }
}

/// `ρ_s = W_ij / √(W_ii W_jj)` for every pair `i < j`, per draw.
pub fn derived_state_correlation(w_draws: &[DMatrix<f64>]) -> Result<Vec<Vec<f64>>> {
    let Some(first) = w_draws.first() else {
        return Ok(Vec::new());
    };
    let r = first.nrows();
    if r < 2 {
        return Err(Error::Dimension("state correlation needs r ≥ 2".into()));
    }
    Ok(w_draws
        .iter()
        .map(|w| {
            (0..r)
                .flat_map(|i| ((i + 1)..r).map(move |j| (i, j)))
                .map(|(i, j)| correlation_entry(w, i, j))
                .collect()
        })
        .collect())
}
