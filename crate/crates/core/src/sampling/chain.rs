use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filter::{filter, filter_likelihood, FilterOutput, ObservationNoise};
use crate::model::{GarchParams, ModelSpec, SeriesData, StateCov};

use super::draws::{BlockAcceptance, ChainFailure, ObservationModel, PathDraw, PosteriorDraws};
use super::ffbs::BackwardSampler;
use super::impute::{impute_missing, state_sigma_path};
use super::mh::{mh_update_correlation, mh_update_garch, mh_update_state_scale, CorrParam, Target};
use super::priors::PriorSpec;
use super::proposal::AdaptiveProposal;
use super::wishart::{completed_observations, inverse_wishart, sample_v_conjugate, sample_w_conjugate};

/// MCMC run settings. Defaults: 4 chains, burn-in 20 000, thin 50,
/// 8 000 retained draws in total.
#[derive(Debug, Clone, PartialEq)]
pub struct McmcConfig {
    pub n_chains: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Retained draws summed over chains; the remainder of an uneven split
    /// goes to the lowest-numbered chains.
    pub n_keep: usize,
    /// Initial random-walk step for `α₀`.
    pub proposal_sd_alpha0: f64,
    /// Initial random-walk step for ARCH/GARCH loadings.
    pub proposal_sd_loadings: f64,
    /// Initial random-walk step for correlation parameters.
    pub proposal_sd_corr: f64,
    /// Initial random-walk step for the log-scale rescaling of `W`.
    pub proposal_sd_w: f64,
    /// Tune proposals during burn-in.
    pub adapt: bool,
    pub seed: u64,
    /// Upper bound on the number of draws that keep their state and
    /// standard-deviation paths.
    pub path_draws: usize,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            n_chains: 4,
            burn_in: 20_000,
            thin: 50,
            n_keep: 8_000,
            proposal_sd_alpha0: 0.2,
            proposal_sd_loadings: 0.05,
            proposal_sd_corr: 0.05,
            proposal_sd_w: 0.1,
            adapt: true,
            seed: 1,
            path_draws: 1_000,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 {
            return Err(Error::param("mcmc.n_chains", "must be at least 1"));
        }
        if self.thin == 0 {
            return Err(Error::param("mcmc.thin", "must be at least 1"));
        }
        for (name, v) in [
            ("mcmc.proposal_sd_alpha0", self.proposal_sd_alpha0),
            ("mcmc.proposal_sd_loadings", self.proposal_sd_loadings),
            ("mcmc.proposal_sd_corr", self.proposal_sd_corr),
            ("mcmc.proposal_sd_w", self.proposal_sd_w),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, "must be positive"));
            }
        }
        Ok(())
    }

    /// Retained draws for chain `chain`.
    pub fn keep_for_chain(&self, chain: usize) -> usize {
        let base = self.n_keep / self.n_chains;
        base + usize::from(chain < self.n_keep % self.n_chains)
    }

    /// Total iterations run by chain `chain`.
    pub fn iterations_for_chain(&self, chain: usize) -> usize {
        self.burn_in + self.keep_for_chain(chain) * self.thin
    }
}

/// Everything a chain needs besides its index.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub data: &'a SeriesData,
    pub spec: &'a ModelSpec,
    pub model: ObservationModel,
    pub prior: &'a PriorSpec,
    pub config: &'a McmcConfig,
}

impl Problem<'_> {
    fn validate(&self) -> Result<()> {
        let (n, r) = (self.spec.n(), self.spec.r());
        if self.data.n() != n {
            return Err(Error::Dimension(format!(
                "data has {} series, model expects {n}",
                self.data.n()
            )));
        }
        if let ObservationModel::Garch { p, q } = self.model {
            if p + q == 0 {
                return Err(Error::param("garch", "p + q must be positive"));
            }
        }
        self.prior.validate(n, r)?;
        self.config.validate()
    }
}

/// Random stream for chain `chain` under master seed `seed`.
pub fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

/// Run chain number `chain`. The result is a deterministic function of
/// `(problem, chain)`.
///
/// A failure partway through is reported in [`PosteriorDraws::failures`]
/// with the draws retained before it; invalid inputs return `Err`.
pub fn run_chain(problem: &Problem<'_>, chain: usize) -> Result<PosteriorDraws> {
    problem.validate()?;
    let mut runner = ChainRunner::new(problem, chain)?;
    if let Err(e) = runner.run() {
        runner.out.failures.push(ChainFailure {
            chain,
            message: e.to_string(),
        });
    }
    runner.finish()
}

/// Run all chains (in parallel when threads are available) and merge them in
/// chain order. Fails only if every chain fails before retaining a draw.
pub fn run_chains_parallel(problem: &Problem<'_>) -> Result<PosteriorDraws> {
    problem.validate()?;
    let parts: Vec<PosteriorDraws> = (0..problem.config.n_chains)
        .into_par_iter()
        .map(|c| run_chain(problem, c))
        .collect::<Result<_>>()?;
    let merged = PosteriorDraws::merge(parts)?;
    if merged.failures.len() == problem.config.n_chains && merged.is_empty() && problem.config.n_keep > 0 {
        let msgs: Vec<String> = merged.failures.iter().map(|f| f.message.clone()).collect();
        return Err(Error::Numerical(format!("all chains failed: {}", msgs.join("; "))));
    }
    Ok(merged)
}

struct ChainRunner<'a> {
    p: Problem<'a>,
    chain: usize,
    rng: ChaCha8Rng,
    garch: Option<GarchParams>,
    corr: CorrParam,
    corr_matrix: DMatrix<f64>,
    v: Option<DMatrix<f64>>,
    w: StateCov,
    loglik: f64,
    garch_props: Vec<AdaptiveProposal>,
    corr_prop: Option<AdaptiveProposal>,
    w_prop: AdaptiveProposal,
    keep: usize,
    path_stride: usize,
    /// Row-major pointwise log predictive densities of retained draws.
    lp_rows: Vec<f64>,
    out: PosteriorDraws,
}

impl<'a> ChainRunner<'a> {
    fn new(p: &Problem<'a>, chain: usize) -> Result<Self> {
        let (n, r) = (p.spec.n(), p.spec.r());
        let mut rng = chain_rng(p.config.seed, chain);
        let keep = p.config.keep_for_chain(chain);
        let per_chain_paths = p.config.path_draws.div_ceil(p.config.n_chains);
        let path_stride = if per_chain_paths == 0 {
            usize::MAX
        } else {
            keep.div_ceil(per_chain_paths).max(1)
        };
        let out = PosteriorDraws::empty(p.model, n, r, p.data.len());

        let mut runner = match p.model {
            ObservationModel::Garch { p: ap, q: bq } => {
                let corr = if n == 1 {
                    CorrParam::Fixed(1)
                } else if n == 2 && p.prior.rho_uniform {
                    CorrParam::Rho(rng.random_range(-0.9..0.9))
                } else {
                    CorrParam::Factor(p.prior.draw_factor(n, &mut rng))
                        .normalized()
                        .expect("drawn factor has a positive diagonal")
                };
                let garch = p.prior.draw_garch(n, ap, bq, &mut rng);
                let w = StateCov::new(inverse_wishart(p.prior.iw_df, &p.prior.iw_scale, &mut rng)?)?;
                let mut sd = vec![p.config.proposal_sd_alpha0];
                sd.extend(std::iter::repeat_n(p.config.proposal_sd_loadings, ap + bq));
                let free = corr.free().len();
                let corr_prop = (free > 0).then(|| match corr {
                    CorrParam::Factor(_) => AdaptiveProposal::scale_only(&vec![p.config.proposal_sd_corr; free]),
                    _ => AdaptiveProposal::new(&vec![p.config.proposal_sd_corr; free]),
                });
                Self {
                    p: *p,
                    chain,
                    rng,
                    garch: Some(garch),
                    corr_matrix: corr.correlation().expect("initial correlation is valid"),
                    corr,
                    v: None,
                    w,
                    loglik: f64::NEG_INFINITY,
                    garch_props: (0..n).map(|_| AdaptiveProposal::new(&sd)).collect(),
                    corr_prop,
                    w_prop: AdaptiveProposal::new(&vec![p.config.proposal_sd_w; r]),
                    keep,
                    path_stride,
                    lp_rows: Vec::new(),
                    out,
                }
            }
            ObservationModel::Constant => {
                let v = inverse_wishart(p.prior.iw_df, &p.prior.iw_obs_scale, &mut rng)?;
                let w = StateCov::new(inverse_wishart(p.prior.iw_df, &p.prior.iw_scale, &mut rng)?)?;
                Self {
                    p: *p,
                    chain,
                    rng,
                    garch: None,
                    corr: CorrParam::Fixed(n),
                    corr_matrix: DMatrix::identity(n, n),
                    v: Some(v),
                    w,
                    loglik: f64::NEG_INFINITY,
                    garch_props: Vec::new(),
                    corr_prop: None,
                    w_prop: AdaptiveProposal::new(&vec![p.config.proposal_sd_w; r]),
                    keep,
                    path_stride,
                    lp_rows: Vec::new(),
                    out,
                }
            }
        };
        if !p.config.adapt {
            runner.freeze();
        }
        Ok(runner)
    }

    fn noise(&self) -> ObservationNoise<'_> {
        match (&self.garch, &self.v) {
            (Some(g), _) => ObservationNoise::Garch {
                params: g,
                corr: &self.corr_matrix,
            },
            (None, Some(v)) => ObservationNoise::Constant(v),
            (None, None) => unreachable!("one observation model is always set"),
        }
    }

    fn freeze(&mut self) {
        for prop in self.garch_props.iter_mut().chain(self.corr_prop.as_mut()) {
            prop.freeze();
        }
        self.w_prop.freeze();
    }

    fn fail(&self, iteration: usize, block: &str, source: Error) -> Error {
        Error::Chain {
            chain: self.chain,
            iteration,
            block: block.to_string(),
            source: Box::new(source),
        }
    }

    fn run(&mut self) -> Result<()> {
        let total = self.p.config.burn_in + self.keep * self.p.config.thin;
        if total == 0 {
            return Ok(());
        }
        let mut current = filter(self.p.data, self.p.spec, self.noise(), &self.w)
            .map_err(|e| self.fail(0, "initialization", e))?;
        self.loglik = current.loglik;

        for it in 0..total {
            if it == self.p.config.burn_in {
                self.freeze();
            }
            if self.p.config.adapt && it == self.p.config.burn_in / 2 {
                for prop in self.garch_props.iter_mut().chain(self.corr_prop.as_mut()) {
                    prop.restart_estimate();
                }
                self.w_prop.restart_estimate();
            }
            if self.garch.is_some() {
                self.update_garch_blocks(it)?;
            }
            let moved = self.update_state_scale(it)?;
            if self.garch.is_some() || moved {
                current = filter(self.p.data, self.p.spec, self.noise(), &self.w)
                    .map_err(|e| self.fail(it, "filter", e))?;
            }

            let states = BackwardSampler::new(&current, self.p.spec)
                .map_err(|e| self.fail(it, "ffbs", e))?
                .draw(&mut self.rng);
            let imputed = if self.p.data.missing_cells().is_empty() {
                Vec::new()
            } else {
                impute_missing(&states, self.p.spec, &current.s2, &self.noise_corr(), self.p.data, &mut self.rng)
                    .map_err(|e| self.fail(it, "impute", e))?
            };
            if self.v.is_some() {
                let y = completed_observations(self.p.data, &imputed);
                let v = sample_v_conjugate(
                    &states,
                    &y,
                    self.p.spec,
                    self.p.prior.iw_df,
                    &self.p.prior.iw_obs_scale,
                    &mut self.rng,
                )
                .map_err(|e| self.fail(it, "V", e))?;
                self.v = Some(v);
            }
            self.w = sample_w_conjugate(&states, self.p.spec, self.p.prior.iw_df, &self.p.prior.iw_scale, &mut self.rng)
                .map_err(|e| self.fail(it, "W", e))?;

            let record = it >= self.p.config.burn_in && (it - self.p.config.burn_in + 1).is_multiple_of(self.p.config.thin);
            // The standard model reuses this pass for the next FFBS step.
            current = if self.garch.is_some() {
                filter_likelihood(self.p.data, self.p.spec, self.noise(), &self.w)
            } else {
                filter(self.p.data, self.p.spec, self.noise(), &self.w)
            }
            .map_err(|e| self.fail(it, "filter", e))?;
            self.loglik = current.loglik;

            if record {
                self.record(it, &current, states, imputed)?;
            }
        }
        Ok(())
    }

    /// Correlation of the current observation covariance.
    fn noise_corr(&self) -> DMatrix<f64> {
        match &self.v {
            Some(v) => {
                let n = v.nrows();
                DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { v[(i, j)] / (v[(i, i)] * v[(j, j)]).sqrt() })
            }
            None => self.corr_matrix.clone(),
        }
    }

    fn update_garch_blocks(&mut self, it: usize) -> Result<()> {
        let n = self.p.spec.n();
        for i in 0..n {
            let target = Target {
                data: self.p.data,
                spec: self.p.spec,
                w: &self.w,
            };
            let garch = self.garch.as_ref().expect("GARCH model");
            let outcome = mh_update_garch(
                &target,
                garch,
                &self.corr_matrix,
                self.loglik,
                i,
                self.p.prior,
                &self.garch_props[i],
                &mut self.rng,
            )
            .map_err(|e| self.fail(it, &format!("garch[{}]", i + 1), e))?;
            self.garch_props[i].update(&outcome.value.series(i).to_vec(), outcome.accepted);
            self.garch = Some(outcome.value);
            self.loglik = outcome.loglik;
        }
        if let Some(prop) = &self.corr_prop {
            let target = Target {
                data: self.p.data,
                spec: self.p.spec,
                w: &self.w,
            };
            let garch = self.garch.as_ref().expect("GARCH model");
            let outcome =
                mh_update_correlation(&target, garch, &self.corr, self.loglik, self.p.prior, prop, &mut self.rng)
                    .map_err(|e| self.fail(it, "correlation", e))?;
            let accepted = outcome.accepted;
            if accepted {
                self.corr_matrix = outcome.value.correlation().expect("accepted correlation is valid");
            }
            self.corr = outcome.value;
            self.loglik = outcome.loglik;
            let free = self.corr.free();
            self.corr_prop.as_mut().expect("checked above").update(&free, accepted);
        }
        Ok(())
    }

    /// Marginal rescaling move on `W`; returns whether it was accepted.
    fn update_state_scale(&mut self, it: usize) -> Result<bool> {
        let (garch, v, corr) = (self.garch.clone(), self.v.clone(), self.corr_matrix.clone());
        let noise = match (&garch, &v) {
            (Some(g), _) => ObservationNoise::Garch { params: g, corr: &corr },
            (None, Some(v)) => ObservationNoise::Constant(v),
            (None, None) => unreachable!("one observation model is always set"),
        };
        let loglik = |w: &StateCov| match filter_likelihood(self.p.data, self.p.spec, noise, w) {
            Ok(out) => Ok(out.loglik),
            Err(Error::SingularForecast { .. }) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        };
        let outcome = mh_update_state_scale(
            loglik,
            &self.w,
            self.loglik,
            self.p.prior.iw_df,
            &self.p.prior.iw_scale,
            &self.w_prop,
            &mut self.rng,
        )
        .map_err(|e| self.fail(it, "W-scale", e))?;
        let accepted = outcome.accepted;
        self.w = outcome.value;
        self.loglik = outcome.loglik;
        let x: Vec<f64> = (0..self.w.dim()).map(|i| self.w.matrix()[(i, i)].ln()).collect();
        self.w_prop.update(&x, accepted);
        Ok(accepted)
    }

    fn record(&mut self, it: usize, current: &FilterOutput, states: DMatrix<f64>, imputed: Vec<f64>) -> Result<()> {
        let index = self.out.len();
        let kept_in_chain = index;
        self.out.chain_id.push(self.chain);
        self.out.iteration.push(it + 1);
        if let Some(g) = &self.garch {
            debug_assert!(g.all().iter().all(|s| s.is_valid()));
            self.out.garch.push(g.clone());
            self.out.corr.push(self.corr_matrix.clone());
        }
        if let Some(v) = &self.v {
            self.out.v.push(v.clone());
        }
        self.out.w.push(self.w.matrix().clone());
        self.out.loglik.push(current.loglik);
        self.out.imputed.push(imputed.clone());
        self.lp_rows.extend_from_slice(&current.pointwise);

        if kept_in_chain.is_multiple_of(self.path_stride) {
            let sigma = current.s2.map(f64::sqrt);
            let sigma_state = match &self.garch {
                Some(g) => {
                    let y = completed_observations(self.p.data, &imputed);
                    state_sigma_path(g, &states, &y, self.p.spec)?
                }
                None => sigma.clone(),
            };
            self.out.paths.push(PathDraw {
                draw: index,
                states,
                sigma,
                sigma_state,
            });
        }
        Ok(())
    }

    fn finish(mut self) -> Result<PosteriorDraws> {
        self.out.pointwise_lp = DMatrix::from_row_slice(self.out.len(), self.out.t_len, &self.lp_rows);
        let mut names = Vec::new();
        for i in 0..self.garch_props.len() {
            names.push((format!("garch[{}]", i + 1), &self.garch_props[i]));
        }
        if let Some(prop) = &self.corr_prop {
            names.push(("correlation".to_string(), prop));
        }
        names.push(("W-scale".to_string(), &self.w_prop));
        for (block, prop) in names {
            if let Some(rate) = prop.acceptance_rate() {
                self.out.acceptance_rates.push(BlockAcceptance {
                    chain: self.chain,
                    block,
                    rate,
                });
            }
        }
        Ok(self.out)
    }
}
