//! Posterior simulation: FFBS state draws, conjugate covariance updates,
//! random-walk Metropolis–Hastings for the GARCH and correlation blocks,
//! imputation of missing cells and multi-chain orchestration.
//!
//! One sweep of the GARCH sampler updates each series' GARCH block, then the
//! correlation block, both against the state-marginalized likelihood; then
//! draws `θ_{0:T}` by FFBS, `W` from its inverse-Wishart full conditional and
//! the missing cells. The standard model replaces the MH blocks by a
//! conjugate draw of `V`.

mod chain;
mod draws;
mod ffbs;
mod impute;
mod mh;
mod priors;
mod proposal;
mod wishart;

pub use chain::{chain_rng, run_chain, run_chains_parallel, McmcConfig, Problem};
pub use draws::{
    derived_state_correlation, BlockAcceptance, ChainFailure, ObservationModel, PathDraw, PosteriorDraws,
};
pub use ffbs::{ffbs, smoothed_moments, BackwardSampler};
pub use impute::{impute_missing, state_sigma_path};
pub use mh::{
    log_inverse_wishart, mh_update_correlation, mh_update_garch, mh_update_state_scale, CorrParam, MhOutcome, Target,
};
pub use priors::{log_half_cauchy, PriorSpec};
pub use proposal::AdaptiveProposal;
pub use wishart::{
    completed_observations, inverse_wishart, sample_v_conjugate, sample_w_conjugate, state_innovation_scatter,
};
