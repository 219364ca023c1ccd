//! Model selection by WAIC, posterior summaries, convergence traces and
//! residual diagnostics.

mod residuals;
mod summary;
mod waic;

pub use residuals::{ks_normal, qq_pairs, residual_analysis, KsResult, ResidualReport};
pub use summary::{
    dynamic_variance_path, ergodic_means, path_bands, quantile_sorted, state_bands, summarize, summarize_values,
    ParameterSummary, PathBands, PointEstimate, SigmaSource,
};
pub use waic::{compare_models, waic, ModelRanking, RankedModel, WaicReport};
