//! File formats and the batch commands used by the command-line tool.

mod commands;
mod config;
mod csv_data;
mod tables;

pub use commands::{
    cmd_compare, cmd_diagnose, cmd_fit, cmd_simulate, sha256_hex, Comparison, FitManifest, FitOutcome,
    SimulateOutput, CONFIG_COPY, DRAWS, MANIFEST, PATHS, SUMMARY, WAIC, WAIC_POINTWISE,
};
pub use config::{ModelKind, RunConfig, TruthConfig, OUTPUT_DIR_ENV};
pub use csv_data::{read_csv, read_csv_from, write_csv, write_csv_to};
pub use tables::{full, read_draws, read_path_mean, read_summary, read_waic, sig4, PathsTable};
