//! Bayesian state-space models whose observation errors follow a
//! constant-conditional-correlation GARCH process.
//!
//! The crate covers model specification and simulation ([`model`]), Kalman
//! filtering with GARCH-driven observation variance ([`filter`]), posterior
//! simulation by FFBS plus Metropolis-within-Gibbs ([`sampling`]), WAIC and
//! residual diagnostics ([`diagnostics`]) and the file formats used by the
//! command-line tool ([`io`]).

pub mod diagnostics;
pub mod error;
pub mod filter;
pub mod io;
pub mod linalg;
pub mod model;
pub mod sampling;

pub use error::{Error, Result};
