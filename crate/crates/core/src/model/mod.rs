//! Model specification, GARCH variance arithmetic, correlation
//! reparametrization and forward simulation.

mod correlation;
mod data;
mod garch;
mod simulate;

pub use correlation::{correlation_from_factor, CorrelationFactor};
pub use data::{apply_missingness, SeriesData};
pub use garch::{build_observation_cov, garch_variance_step, GarchParams, SeriesGarch};
pub use simulate::{simulate, SimulationTruth};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::is_spd;

/// Prior state variance used for the default diffuse initialization.
pub const DIFFUSE_PRIOR_VARIANCE: f64 = 1e7;

/// Dynamic linear model skeleton:
///
/// ```text
/// y_t     = F' θ_t + z_t
/// θ_t     = G θ_{t-1} + w_t,   w_t ~ N(0, W)
/// θ_0     ~ N(m0, C0)
/// ```
///
/// `f_prime` is the `n × r` observation map and `g` the `r × r` evolution
/// matrix, both constant over time.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    f_prime: DMatrix<f64>,
    g: DMatrix<f64>,
    m0: DVector<f64>,
    c0: DMatrix<f64>,
}

impl ModelSpec {
    pub fn new(
        f_prime: DMatrix<f64>,
        g: DMatrix<f64>,
        m0: DVector<f64>,
        c0: DMatrix<f64>,
    ) -> Result<Self> {
        let (n, r) = f_prime.shape();
        if n == 0 || r == 0 {
            return Err(Error::Dimension("F' must be at least 1×1".into()));
        }
        if g.shape() != (r, r) {
            return Err(Error::Dimension(format!(
                "G must be {r}×{r}, got {}×{}",
                g.nrows(),
                g.ncols()
            )));
        }
        if m0.len() != r {
            return Err(Error::Dimension(format!("m0 must have length {r}")));
        }
        if c0.shape() != (r, r) {
            return Err(Error::Dimension(format!("C0 must be {r}×{r}")));
        }
        if f_prime.iter().chain(g.iter()).chain(m0.iter()).any(|v| !v.is_finite()) {
            return Err(Error::param("model", "matrices must be finite"));
        }
        if !is_spd(&c0) {
            return Err(Error::param("C0", "must be symmetric positive definite"));
        }
        Ok(Self { f_prime, g, m0, c0 })
    }

    /// Random walk plus noise: `F' = G = I_n`, diffuse prior on θ_0.
    pub fn random_walk_plus_noise(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        Self::new(
            DMatrix::identity(n, n),
            DMatrix::identity(n, n),
            DVector::zeros(n),
            DMatrix::identity(n, n) * DIFFUSE_PRIOR_VARIANCE,
        )
    }

    /// Local linear trend per series: state `(μ_j, λ_j)` with
    /// `μ_t = μ_{t-1} + λ_{t-1} + w`, `λ_t = λ_{t-1} + u`.
    pub fn local_linear_trend(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        let r = 2 * n;
        let mut f = DMatrix::zeros(n, r);
        let mut g = DMatrix::zeros(r, r);
        for j in 0..n {
            f[(j, 2 * j)] = 1.0;
            g[(2 * j, 2 * j)] = 1.0;
            g[(2 * j, 2 * j + 1)] = 1.0;
            g[(2 * j + 1, 2 * j + 1)] = 1.0;
        }
        Self::new(
            f,
            g,
            DVector::zeros(r),
            DMatrix::identity(r, r) * DIFFUSE_PRIOR_VARIANCE,
        )
    }

    /// Replace the prior moments of θ_0.
    pub fn with_prior(self, m0: DVector<f64>, c0: DMatrix<f64>) -> Result<Self> {
        Self::new(self.f_prime, self.g, m0, c0)
    }

    pub fn n(&self) -> usize {
        self.f_prime.nrows()
    }

    pub fn r(&self) -> usize {
        self.f_prime.ncols()
    }

    pub fn f_prime(&self) -> &DMatrix<f64> {
        &self.f_prime
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn m0(&self) -> &DVector<f64> {
        &self.m0
    }

    pub fn c0(&self) -> &DMatrix<f64> {
        &self.c0
    }
}

/// State innovation covariance `W`, constant over time.
#[derive(Debug, Clone, PartialEq)]
pub struct StateCov(DMatrix<f64>);

impl StateCov {
    pub fn new(w: DMatrix<f64>) -> Result<Self> {
        if !is_spd(&w) {
            return Err(Error::param("W", "must be symmetric positive definite"));
        }
        Ok(Self(w))
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}
