use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::is_spd;
use crate::model::{GarchParams, SeriesGarch};

const LN_2_OVER_PI: f64 = -0.451_582_705_289_454_9;

/// Hyper-parameters of the prior distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    /// Half-Cauchy scale for each `α₀`.
    pub cauchy_scale_alpha0: f64,
    /// Half-Cauchy scale for the ARCH/GARCH loadings, truncated to `Σα+Σβ < 1`.
    pub cauchy_scale_ab: f64,
    /// Half-Cauchy scale for the diagonal of the unnormalized factor `U`.
    pub cauchy_scale_udiag: f64,
    /// Normal standard deviation for off-diagonal entries of `U`.
    pub normal_sd_uoffdiag: f64,
    /// Inverse-Wishart degrees of freedom for `W` (and `V` in the standard DLM).
    pub iw_df: f64,
    /// Inverse-Wishart scale `Ψ` for `W` (density ∝ |W|^{-(ν+r+1)/2} exp(−tr(Ψ W⁻¹)/2)).
    pub iw_scale: DMatrix<f64>,
    /// Inverse-Wishart scale for `V` (standard DLM only).
    pub iw_obs_scale: DMatrix<f64>,
    /// Bivariate models sample `ρ ~ Uniform(−1, 1)` directly instead of `U`.
    pub rho_uniform: bool,
}

impl PriorSpec {
    /// Unit half-Cauchy scales, `N(0, 1)` off-diagonals, and 10 degrees of
    /// freedom with scale `0.1·I` for the inverse-Wishart priors, i.e. the
    /// precision `W⁻¹` is Wishart with 10 degrees of freedom and scale `10·I`.
    pub fn defaults(n: usize, r: usize) -> Self {
        Self {
            cauchy_scale_alpha0: 1.0,
            cauchy_scale_ab: 1.0,
            cauchy_scale_udiag: 1.0,
            normal_sd_uoffdiag: 1.0,
            iw_df: 10.0,
            iw_scale: DMatrix::identity(r, r) * 0.1,
            iw_obs_scale: DMatrix::identity(n, n) * 0.1,
            rho_uniform: true,
        }
    }

    pub fn validate(&self, n: usize, r: usize) -> Result<()> {
        for (name, v) in [
            ("priors.cauchy_scale_alpha0", self.cauchy_scale_alpha0),
            ("priors.cauchy_scale_ab", self.cauchy_scale_ab),
            ("priors.cauchy_scale_udiag", self.cauchy_scale_udiag),
            ("priors.normal_sd_uoffdiag", self.normal_sd_uoffdiag),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, "must be positive"));
            }
        }
        let needed = r.max(n) as f64 - 1.0;
        if !(self.iw_df > needed) {
            return Err(Error::param(
                "priors.iw_df",
                format!("must exceed {needed} (dimension − 1)"),
            ));
        }
        if self.iw_scale.shape() != (r, r) || !is_spd(&self.iw_scale) {
            return Err(Error::param("priors.iw_scale", format!("must be a {r}×{r} SPD matrix")));
        }
        if self.iw_obs_scale.shape() != (n, n) || !is_spd(&self.iw_obs_scale) {
            return Err(Error::param(
                "priors.iw_obs_scale",
                format!("must be a {n}×{n} SPD matrix"),
            ));
        }
        Ok(())
    }

    /// Log prior of one series' GARCH block up to a constant; `-∞` outside
    /// the support.
    pub fn log_garch(&self, s: &SeriesGarch) -> f64 {
        if !s.is_valid() {
            return f64::NEG_INFINITY;
        }
        let mut lp = log_half_cauchy(s.alpha0, self.cauchy_scale_alpha0);
        for &x in s.alpha.iter().chain(&s.beta) {
            lp += log_half_cauchy(x, self.cauchy_scale_ab);
        }
        lp
    }

    /// Initial GARCH coefficients: `α₀` from the central 80% of its
    /// half-Cauchy prior, loadings from the truncated prior by rejection.
    pub fn draw_garch<R: Rng + ?Sized>(&self, n: usize, p: usize, q: usize, rng: &mut R) -> GarchParams {
        let series = (0..n)
            .map(|_| {
                let alpha0 = central_half_cauchy(self.cauchy_scale_alpha0, rng);
                loop {
                    let alpha: Vec<f64> = (0..p).map(|_| half_cauchy(self.cauchy_scale_ab, rng)).collect();
                    let beta: Vec<f64> = (0..q).map(|_| half_cauchy(self.cauchy_scale_ab, rng)).collect();
                    let s = SeriesGarch::new(alpha0, alpha, beta);
                    if s.is_valid() {
                        break s;
                    }
                }
            })
            .collect();
        GarchParams::new(series).expect("prior draws satisfy constraints")
    }

    /// Initial unnormalized upper-triangular factor.
    pub fn draw_factor<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> DMatrix<f64> {
        let off = Normal::new(0.0, self.normal_sd_uoffdiag).expect("validated sd");
        let mut u = DMatrix::zeros(n, n);
        for i in 0..n {
            u[(i, i)] = if i + 1 == n {
                1.0
            } else {
                central_half_cauchy(self.cauchy_scale_udiag, rng)
            };
            for j in (i + 1)..n {
                u[(i, j)] = off.sample(rng);
            }
        }
        u
    }
}

/// `log(2/(π s)) − log(1 + (x/s)²)` for `x ≥ 0`.
pub fn log_half_cauchy(x: f64, scale: f64) -> f64 {
    if x < 0.0 {
        return f64::NEG_INFINITY;
    }
    let z = x / scale;
    LN_2_OVER_PI - scale.ln() - (z * z).ln_1p()
}

pub(crate) fn log_normal_kernel(x: f64, sd: f64) -> f64 {
    let z = x / sd;
    -0.5 * z * z - sd.ln()
}

pub(crate) fn half_cauchy<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    scale * (0.5 * std::f64::consts::PI * u).tan()
}

fn central_half_cauchy<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random_range(0.1..0.9);
    scale * (0.5 * std::f64::consts::PI * u).tan()
}

pub(crate) fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}
