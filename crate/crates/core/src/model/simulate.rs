use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CorrelationFactor, GarchParams, ModelSpec, SeriesData, StateCov};
use crate::error::{Error, Result};
use crate::linalg::{mvn_draw, psd_factor, std_normal_vec};

/// Latent quantities behind a simulated data set.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTruth {
    /// `(T+1) × r`, row `t` holds `θ_t` for `t = 0..T`.
    pub states: DMatrix<f64>,
    /// `T × n` conditional standard deviations `σ_{i,t}`.
    pub sigma: DMatrix<f64>,
    /// `T × n` observation errors `z_t`.
    pub z: DMatrix<f64>,
}

/// Forward-simulate `T` observations from the GARCH state-space model.
///
/// Pre-sample lags of both `z²` and `σ²` are set to the unconditional
/// variance of each series. Deterministic given `seed`.
pub fn simulate(
    spec: &ModelSpec,
    garch: &GarchParams,
    corr: &CorrelationFactor,
    w: &StateCov,
    t_len: usize,
    seed: u64,
) -> Result<(SeriesData, SimulationTruth)> {
    let (n, r) = (spec.n(), spec.r());
    if t_len == 0 {
        return Err(Error::param("T", "must be at least 1"));
    }
    if garch.n() != n || corr.n() != n {
        return Err(Error::Dimension(format!(
            "GARCH and correlation must cover {n} series"
        )));
    }
    if w.dim() != r {
        return Err(Error::Dimension(format!("W must be {r}×{r}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chol_r = psd_factor(&corr.correlation());
    let chol_w = psd_factor(w.matrix());
    let chol_c0 = psd_factor(spec.c0());

    let mut states = DMatrix::zeros(t_len + 1, r);
    let mut sigma = DMatrix::zeros(t_len, n);
    let mut z = DMatrix::zeros(t_len, n);
    let mut y = DMatrix::zeros(t_len, n);

    let mut theta = mvn_draw(spec.m0(), &chol_c0, &mut rng);
    states.row_mut(0).copy_from(&theta.transpose());

    let uncond: Vec<f64> = garch.all().iter().map(|s| s.unconditional_variance()).collect();
    let mut z2_hist: Vec<Vec<f64>> = Vec::with_capacity(t_len);
    let mut s2_hist: Vec<Vec<f64>> = Vec::with_capacity(t_len);
    let zero = DVector::zeros(r);

    for t in 0..t_len {
        theta = spec.g() * &theta + mvn_draw(&zero, &chol_w, &mut rng);

        let s2: Vec<f64> = (0..n)
            .map(|i| {
                let lag = |hist: &Vec<Vec<f64>>, j: usize| {
                    if j > t {
                        uncond[i]
                    } else {
                        hist[t - j][i]
                    }
                };
                garch.step_unchecked(i, |j| lag(&z2_hist, j), |j| lag(&s2_hist, j))
            })
            .collect();
        let sd: Vec<f64> = s2.iter().map(|v| v.sqrt()).collect();
        // chol(D R D) = D chol(R) for diagonal D > 0.
        let eps = std_normal_vec(n, &mut rng);
        let mut zt = &chol_r * eps;
        for i in 0..n {
            zt[i] *= sd[i];
        }
        let yt = spec.f_prime() * &theta + &zt;

        states.row_mut(t + 1).copy_from(&theta.transpose());
        for i in 0..n {
            sigma[(t, i)] = sd[i];
            z[(t, i)] = zt[i];
            y[(t, i)] = yt[i];
        }
        z2_hist.push(zt.iter().map(|v| v * v).collect());
        s2_hist.push(s2);
    }

    let data = SeriesData::complete(y)?;
    Ok((data, SimulationTruth { states, sigma, z }))
}
