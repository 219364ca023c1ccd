use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::filter::FilterOutput;
use crate::linalg::{cholesky_jitter, psd_factor, std_normal_vec, symmetrize};
use crate::model::ModelSpec;

/// Backward sampler built from a recorded filter pass.
///
/// Draws `θ_T ~ N(m_T, C_T)` and then, for `t = T−1, …, 0`,
/// `θ_t | θ_{t+1} ~ N(m_t + J_t(θ_{t+1} − a_{t+1}), C_t − J_t G C_t)` with
/// `J_t = C_t Gᵀ P_{t+1}⁻¹`. The gains and covariance factors are computed
/// once, so repeated draws only cost matrix-vector products.
#[derive(Debug, Clone)]
pub struct BackwardSampler {
    m_last: DVector<f64>,
    l_last: DMatrix<f64>,
    /// Per `t = 0..T−1`: offset `m_t − J_t a_{t+1}`, gain `J_t` and factor of `H_t`.
    offset: Vec<DVector<f64>>,
    gain: Vec<DMatrix<f64>>,
    factor: Vec<DMatrix<f64>>,
}

impl BackwardSampler {
    pub fn new(output: &FilterOutput, spec: &ModelSpec) -> Result<Self> {
        let t_len = output.len();
        if output.steps.len() != t_len || t_len == 0 {
            return Err(Error::Dimension(
                "backward sampling needs a filter pass with recorded steps".into(),
            ));
        }
        let g = spec.g();
        let mut offset = Vec::with_capacity(t_len);
        let mut gain = Vec::with_capacity(t_len);
        let mut factor = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let (m_t, c_t) = if t == 0 {
                (&output.m0, &output.c0)
            } else {
                (&output.steps[t - 1].m, &output.steps[t - 1].c)
            };
            let next = &output.steps[t];
            let chol = cholesky_jitter(&next.p).ok_or_else(|| {
                Error::Numerical(format!("predicted state covariance at t = {} is singular", t + 1))
            })?;
            let gc = g * c_t;
            // Jᵀ = P⁻¹ G C (C symmetric).
            let j = chol.solve(&gc).transpose();
            let mut h = c_t - &j * &gc;
            symmetrize(&mut h);
            offset.push(m_t - &j * &next.a);
            factor.push(psd_factor(&h));
            gain.push(j);
        }
        let last = &output.steps[t_len - 1];
        Ok(Self {
            m_last: last.m.clone(),
            l_last: psd_factor(&last.c),
            offset,
            gain,
            factor,
        })
    }

    pub fn len(&self) -> usize {
        self.gain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gain.is_empty()
    }

    /// One joint draw of `θ_{0:T}` as a `(T+1) × r` matrix.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        let t_len = self.len();
        let r = self.m_last.len();
        let mut out = DMatrix::zeros(t_len + 1, r);
        let mut theta = &self.m_last + &self.l_last * std_normal_vec(r, rng);
        out.row_mut(t_len).copy_from(&theta.transpose());
        for t in (0..t_len).rev() {
            let mut next = &self.offset[t] + &self.gain[t] * &theta;
            next.gemv(1.0, &self.factor[t], &std_normal_vec(r, rng), 1.0);
            theta = next;
            out.row_mut(t).copy_from(&theta.transpose());
        }
        out
    }
}

/// Single forward-filtering backward-sampling draw of the state path.
pub fn ffbs<R: Rng + ?Sized>(output: &FilterOutput, spec: &ModelSpec, rng: &mut R) -> Result<DMatrix<f64>> {
    Ok(BackwardSampler::new(output, spec)?.draw(rng))
}

/// Backward-smoothed means and covariances `(s_t, S_t)` for `t = 0..T`.
pub fn smoothed_moments(output: &FilterOutput, spec: &ModelSpec) -> Result<Vec<(DVector<f64>, DMatrix<f64>)>> {
    let t_len = output.len();
    if output.steps.len() != t_len || t_len == 0 {
        return Err(Error::Dimension("smoothing needs a filter pass with recorded steps".into()));
    }
    let g = spec.g();
    let last = &output.steps[t_len - 1];
    let mut out = vec![(last.m.clone(), last.c.clone()); t_len + 1];
    for t in (0..t_len).rev() {
        let (m_t, c_t) = if t == 0 {
            (&output.m0, &output.c0)
        } else {
            (&output.steps[t - 1].m, &output.steps[t - 1].c)
        };
        let next = &output.steps[t];
        let chol = cholesky_jitter(&next.p)
            .ok_or_else(|| Error::Numerical(format!("predicted state covariance at t = {} is singular", t + 1)))?;
        let j = chol.solve(&(g * c_t)).transpose();
        let (s_next, cov_next) = &out[t + 1];
        let s = m_t + &j * (s_next - &next.a);
        let mut cov = c_t + &j * (cov_next - &next.p) * j.transpose();
        symmetrize(&mut cov);
        out[t] = (s, cov);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::kalman_filter_constant;
    use crate::model::{SeriesData, StateCov};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn draws_match_smoothed_moments() {
        let spec = ModelSpec::random_walk_plus_noise(1)
            .unwrap()
            .with_prior(DVector::from_vec(vec![0.0]), DMatrix::from_element(1, 1, 4.0))
            .unwrap();
        let y = DMatrix::from_column_slice(5, 1, &[0.3, 1.2, 0.8, 2.0, 1.5]);
        let data = SeriesData::complete(y).unwrap();
        let v = DMatrix::from_element(1, 1, 0.5);
        let w = StateCov::diagonal(&[0.2]).unwrap();
        let out = kalman_filter_constant(&data, &spec, &v, &w).unwrap();
        let smooth = smoothed_moments(&out, &spec).unwrap();
        let sampler = BackwardSampler::new(&out, &spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 40_000;
        let mut sum = [0.0; 6];
        let mut sq = [0.0; 6];
        for _ in 0..n {
            let d = sampler.draw(&mut rng);
            for t in 0..6 {
                sum[t] += d[(t, 0)];
                sq[t] += d[(t, 0)] * d[(t, 0)];
            }
        }
        for t in 0..6 {
            let mean = sum[t] / n as f64;
            let var = sq[t] / n as f64 - mean * mean;
            let (s, cov) = &smooth[t];
            assert!((mean - s[0]).abs() < 4.0 * (cov[(0, 0)] / n as f64).sqrt() + 1e-3, "t={t}");
            assert!((var - cov[(0, 0)]).abs() / cov[(0, 0)] < 0.03, "t={t}");
        }
    }

    #[test]
    fn requires_recorded_steps() {
        let spec = ModelSpec::random_walk_plus_noise(1).unwrap();
        let data = SeriesData::complete(DMatrix::from_element(3, 1, 1.0)).unwrap();
        let v = DMatrix::from_element(1, 1, 1.0);
        let w = StateCov::diagonal(&[1.0]).unwrap();
        let fast = crate::filter::filter_likelihood(
            &data,
            &spec,
            crate::filter::ObservationNoise::Constant(&v),
            &w,
        )
        .unwrap();
        assert!(BackwardSampler::new(&fast, &spec).is_err());
    }
}
