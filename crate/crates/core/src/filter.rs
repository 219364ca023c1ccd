//! Kalman filtering with a GARCH-driven observation covariance.
//!
//! For each time step:
//!
//! ```text
//! a_t = G m_{t-1}                 P_t = G C_{t-1} Gᵀ + W
//! S²_{i,t} = α₀ + Σ αⱼ E[z²_{i,t-j} | D_{t-j}] + Σ βⱼ S²_{i,t-j}
//! Q_t = D_t R D_t + F' P_t F      f_t = F' a_t
//! K_t = P_t F Q_t⁻¹               m_t = a_t + K_t e_t
//! C_t = P_t − K_t Q_t K_tᵀ
//! ```
//!
//! where `E[z²_{i,t} | D_t] = (y_{i,t} − (F'm_t)_i)² + [F' C_t F]_{ii}` for an
//! observed component. Missing components are marginalized out exactly: only
//! the observed sub-vector enters the update, so gain columns of missing
//! components are zero and a fully missing step leaves `m_t = a_t`,
//! `C_t = P_t`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_jitter, log_det_chol, symmetrize};
use crate::model::{GarchParams, ModelSpec, SeriesData, StateCov};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Observation covariance driving the filter.
#[derive(Debug, Clone, Copy)]
pub enum ObservationNoise<'a> {
    /// CCC-GARCH: `V_t = D_t R D_t` with `D_t` from the filtered variance recursion.
    Garch {
        params: &'a GarchParams,
        corr: &'a DMatrix<f64>,
    },
    /// Time-constant `V` (standard DLM).
    Constant(&'a DMatrix<f64>),
}

impl ObservationNoise<'_> {
    fn n(&self) -> usize {
        match self {
            ObservationNoise::Garch { params, .. } => params.n(),
            ObservationNoise::Constant(v) => v.nrows(),
        }
    }
}

/// Filter moments at one time step. Vectors/matrices follow the model
/// dimensions (`n` observations, `r` states).
#[derive(Debug, Clone, PartialEq)]
pub struct FilterStep {
    /// Predicted state mean `a_t`.
    pub a: DVector<f64>,
    /// Predicted state covariance `P_t`.
    pub p: DMatrix<f64>,
    /// Observation variances `S²_{i,t}`.
    pub s2: DVector<f64>,
    /// One-step forecast mean.
    pub f: DVector<f64>,
    /// One-step forecast covariance (all components).
    pub q: DMatrix<f64>,
    /// Forecast error; `NaN` for missing components.
    pub e: DVector<f64>,
    /// Kalman gain `r × n`; zero columns for missing components.
    pub k: DMatrix<f64>,
    pub m: DVector<f64>,
    pub c: DMatrix<f64>,
    /// Log predictive density of the observed components.
    pub logpred: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    pub m0: DVector<f64>,
    pub c0: DMatrix<f64>,
    /// Per-step moments for `t = 1..T`; empty when produced by the
    /// likelihood-only path.
    pub steps: Vec<FilterStep>,
    /// `T × n` matrix of `S²_{i,t}`.
    pub s2: DMatrix<f64>,
    pub pointwise: Vec<f64>,
    pub loglik: f64,
}

impl FilterOutput {
    pub fn len(&self) -> usize {
        self.pointwise.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pointwise.is_empty()
    }
}

/// GARCH-SSM filter.
pub fn kalman_filter(
    data: &SeriesData,
    spec: &ModelSpec,
    garch: &GarchParams,
    corr: &DMatrix<f64>,
    w: &StateCov,
) -> Result<FilterOutput> {
    filter(data, spec, ObservationNoise::Garch { params: garch, corr }, w)
}

/// Standard DLM filter with constant observation covariance `v`.
pub fn kalman_filter_constant(
    data: &SeriesData,
    spec: &ModelSpec,
    v: &DMatrix<f64>,
    w: &StateCov,
) -> Result<FilterOutput> {
    filter(data, spec, ObservationNoise::Constant(v), w)
}

/// Full filter recording every step.
pub fn filter(
    data: &SeriesData,
    spec: &ModelSpec,
    noise: ObservationNoise<'_>,
    w: &StateCov,
) -> Result<FilterOutput> {
    run(data, spec, noise, w, true)
}

/// Log-likelihood, pointwise terms and variance path without storing steps.
pub fn filter_likelihood(
    data: &SeriesData,
    spec: &ModelSpec,
    noise: ObservationNoise<'_>,
    w: &StateCov,
) -> Result<FilterOutput> {
    run(data, spec, noise, w, false)
}

/// One-step forecast moments `(f_t, Q_t)`.
pub fn one_step_forecasts(output: &FilterOutput) -> Vec<(DVector<f64>, DMatrix<f64>)> {
    output
        .steps
        .iter()
        .map(|s| (s.f.clone(), s.q.clone()))
        .collect()
}

/// Per-time log predictive densities; fully missing steps contribute 0.
pub fn pointwise_log_predictive(output: &FilterOutput) -> Vec<f64> {
    output.pointwise.clone()
}

fn check_dims(data: &SeriesData, spec: &ModelSpec, noise: &ObservationNoise<'_>, w: &StateCov) -> Result<()> {
    let (n, r) = (spec.n(), spec.r());
    if data.n() != n {
        return Err(Error::Dimension(format!(
            "data has {} series, model expects {n}",
            data.n()
        )));
    }
    if noise.n() != n {
        return Err(Error::Dimension(format!(
            "observation noise covers {} series, model expects {n}",
            noise.n()
        )));
    }
    if let ObservationNoise::Garch { corr, .. } = noise {
        if corr.shape() != (n, n) {
            return Err(Error::Dimension(format!("R must be {n}×{n}")));
        }
    }
    if w.dim() != r {
        return Err(Error::Dimension(format!("W must be {r}×{r}")));
    }
    Ok(())
}

fn run(
    data: &SeriesData,
    spec: &ModelSpec,
    noise: ObservationNoise<'_>,
    w: &StateCov,
    record: bool,
) -> Result<FilterOutput> {
    check_dims(data, spec, &noise, w)?;
    let (n, r) = (spec.n(), spec.r());
    let t_len = data.len();
    let fp = spec.f_prime();
    let g = spec.g();
    let gt = g.transpose();
    let wm = w.matrix();

    let uncond: Vec<f64> = match noise {
        ObservationNoise::Garch { params, .. } => {
            params.all().iter().map(|s| s.unconditional_variance()).collect()
        }
        ObservationNoise::Constant(v) => (0..n).map(|i| v[(i, i)]).collect(),
    };

    let mut m = spec.m0().clone();
    let mut c = spec.c0().clone();
    let mut a = DVector::zeros(r);
    let mut gc = DMatrix::zeros(r, r);
    let mut p = DMatrix::zeros(r, r);

    let mut s2_path = DMatrix::zeros(t_len, n);
    let mut ez2_path = DMatrix::<f64>::zeros(t_len, n);
    let mut pointwise = Vec::with_capacity(t_len);
    let mut steps = Vec::with_capacity(if record { t_len } else { 0 });

    for t in 0..t_len {
        g.mul_to(&m, &mut a);
        g.mul_to(&c, &mut gc);
        gc.mul_to(&gt, &mut p);
        p += wm;
        symmetrize(&mut p);

        // Observation covariance V_t.
        let (s2, v): (Vec<f64>, DMatrix<f64>) = match noise {
            ObservationNoise::Garch { params, corr } => {
                let s2: Vec<f64> = (0..n)
                    .map(|i| {
                        let lag = |path: &DMatrix<f64>, j: usize| {
                            if j > t {
                                uncond[i]
                            } else {
                                path[(t - j, i)]
                            }
                        };
                        params.step_unchecked(i, |j| lag(&ez2_path, j), |j| lag(&s2_path, j))
                    })
                    .collect();
                let sd: Vec<f64> = s2.iter().map(|x| x.sqrt()).collect();
                let v = DMatrix::from_fn(n, n, |i, j| sd[i] * sd[j] * corr[(i, j)]);
                (s2, v)
            }
            ObservationNoise::Constant(v) => (uncond.clone(), v.clone()),
        };
        for i in 0..n {
            s2_path[(t, i)] = s2[i];
        }

        let obs = data.observed_indices(t);
        let k_obs = obs.len();

        if k_obs == 0 {
            // Fully missing: no update.
            for i in 0..n {
                ez2_path[(t, i)] = v[(i, i)];
            }
            pointwise.push(0.0);
            if record {
                let f = fp * &a;
                let q = fp * &p * fp.transpose() + &v;
                steps.push(FilterStep {
                    a: a.clone(),
                    p: p.clone(),
                    s2: DVector::from_vec(s2),
                    f,
                    q,
                    e: DVector::from_element(n, f64::NAN),
                    k: DMatrix::zeros(r, n),
                    m: a.clone(),
                    c: p.clone(),
                    logpred: 0.0,
                });
            }
            m.copy_from(&a);
            c.copy_from(&p);
            continue;
        }

        let all = k_obs == n;
        let f_o = if all { fp.clone() } else { fp.select_rows(obs.iter()) };
        let fp_o = &f_o * &p; // k × r
        let mut q_o = &fp_o * f_o.transpose();
        for (a_idx, &i) in obs.iter().enumerate() {
            for (b_idx, &j) in obs.iter().enumerate() {
                q_o[(a_idx, b_idx)] += v[(i, j)];
            }
        }
        symmetrize(&mut q_o);
        let y_o = DVector::from_iterator(k_obs, obs.iter().map(|&i| data.y()[(t, i)]));
        let e_o = &y_o - &f_o * &a;

        let chol = cholesky_jitter(&q_o).ok_or(Error::SingularForecast { t: t + 1 })?;
        let l = chol.l_dirty();
        let mut ymat = fp_o.clone();
        l.solve_lower_triangular_mut(&mut ymat);
        let mut u = e_o.clone();
        l.solve_lower_triangular_mut(&mut u);

        let logpred = -0.5 * (k_obs as f64 * LN_2PI + log_det_chol(&chol) + u.norm_squared());
        pointwise.push(logpred);

        m.copy_from(&a);
        m.gemv_tr(1.0, &ymat, &u, 1.0);
        c.copy_from(&p);
        c.gemm_tr(-1.0, &ymat, &ymat, 1.0);
        symmetrize(&mut c);

        // Conditional second moments of z_t given D_t, used by later lags.
        if matches!(noise, ObservationNoise::Garch { .. }) {
            let fm = fp * &m;
            let fc = fp * &c;
            let mut pos = 0;
            for i in 0..n {
                if pos < k_obs && obs[pos] == i {
                    let resid = data.y()[(t, i)] - fm[i];
                    let var: f64 = (0..r).map(|k| fc[(i, k)] * fp[(i, k)]).sum();
                    ez2_path[(t, i)] = resid * resid + var;
                    pos += 1;
                } else {
                    let mut v_oi = DVector::from_iterator(k_obs, obs.iter().map(|&j| v[(j, i)]));
                    l.solve_lower_triangular_mut(&mut v_oi);
                    let mean = v_oi.dot(&u);
                    let var = (v[(i, i)] - v_oi.norm_squared()).max(0.0);
                    ez2_path[(t, i)] = mean * mean + var;
                }
            }
        }

        if record {
            let f = fp * &a;
            let q = fp * &p * fp.transpose() + &v;
            let mut e = DVector::from_element(n, f64::NAN);
            let gain_t = chol.solve(&fp_o); // k × r, equals (P F_o Q⁻¹)ᵀ
            let mut k = DMatrix::zeros(r, n);
            for (idx, &i) in obs.iter().enumerate() {
                e[i] = e_o[idx];
                k.column_mut(i).copy_from(&gain_t.row(idx).transpose());
            }
            steps.push(FilterStep {
                a: a.clone(),
                p: p.clone(),
                s2: DVector::from_vec(s2),
                f,
                q,
                e,
                k,
                m: m.clone(),
                c: c.clone(),
                logpred,
            });
        }
    }

    let loglik = pointwise.iter().sum();
    Ok(FilterOutput {
        m0: spec.m0().clone(),
        c0: spec.c0().clone(),
        steps,
        s2: s2_path,
        pointwise,
        loglik,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{apply_missingness, simulate, CorrelationFactor};

    fn small_problem(seed: u64) -> (SeriesData, ModelSpec, GarchParams, DMatrix<f64>, StateCov) {
        let spec = ModelSpec::random_walk_plus_noise(2).unwrap();
        let garch = GarchParams::garch11(&[1.0, 0.5], &[0.2, 0.1], &[0.6, 0.7]).unwrap();
        let corr = CorrelationFactor::from_rho(0.4).unwrap();
        let w = StateCov::diagonal(&[0.2, 0.1]).unwrap();
        let (data, _) = simulate(&spec, &garch, &corr, &w, 60, seed).unwrap();
        (data, spec, garch, corr.correlation(), w)
    }

    #[test]
    fn loglik_is_sum_of_pointwise_and_fast_path_agrees() {
        let (data, spec, garch, r, w) = small_problem(1);
        let full = kalman_filter(&data, &spec, &garch, &r, &w).unwrap();
        let fast = filter_likelihood(&data, &spec, ObservationNoise::Garch { params: &garch, corr: &r }, &w).unwrap();
        assert_eq!(full.loglik, full.pointwise.iter().sum::<f64>());
        assert_eq!(full.loglik, fast.loglik);
        assert_eq!(full.s2, fast.s2);
        assert!(fast.steps.is_empty());
        assert_eq!(full.steps.len(), 60);
    }

    #[test]
    fn first_forecast_unwinds_initialization() {
        let (data, spec, garch, r, w) = small_problem(2);
        let spec = spec
            .with_prior(DVector::from_vec(vec![3.0, -1.0]), DMatrix::identity(2, 2))
            .unwrap();
        let out = kalman_filter(&data, &spec, &garch, &r, &w).unwrap();
        let f1 = spec.f_prime() * spec.g() * spec.m0();
        assert_eq!(one_step_forecasts(&out)[0].0, f1);
    }

    #[test]
    fn forecast_is_causal() {
        let (data, spec, garch, r, w) = small_problem(3);
        let base = kalman_filter(&data, &spec, &garch, &r, &w).unwrap();
        // Perturb everything after t = 30 (0-based row 30 = y_31).
        let mut y = data.y().clone();
        for t in 30..60 {
            y[(t, 0)] += 100.0;
            y[(t, 1)] -= 7.0;
        }
        let changed = SeriesData::complete(y).unwrap();
        let other = kalman_filter(&changed, &spec, &garch, &r, &w).unwrap();
        for t in 0..=30 {
            assert_eq!(base.steps[t].f, other.steps[t].f);
            assert_eq!(base.steps[t].q, other.steps[t].q);
        }
        assert_ne!(base.steps[31].f, other.steps[31].f);
        // Truncation reproduces the prefix exactly.
        let trunc = kalman_filter(&data.truncated(20).unwrap(), &spec, &garch, &r, &w).unwrap();
        assert_eq!(&trunc.steps[..], &base.steps[..20]);
    }

    #[test]
    fn fully_missing_step_copies_prediction() {
        let (data, spec, garch, r, w) = small_problem(4);
        let mut mask = vec![true; 120];
        mask[20] = false;
        mask[21] = false;
        mask[41] = false;
        let data = apply_missingness(&data, &mask).unwrap();
        let out = kalman_filter(&data, &spec, &garch, &r, &w).unwrap();
        let s = &out.steps[10];
        assert_eq!(s.m, s.a);
        assert_eq!(s.c, s.p);
        assert_eq!(s.logpred, 0.0);
        assert!(s.k.iter().all(|&v| v == 0.0));
        let s = &out.steps[20];
        assert!(s.k.column(1).iter().all(|&v| v == 0.0));
        assert!(s.k.column(0).iter().any(|&v| v != 0.0));
        assert!(s.e[1].is_nan());
    }

    #[test]
    fn univariate_homoskedastic_terms_are_normal_densities() {
        let spec = ModelSpec::random_walk_plus_noise(1).unwrap();
        let garch = GarchParams::homoskedastic(&[1.5], 1, 1).unwrap();
        let r = DMatrix::identity(1, 1);
        let w = StateCov::diagonal(&[0.3]).unwrap();
        let (data, _) = simulate(&spec, &garch, &CorrelationFactor::identity(1), &w, 20, 9).unwrap();
        let out = kalman_filter(&data, &spec, &garch, &r, &w).unwrap();
        for (t, s) in out.steps.iter().enumerate() {
            let (f, q) = (s.f[0], s.q[(0, 0)]);
            let y = data.y()[(t, 0)];
            let dens = -0.5 * ((2.0 * std::f64::consts::PI * q).ln() + (y - f).powi(2) / q);
            assert!((dens - out.pointwise[t]).abs() < 1e-10);
        }
    }

    #[test]
    fn filtered_covariance_shrinks_at_observed_steps() {
        let (data, spec, garch, r, w) = small_problem(5);
        let out = kalman_filter(&data, &spec, &garch, &r, &w).unwrap();
        for s in &out.steps {
            let diff = &s.p - &s.c;
            let eig = diff.symmetric_eigen();
            assert!(eig.eigenvalues.iter().all(|&l| l > -1e-9));
            assert!(s.s2[0] >= 1.0 && s.s2[1] >= 0.5);
            assert!(crate::linalg::is_spd(&s.c));
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (data, _, garch, r, w) = small_problem(6);
        let spec3 = ModelSpec::random_walk_plus_noise(3).unwrap();
        assert!(kalman_filter(&data, &spec3, &garch, &r, &w).is_err());
    }
}
