use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::linalg::{cholesky_jitter, std_normal_vec};

const TARGET_ACCEPTANCE: f64 = 0.3;
const SHAPE_UPDATE_EVERY: usize = 50;

/// Gaussian random-walk proposal for one parameter block.
///
/// While adapting, the log step scale follows a Robbins–Monro recursion
/// toward 30% acceptance and the proposal shape tracks the empirical
/// covariance of the chain (scaled by `2.38²/d`). After [`freeze`] the
/// proposal no longer changes.
///
/// [`freeze`]: AdaptiveProposal::freeze
#[derive(Debug, Clone)]
pub struct AdaptiveProposal {
    base_sd: Vec<f64>,
    adapt_shape: bool,
    shape: DMatrix<f64>,
    log_scale: f64,
    adapting: bool,
    iter: usize,
    count: usize,
    mean: DVector<f64>,
    m2: DMatrix<f64>,
    proposed: usize,
    accepted: usize,
}

impl AdaptiveProposal {
    /// Diagonal proposal with the given step sizes.
    pub fn new(sd: &[f64]) -> Self {
        let d = sd.len();
        Self {
            base_sd: sd.to_vec(),
            adapt_shape: true,
            shape: DMatrix::from_diagonal(&DVector::from_column_slice(sd)),
            log_scale: 0.0,
            adapting: true,
            iter: 0,
            count: 0,
            mean: DVector::zeros(d),
            m2: DMatrix::zeros(d, d),
            proposed: 0,
            accepted: 0,
        }
    }

    /// Like [`new`](AdaptiveProposal::new) but only the overall scale adapts;
    /// the shape stays diagonal.
    pub fn scale_only(sd: &[f64]) -> Self {
        Self {
            adapt_shape: false,
            ..Self::new(sd)
        }
    }

    pub fn dim(&self) -> usize {
        self.base_sd.len()
    }

    /// Lower-triangular factor of the current proposal covariance.
    pub fn factor(&self) -> DMatrix<f64> {
        &self.shape * self.log_scale.exp()
    }

    pub fn propose<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Vec<f64> {
        let step = self.factor() * std_normal_vec(self.dim(), rng);
        x.iter().zip(step.iter()).map(|(a, b)| a + b).collect()
    }

    /// Record the outcome of one proposal. `current` is the chain state after
    /// the accept/reject decision.
    pub fn update(&mut self, current: &[f64], accepted: bool) {
        if !self.adapting {
            self.proposed += 1;
            self.accepted += usize::from(accepted);
            return;
        }
        self.iter += 1;
        let gamma = (self.iter as f64).powf(-0.6);
        let acc = if accepted { 1.0 } else { 0.0 };
        self.log_scale = (self.log_scale + gamma * (acc - TARGET_ACCEPTANCE)).clamp(-12.0, 6.0);
        if !self.adapt_shape {
            return;
        }

        self.count += 1;
        let x = DVector::from_column_slice(current);
        let delta = &x - &self.mean;
        self.mean += &delta / self.count as f64;
        let delta2 = &x - &self.mean;
        self.m2.ger(1.0, &delta, &delta2, 1.0);

        let d = self.dim();
        if self.count >= 100 + 10 * d && self.iter.is_multiple_of(SHAPE_UPDATE_EVERY) {
            let mut cov = &self.m2 / (self.count - 1) as f64 * (2.38 * 2.38 / d as f64);
            for i in 0..d {
                cov[(i, i)] += 1e-6 * self.base_sd[i] * self.base_sd[i];
            }
            if let Some(chol) = cholesky_jitter(&cov) {
                let new_shape = chol.l();
                if self.shape_is_base() {
                    // Switching from the fixed diagonal shape restarts the scale.
                    self.log_scale = 0.0;
                }
                self.shape = new_shape;
            }
        }
    }

    fn shape_is_base(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| self.shape[(i, j)] == if i == j { self.base_sd[i] } else { 0.0 }))
    }

    /// Discard the covariance estimate accumulated so far (e.g. the initial
    /// transient), keeping the current proposal.
    pub fn restart_estimate(&mut self) {
        let d = self.dim();
        self.count = 0;
        self.mean = DVector::zeros(d);
        self.m2 = DMatrix::zeros(d, d);
    }

    pub fn freeze(&mut self) {
        self.adapting = false;
    }

    pub fn is_adapting(&self) -> bool {
        self.adapting
    }

    /// Acceptance rate since [`freeze`](AdaptiveProposal::freeze).
    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }
}
