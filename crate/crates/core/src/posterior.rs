//! Gaussian belief over the reward parameters under normal-normal
//! conjugacy: prior, batched conjugate updates, posterior sampling, and
//! point estimates.
//!
//! The state keeps precision-form accumulators (`Sigma_0^{-1} + sum X^T X /
//! sigma^2` and the matching precision-weighted mean) and re-derives
//! `(mean, covariance)` by an SPD solve after every update. Repeatedly
//! inverting the covariance per the textbook recursion amplifies round-off
//! over long runs; the accumulator form does not.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::scalar::Scalar;

/// Gaussian posterior over a parameter vector of fixed dimension.
#[derive(Debug, Clone)]
pub struct PosteriorState<S> {
    obs_noise_var: S,
    rounds_seen: usize,
    precision: Matrix<S>,
    precision_mean: Vec<S>,
    mean: Vec<S>,
    covariance: Matrix<S>,
}

impl<S: Scalar> PosteriorState<S> {
    /// Prior `N(prior_mean * 1, (1 / lambda) * I)` with observation noise
    /// variance `obs_noise_var` used by subsequent updates.
    pub fn init_prior(dim: usize, prior_mean: S, lambda: S, obs_noise_var: S) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("posterior dimension must be >= 1".into()));
        }
        if lambda <= S::zero() || !lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be > 0, got {lambda}")));
        }
        if obs_noise_var <= S::zero() || !obs_noise_var.is_finite() {
            return Err(Error::Config(format!(
                "observation noise variance must be > 0, got {obs_noise_var}"
            )));
        }
        let mean = vec![prior_mean; dim];
        let precision_mean = vec![prior_mean * lambda; dim];
        Ok(Self {
            obs_noise_var,
            rounds_seen: 0,
            precision: Matrix::scaled_identity(dim, lambda),
            precision_mean,
            mean,
            covariance: Matrix::scaled_identity(dim, S::one() / lambda),
        })
    }

    /// Prior with an explicit covariance matrix instead of `(1/lambda) I`.
    pub fn from_moments(mean: Vec<S>, covariance: Matrix<S>, obs_noise_var: S) -> Result<Self> {
        let dim = mean.len();
        if covariance.rows() != dim || covariance.cols() != dim {
            return Err(Error::Config("covariance shape must match mean length".into()));
        }
        if covariance.max_abs_asymmetry() > S::from_f64_lossy(1e-10) {
            return Err(Error::Config("prior covariance must be symmetric".into()));
        }
        let l = linalg::cholesky_jittered(&covariance)?;
        let precision = linalg::spd_inverse(&l);
        let precision_mean = precision.mat_vec(&mean);
        Ok(Self {
            obs_noise_var,
            rounds_seen: 0,
            precision,
            precision_mean,
            mean,
            covariance,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn rounds_seen(&self) -> usize {
        self.rounds_seen
    }

    pub fn obs_noise_var(&self) -> S {
        self.obs_noise_var
    }

    pub fn mean(&self) -> &[S] {
        &self.mean
    }

    pub fn covariance(&self) -> &Matrix<S> {
        &self.covariance
    }

    /// Posterior mean; with a zero prior mean this equals the ridge
    /// regression solution on all data seen so far.
    pub fn map_estimate(&self) -> Vec<S> {
        self.mean.clone()
    }

    /// Conjugate update from one round of regression rows `x` and rewards
    /// `r`. Returns a new state; the input is unchanged.
    pub fn update(&self, x: &Matrix<S>, r: &[S]) -> Result<Self> {
        if x.cols() != self.dim() {
            return Err(Error::Contract(format!(
                "design has {} columns, expected {}",
                x.cols(),
                self.dim()
            )));
        }
        if x.rows() != r.len() {
            return Err(Error::Contract(format!(
                "design has {} rows but {} rewards",
                x.rows(),
                r.len()
            )));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("rewards must be finite".into()));
        }

        let inv_var = S::one() / self.obs_noise_var;
        let mut precision = self.precision.clone();
        let d = self.dim();
        for row_idx in 0..x.rows() {
            let row = x.row(row_idx);
            // Rows are sparse (at most a couple of nonzeros for design rows);
            // accumulate the outer product over nonzero entries only.
            for a in 0..d {
                let va = row[a];
                if va == S::zero() {
                    continue;
                }
                for b in a..d {
                    let vb = row[b];
                    if vb == S::zero() {
                        continue;
                    }
                    let contrib = va * vb * inv_var;
                    precision[(a, b)] += contrib;
                    if a != b {
                        precision[(b, a)] += contrib;
                    }
                }
            }
        }
        let mut precision_mean = self.precision_mean.clone();
        let xtr = x.t_mat_vec(r);
        linalg::axpy(inv_var, &xtr, &mut precision_mean);

        let l = linalg::cholesky_jittered(&precision)?;
        let mean = linalg::spd_solve(&l, &precision_mean);
        let mut covariance = linalg::spd_inverse(&l);
        covariance.symmetrize();

        Ok(Self {
            obs_noise_var: self.obs_noise_var,
            rounds_seen: self.rounds_seen + 1,
            precision,
            precision_mean,
            mean,
            covariance,
        })
    }

    /// Exact Gaussian draw `mean + L xi` where `L L^T = covariance`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<S>> {
        let l = linalg::cholesky_jittered(&self.covariance)?;
        let xi: Vec<S> = (0..self.dim()).map(|_| S::standard_normal(rng)).collect();
        let mut draw = self.mean.clone();
        for i in 0..self.dim() {
            let mut acc = S::zero();
            for k in 0..=i {
                acc += l[(i, k)] * xi[k];
            }
            draw[i] += acc;
        }
        Ok(draw)
    }
}
