//! Two-component Gaussian mixture with tied means.
//!
//! Observation model `x ~ 0.5 N(theta1, sx^2) + 0.5 N(theta1 + theta2, sx^2)`
//! with priors `theta1 ~ N(0, s1^2)`, `theta2 ~ N(0, s2^2)`. The posterior
//! over `w = [theta1, theta2]` given data drawn at `theta1 = 0, theta2 = 1`
//! is bimodal, with negatively correlated modes near `[0, 1]` and `[1, -1]`.

use rand::SeedableRng;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{batch_scale, ensure_finite, Model};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct GaussianMixtureTiedMeans {
    sigma1_sq: f64,
    sigma2_sq: f64,
    sigmax_sq: f64,
    shards: Vec<Vec<f64>>,
}

impl GaussianMixtureTiedMeans {
    /// Model with the standard variances `s1^2 = 10`, `s2^2 = 1`, `sx^2 = 2`.
    pub fn new(shards: Vec<Vec<f64>>) -> Self {
        Self::with_variances(shards, 10.0, 1.0, 2.0)
    }

    pub fn with_variances(shards: Vec<Vec<f64>>, sigma1_sq: f64, sigma2_sq: f64, sigmax_sq: f64) -> Self {
        assert!(!shards.is_empty(), "at least one shard required");
        Self {
            sigma1_sq,
            sigma2_sq,
            sigmax_sq,
            shards,
        }
    }

    /// Draw `count` observations from the mixture at the given parameters,
    /// choosing the component by a fair coin (observation noise `sx^2 = 2`).
    pub fn generate_data(seed: u64, count: usize, theta1: f64, theta2: f64) -> Vec<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let sigma_x = 2.0f64.sqrt();
        (0..count)
            .map(|_| {
                let mean = if rng.gen::<bool>() { theta1 } else { theta1 + theta2 };
                let z: f64 = StandardNormal.sample(&mut rng);
                mean + sigma_x * z
            })
            .collect()
    }

    pub fn all_observations(&self) -> Vec<f64> {
        self.shards.iter().flatten().copied().collect()
    }

    /// Responsibilities of the two components for one observation,
    /// computed with log-sum-exp so outlying data cannot underflow.
    fn responsibilities(&self, x: f64, theta1: f64, theta2: f64) -> (f64, f64) {
        let l1 = -(x - theta1).powi(2) / (2.0 * self.sigmax_sq);
        let l2 = -(x - theta1 - theta2).powi(2) / (2.0 * self.sigmax_sq);
        let m = l1.max(l2);
        let e1 = (l1 - m).exp();
        let e2 = (l2 - m).exp();
        (e1 / (e1 + e2), e2 / (e1 + e2))
    }

    fn log_likelihood_point(&self, x: f64, theta1: f64, theta2: f64) -> f64 {
        let l1 = -(x - theta1).powi(2) / (2.0 * self.sigmax_sq);
        let l2 = -(x - theta1 - theta2).powi(2) / (2.0 * self.sigmax_sq);
        let m = l1.max(l2);
        // log(0.5 e^l1 + 0.5 e^l2) - log(sqrt(2 pi sx^2))
        m + ((l1 - m).exp() + (l2 - m).exp()).ln() + 0.5f64.ln()
            - 0.5 * (2.0 * std::f64::consts::PI * self.sigmax_sq).ln()
    }

    /// Likelihood part of `-g_i`: the gradient of the shard log-likelihood.
    fn likelihood_grad(&self, points: &[f64], theta1: f64, theta2: f64) -> [f64; 2] {
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for &x in points {
            let (g1, g2) = self.responsibilities(x, theta1, theta2);
            d1 += (g1 * (x - theta1) + g2 * (x - theta1 - theta2)) / self.sigmax_sq;
            d2 += g2 * (x - theta1 - theta2) / self.sigmax_sq;
        }
        [d1, d2]
    }
}

impl Model for GaussianMixtureTiedMeans {
    fn d_w(&self) -> usize {
        2
    }

    fn n_agents(&self) -> usize {
        self.shards.len()
    }

    fn shard_len(&self, agent: usize) -> usize {
        self.shards[agent].len()
    }

    fn local_grad(&self, agent: usize, w: &[f64], batch: Option<&[usize]>) -> Result<Vec<f64>> {
        ensure_finite(w, 2)?;
        let shard = self
            .shards
            .get(agent)
            .ok_or_else(|| Error::InvalidParameter(format!("agent {agent} out of range")))?;
        let (theta1, theta2) = (w[0], w[1]);
        let n = self.n_agents() as f64;

        let (lik, scale) = match batch {
            None => (self.likelihood_grad(shard, theta1, theta2), 1.0),
            Some(idxs) => {
                let scale = batch_scale(shard.len(), idxs)?;
                let points: Vec<f64> = idxs.iter().map(|&i| shard[i]).collect();
                (self.likelihood_grad(&points, theta1, theta2), scale)
            }
        };
        let prior = [-theta1 / self.sigma1_sq, -theta2 / self.sigma2_sq];
        Ok(vec![
            -(scale * lik[0] + prior[0] / n),
            -(scale * lik[1] + prior[1] / n),
        ])
    }

    fn local_potential(&self, agent: usize, w: &[f64]) -> Result<f64> {
        ensure_finite(w, 2)?;
        let shard = self
            .shards
            .get(agent)
            .ok_or_else(|| Error::InvalidParameter(format!("agent {agent} out of range")))?;
        let (theta1, theta2) = (w[0], w[1]);
        let loglik: f64 = shard
            .iter()
            .map(|&x| self.log_likelihood_point(x, theta1, theta2))
            .sum();
        let logprior = -theta1 * theta1 / (2.0 * self.sigma1_sq)
            - theta2 * theta2 / (2.0 * self.sigma2_sq);
        Ok(-(loglik + logprior / self.n_agents() as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::test_util::assert_grad_matches_fd;

    #[test]
    fn gradient_matches_finite_differences_on_five_point_shard() {
        let data = GaussianMixtureTiedMeans::generate_data(4, 5, 0.0, 1.0);
        let model = GaussianMixtureTiedMeans::new(vec![data]);
        assert_grad_matches_fd(&model, 0, &[0.3, -0.7], 1e-5);
    }

    #[test]
    fn data_generation_moments_and_determinism() {
        let xs = GaussianMixtureTiedMeans::generate_data(1, 100, 0.0, 1.0);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        // Mixture mean 0.5, variance sx^2 + 0.25 = 2.25; 3 sigma over 100.
        assert!((mean - 0.5).abs() < 0.45, "mean {mean} outside band");

        let again = GaussianMixtureTiedMeans::generate_data(1, 100, 0.0, 1.0);
        assert_eq!(xs, again);

        // theta2 = 0 degenerates to a single Gaussian N(theta1, 2).
        let xs = GaussianMixtureTiedMeans::generate_data(2, 4000, 3.0, 0.0);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!((mean - 3.0).abs() < 0.1);
        assert!((var - 2.0).abs() < 0.2);
    }

    #[test]
    fn likelihood_gradient_vanishes_at_symmetric_configuration() {
        // Mixture symmetric about 0 when theta1 = -theta2/2; on data {-c, c}
        // the theta1-derivative of the log likelihood cancels.
        let c = 1.7;
        let model = GaussianMixtureTiedMeans::new(vec![vec![-c, c]]);
        let grad = model.likelihood_grad(&[-c, c], -0.5, 1.0);
        assert!(grad[0].abs() < 1e-12, "asymmetry {}", grad[0]);
    }

    #[test]
    fn posterior_prefers_generating_parameters() {
        let data = GaussianMixtureTiedMeans::generate_data(7, 100, 0.0, 1.0);
        let model = GaussianMixtureTiedMeans::new(vec![data]);
        let at_mode = model.log_posterior_unnormalized(&[0.0, 1.0]).unwrap();
        let off = model.log_posterior_unnormalized(&[2.0, 2.0]).unwrap();
        assert!(at_mode > off);
        // The swapped mode [1, -1] describes the same mixture components.
        let swapped = model.log_posterior_unnormalized(&[1.0, -1.0]).unwrap();
        assert!((at_mode - swapped).abs() < 3.0);
    }

    #[test]
    fn empty_shard_leaves_prior_term_only() {
        let model = GaussianMixtureTiedMeans::new(vec![vec![], vec![1.0]]);
        let g = model.local_grad(0, &[0.5, -0.25], None).unwrap();
        // -(1/n) * grad log prior with n = 2.
        assert!((g[0] - 0.5 / 10.0 / 2.0).abs() < 1e-14);
        assert!((g[1] - (-0.125)).abs() < 1e-14);
    }
}
