//! Bayesian logistic regression with a Laplace prior.
//!
//! Likelihood per sample: `y log s(w.x) + (1 - y) log(1 - s(w.x))` with the
//! logistic function `s`. The prior is Laplace with scale 1, contributing
//! `-(1/n) sum_j |w_j|` to each agent's local log posterior; its subgradient
//! at a zero coordinate is taken as 0.

use super::{batch_scale, ensure_finite, Model};
use crate::datasets::{Partition, SparseDataset, SparseRow};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BayesianLogisticRegression {
    d: usize,
    shards: Vec<Vec<SparseRow>>,
    prior_scale: f64,
}

impl BayesianLogisticRegression {
    /// One shard per agent according to `partition`.
    pub fn from_dataset(data: &SparseDataset, partition: &Partition) -> Result<Self> {
        if partition.assignment.len() != data.len() {
            return Err(Error::Data(
                "partition does not match dataset length".into(),
            ));
        }
        let mut shards = vec![Vec::new(); partition.n_agents];
        for (row, &agent) in data.rows.iter().zip(&partition.assignment) {
            shards[agent].push(row.clone());
        }
        Ok(Self {
            d: data.n_features,
            shards,
            prior_scale: 1.0,
        })
    }

    /// The whole dataset as a single shard (centralized baseline).
    pub fn single_shard(data: &SparseDataset) -> Self {
        Self {
            d: data.n_features,
            shards: vec![data.rows.clone()],
            prior_scale: 1.0,
        }
    }

    fn rows(&self, agent: usize) -> Result<&Vec<SparseRow>> {
        self.shards
            .get(agent)
            .ok_or_else(|| Error::InvalidParameter(format!("agent {agent} out of range")))
    }
}

pub fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl Model for BayesianLogisticRegression {
    fn d_w(&self) -> usize {
        self.d
    }

    fn n_agents(&self) -> usize {
        self.shards.len()
    }

    fn shard_len(&self, agent: usize) -> usize {
        self.shards[agent].len()
    }

    fn local_grad(&self, agent: usize, w: &[f64], batch: Option<&[usize]>) -> Result<Vec<f64>> {
        ensure_finite(w, self.d)?;
        let rows = self.rows(agent)?;
        let n = self.n_agents() as f64;

        let mut grad = vec![0.0; self.d];
        let mut accumulate = |row: &SparseRow, scale: f64| {
            let resid = row.label as f64 - sigmoid(row.dot(w));
            for &(idx, val) in &row.features {
                grad[(idx - 1) as usize] -= scale * resid * val;
            }
        };
        match batch {
            None => {
                for row in rows {
                    accumulate(row, 1.0);
                }
            }
            Some(idxs) => {
                let scale = batch_scale(rows.len(), idxs)?;
                for &i in idxs {
                    accumulate(&rows[i], scale);
                }
            }
        }
        // Laplace prior share: grad of (1/n) sum |w_j| / scale.
        for (g, &wj) in grad.iter_mut().zip(w) {
            *g += wj.signum() * f64::from(wj != 0.0) / (self.prior_scale * n);
        }
        Ok(grad)
    }

    fn local_potential(&self, agent: usize, w: &[f64]) -> Result<f64> {
        ensure_finite(w, self.d)?;
        let rows = self.rows(agent)?;
        let mut loglik = 0.0;
        for row in rows {
            let t = row.dot(w);
            // y log s(t) + (1-y) log(1-s(t)) = y t - softplus(t)
            loglik += row.label as f64 * t - softplus(t);
        }
        let logprior = -w.iter().map(|x| x.abs()).sum::<f64>() / self.prior_scale;
        Ok(-(loglik + logprior / self.n_agents() as f64))
    }

    fn lipschitz(&self) -> Option<f64> {
        // Hessian of the per-point negative log likelihood is
        // s(1-s) x x^T <= ||x||^2 / 4; the Laplace prior adds no curvature.
        let max_over_agents = self
            .shards
            .iter()
            .map(|rows| {
                rows.iter()
                    .map(|r| r.features.iter().map(|&(_, v)| v * v).sum::<f64>())
                    .sum::<f64>()
                    / 4.0
            })
            .fold(0.0f64, f64::max);
        Some(max_over_agents)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{parse_libsvm_str, partition, synth_logreg};
    use crate::models::test_util::assert_grad_matches_fd;

    #[test]
    fn zero_parameter_single_point_gradient() {
        // At w = 0: sigmoid = 0.5 and the prior subgradient is 0, so the
        // local gradient is -(y - 0.5) x on the touched coordinates.
        let data = parse_libsvm_str("+1 1:2 3:-1\n").unwrap();
        let p = partition(&data, 1, 0).unwrap();
        let model = BayesianLogisticRegression::from_dataset(&data, &p).unwrap();
        let g = model.local_grad(0, &[0.0, 0.0, 0.0], None).unwrap();
        assert_eq!(g, vec![-0.5 * 2.0, 0.0, -0.5 * -1.0]);
    }

    #[test]
    fn gradient_matches_finite_differences_away_from_kinks() {
        let data = synth_logreg(2, 25, 3, &[1.0, -1.0, 0.5]).unwrap();
        let p = partition(&data, 2, 1).unwrap();
        let model = BayesianLogisticRegression::from_dataset(&data, &p).unwrap();
        assert_grad_matches_fd(&model, 0, &[0.4, -0.9, 1.3], 1e-5);
        assert_grad_matches_fd(&model, 1, &[-0.2, 0.05, -1.1], 1e-5);
    }

    #[test]
    fn prior_penalizes_parameter_growth() {
        // Grow a coordinate the likelihood never touches (feature 2 has
        // value 0 everywhere): only the Laplace penalty moves.
        let data = parse_libsvm_str("+1 1:1 2:0\n").unwrap();
        let p = partition(&data, 1, 0).unwrap();
        let model = BayesianLogisticRegression::from_dataset(&data, &p).unwrap();
        let lo = model.log_posterior_unnormalized(&[0.3, 0.0]).unwrap();
        let hi = model.log_posterior_unnormalized(&[0.3, 2.0]).unwrap();
        assert!(hi < lo);
        assert!((lo - hi - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_upper_bound_dominates_curvature() {
        let data = synth_logreg(4, 40, 3, &[0.5, 0.5, 0.5]).unwrap();
        let p = partition(&data, 2, 2).unwrap();
        let model = BayesianLogisticRegression::from_dataset(&data, &p).unwrap();
        let l = model.lipschitz().unwrap();
        assert!(l > 0.0);
        // Gradient difference along a random direction is bounded by L |dw|.
        let w1 = [0.1, 0.2, -0.3];
        let w2 = [0.15, 0.18, -0.25];
        let g1 = model.local_grad(0, &w1, None).unwrap();
        let g2 = model.local_grad(0, &w2, None).unwrap();
        let dg: f64 = g1.iter().zip(&g2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let dw: f64 = w1.iter().zip(&w2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(dg <= l * dw + 1e-12);
    }
}
