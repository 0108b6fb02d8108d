//! Target posteriors exposed through per-agent local gradients.
//!
//! A model splits the negative log posterior across `n` agents as
//! `U(w) = sum_i U_i(w)` with `U_i(w) = -[log p(X_i | w) + (1/n) log p(w)]`:
//! each agent owns a data shard and a `1/n` share of the prior. The sampler
//! only ever asks for `g_i = grad U_i` (full shard or a rescaled
//! mini-batch) and, for diagnostics, the unnormalized log posterior.

mod gm;
mod logreg;
mod quadratic;

pub use gm::GaussianMixtureTiedMeans;
pub use logreg::BayesianLogisticRegression;
pub use quadratic::QuadraticGaussian;

use crate::error::{Error, Result};

/// A target posterior factored across agents.
pub trait Model: Send + Sync {
    /// Parameter dimension `d_w`.
    fn d_w(&self) -> usize;

    /// Number of agents the data is partitioned across.
    fn n_agents(&self) -> usize;

    /// Number of data points in one agent's shard.
    fn shard_len(&self, agent: usize) -> usize;

    /// Local gradient `g_i(w) = grad U_i(w)` of the negative local
    /// log-posterior. With `batch = Some(indices)` (positions within the
    /// shard) the likelihood term is rescaled by `shard_len / batch_len`
    /// and the prior term is left untouched, giving an unbiased estimate
    /// of the full-shard gradient.
    fn local_grad(&self, agent: usize, w: &[f64], batch: Option<&[usize]>) -> Result<Vec<f64>>;

    /// Negative local log-posterior `U_i(w)` up to an additive constant.
    fn local_potential(&self, agent: usize, w: &[f64]) -> Result<f64>;

    /// Largest Lipschitz constant of the local gradients, when one is
    /// known in closed form.
    fn lipschitz(&self) -> Option<f64> {
        None
    }

    /// Unnormalized log posterior `-U(w) = -sum_i U_i(w)`.
    fn log_posterior_unnormalized(&self, w: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..self.n_agents() {
            total += self.local_potential(i, w)?;
        }
        Ok(-total)
    }
}

/// Sum of all local gradients: the drift of the centralized chain.
pub fn global_grad(model: &dyn Model, w: &[f64]) -> Result<Vec<f64>> {
    let mut total = vec![0.0; model.d_w()];
    for i in 0..model.n_agents() {
        let g = model.local_grad(i, w, None)?;
        for (t, gi) in total.iter_mut().zip(g) {
            *t += gi;
        }
    }
    Ok(total)
}

pub(crate) fn ensure_finite(w: &[f64], d_w: usize) -> Result<()> {
    if w.len() != d_w {
        return Err(Error::NumericInput(format!(
            "parameter vector has length {}, expected {d_w}",
            w.len()
        )));
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericInput("parameter vector is not finite".into()));
    }
    Ok(())
}

/// `shard_len / batch_len` likelihood rescale factor; errors on empty or
/// out-of-range batches.
pub(crate) fn batch_scale(shard_len: usize, batch: &[usize]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidParameter("empty mini-batch".into()));
    }
    if batch.iter().any(|&i| i >= shard_len) {
        return Err(Error::InvalidParameter(
            "mini-batch index outside the shard".into(),
        ));
    }
    Ok(shard_len as f64 / batch.len() as f64)
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::Model;

    /// Central finite differences of the local potential; the independent
    /// oracle for every analytic gradient in this module tree.
    pub fn finite_diff_local_grad(model: &dyn Model, agent: usize, w: &[f64], h: f64) -> Vec<f64> {
        let mut grad = vec![0.0; w.len()];
        let mut wp = w.to_vec();
        for j in 0..w.len() {
            wp[j] = w[j] + h;
            let up = model.local_potential(agent, &wp).unwrap();
            wp[j] = w[j] - h;
            let um = model.local_potential(agent, &wp).unwrap();
            wp[j] = w[j];
            grad[j] = (up - um) / (2.0 * h);
        }
        grad
    }

    pub fn assert_grad_matches_fd(model: &dyn Model, agent: usize, w: &[f64], rel_tol: f64) {
        let analytic = model.local_grad(agent, w, None).unwrap();
        let fd = finite_diff_local_grad(model, agent, w, 1e-5);
        for (a, f) in analytic.iter().zip(&fd) {
            let scale = a.abs().max(f.abs()).max(1.0);
            assert!(
                (a - f).abs() / scale < rel_tol,
                "gradient mismatch: analytic {a} vs finite-diff {f}"
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn global_grad_is_shard_sum() {
        let model = QuadraticGaussian::isotropic(3, 4);
        let w = [0.5, -1.0, 2.0];
        let total = global_grad(&model, &w).unwrap();
        let mut manual = vec![0.0; 3];
        for i in 0..4 {
            for (m, g) in manual.iter_mut().zip(model.local_grad(i, &w, None).unwrap()) {
                *m += g;
            }
        }
        for (t, m) in total.iter().zip(&manual) {
            assert!((t - m).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_non_finite_parameters() {
        let model = QuadraticGaussian::isotropic(2, 1);
        assert!(matches!(
            model.local_grad(0, &[f64::NAN, 0.0], None),
            Err(Error::NumericInput(_))
        ));
        assert!(matches!(
            model.local_grad(0, &[0.0], None),
            Err(Error::NumericInput(_))
        ));
    }

    #[test]
    fn minibatch_average_over_disjoint_batches_recovers_full_gradient() {
        // Deterministic partition of a 20-point shard into 4 batches of 5.
        let data = crate::models::GaussianMixtureTiedMeans::generate_data(11, 20, 0.0, 1.0);
        let model = GaussianMixtureTiedMeans::new(vec![data]);
        let w = [0.3, -0.7];
        let full = model.local_grad(0, &w, None).unwrap();
        let mut avg = vec![0.0; 2];
        for b in 0..4 {
            let batch: Vec<usize> = (0..5).map(|j| b * 5 + j).collect();
            let g = model.local_grad(0, &w, Some(&batch)).unwrap();
            for (a, gi) in avg.iter_mut().zip(g) {
                *a += gi / 4.0;
            }
        }
        for (f, a) in full.iter().zip(&avg) {
            assert!((f - a).abs() < 1e-10, "{f} vs {a}");
        }
    }

    #[test]
    fn gradient_consistency_twenty_random_points_all_models() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);

        let gm = GaussianMixtureTiedMeans::new(vec![
            GaussianMixtureTiedMeans::generate_data(1, 7, 0.0, 1.0),
            GaussianMixtureTiedMeans::generate_data(2, 7, 0.0, 1.0),
        ]);
        let synth = crate::datasets::synth_logreg(3, 30, 4, &[1.0, -2.0, 0.5, 0.0]).unwrap();
        let part = crate::datasets::partition(&synth, 2, 7).unwrap();
        let lr = BayesianLogisticRegression::from_dataset(&synth, &part).unwrap();
        let quad = QuadraticGaussian::isotropic(4, 2);

        for trial in 0..20 {
            let agent = trial % 2;
            let w2: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            test_util::assert_grad_matches_fd(&gm, agent, &w2, 1e-5);

            // Keep away from the Laplace-prior kinks at w_j = 0.
            let w4: Vec<f64> = (0..4)
                .map(|_| {
                    let mag = rng.gen_range(0.05f64..2.0);
                    if rng.gen::<bool>() {
                        mag
                    } else {
                        -mag
                    }
                })
                .collect();
            test_util::assert_grad_matches_fd(&lr, agent, &w4, 1e-5);
            test_util::assert_grad_matches_fd(&quad, agent, &w4, 1e-5);
        }
    }
}
