//! Quantitative evaluation of runs: consensus errors and their theoretical
//! bounds, entropically regularized transport distances between posterior
//! estimates, grid-based reference posteriors, and accuracy curves.

mod accuracy;
mod reference;
mod sinkhorn;

pub use accuracy::{accuracy_curve, accuracy_of_params, AccuracyPoint, PredictiveTracker};
pub use reference::{grid_posterior, histogram_on_grid, GridSpec};
pub use sinkhorn::{
    sinkhorn_distance, sinkhorn_divergence, DiscreteDistribution, SinkhornKernel, SinkhornOutcome,
    SinkhornParams,
};

use crate::error::{Error, Result};
use crate::models::Model;
use crate::sampler::{dula_step, NetworkState};
use crate::schedules::StepSchedule;
use crate::topology::Graph;

/// Exponent above which `exp(x)` would overflow; the corresponding bound
/// term is reported as exactly 0 instead.
const EXP_OVERFLOW: f64 = 700.0;

/// Squared norm of the disagreement component: `w` minus the all-agents
/// mean, per coordinate. Invariant under adding a common vector to every
/// agent.
pub fn consensus_error(w: &[f64], n: usize, d_w: usize) -> f64 {
    assert_eq!(w.len(), n * d_w, "stacked state has wrong length");
    let mut total = 0.0;
    for dd in 0..d_w {
        let mean: f64 = (0..n).map(|i| w[i * d_w + dd]).sum::<f64>() / n as f64;
        total += (0..n).map(|i| (w[i * d_w + dd] - mean).powi(2)).sum::<f64>();
    }
    total
}

/// Constants of the consensus-error bound
/// `E|w~_{k+1}|^2 <= W3 / exp(W1 (k+1)^(1-d1)) + W2 / (k+1)^(d2-2d1)`
/// together with the merged-rate constant `W4` giving
/// `(W2 + W4) / (k+1)^(d2-2d1)`.
#[derive(Debug, Clone, Copy)]
pub struct ConsensusBoundConstants {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    /// Present only when `d2 - 2 d1 > 0` (otherwise the merged rate form is
    /// vacuous).
    pub w4: Option<f64>,
    pub kbar: u64,
    pub delta1: f64,
    pub delta2: f64,
}

/// Evaluate the closed-form bound constants for a connected graph and a
/// decaying consensus step. `e_w0_sq` is `E |w~_0|^2` (0 for a common
/// deterministic initialization).
pub fn bound_constants(
    graph: &Graph,
    schedule: &StepSchedule,
    mu_g: f64,
    d_w: usize,
    e_w0_sq: f64,
) -> Result<ConsensusBoundConstants> {
    let n = graph.n() as f64;
    let lambda2 = graph.spectral_summary().lambda2;
    if !graph.is_connected() || lambda2 <= 0.0 {
        return Err(Error::BoundUnavailable(
            "consensus bound requires a connected graph".into(),
        ));
    }
    let (a, b, d1, d2) = (schedule.a, schedule.b, schedule.delta1, schedule.delta2);
    if d1 <= 0.0 {
        return Err(Error::BoundUnavailable(
            "the closed-form constants require delta1 > 0 (beta_k must decay)".into(),
        ));
    }
    if !(mu_g > 0.0) {
        return Err(Error::InvalidParameter("mu_g must be positive".into()));
    }
    let blam = b * lambda2;
    if blam >= 1.0 {
        return Err(Error::BoundUnavailable(format!(
            "requires b * lambda2 < 1, got {blam}"
        )));
    }

    let w1 = blam / (1.0 - d1);
    // mu_zeta = 2 n^2 a (2 d_w / sqrt(1 - b lambda2) + n a mu_g) / (b lambda2)
    let mu_zeta = 2.0 * n * n * a * (2.0 * d_w as f64 / (1.0 - blam).sqrt() + n * a * mu_g) / blam;
    let w2 = mu_zeta * (d2 - d1) / (blam * d1) * (w1 * 2f64.powf(1.0 - d1)).exp();
    let kbar = ((d2 - d1) / blam).powf(1.0 / (1.0 - d1)).ceil() as u64;
    let tail: f64 = (0..=kbar)
        .map(|l| (1.0 - blam).powi(-(l as i32)) / ((l + 1) as f64).powf(d2 - d1))
        .sum();
    let w3 = w1.exp() * (e_w0_sq + mu_zeta * tail);

    let rate_exp = d2 - 2.0 * d1;
    let w4 = (rate_exp > 0.0).then(|| {
        w3 * (-rate_exp / (1.0 - d1)).exp() * (rate_exp / blam).powf(rate_exp / (1.0 - d1))
    });

    Ok(ConsensusBoundConstants {
        w1,
        w2,
        w3,
        w4,
        kbar,
        delta1: d1,
        delta2: d2,
    })
}

/// Evaluation of the consensus bound at one iteration.
#[derive(Debug, Clone, Copy)]
pub struct BoundEval {
    /// `W3 / exp(W1 (k+1)^(1-d1)) + W2 / (k+1)^(d2-2d1)`.
    pub two_term: f64,
    /// `(W2 + W4) / (k+1)^(d2-2d1)`, when `W4` exists.
    pub merged: Option<f64>,
    /// True when `d2 - 2 d1 <= 0`, i.e. the bound does not decay.
    pub vacuous: bool,
}

/// Evaluate the bound at iteration `k`. The exponential term is computed in
/// the log domain and reported as 0 once its exponent would overflow.
pub fn consensus_bound(c: &ConsensusBoundConstants, k: u64) -> BoundEval {
    let kp1 = (k + 1) as f64;
    let exponent = c.w1 * kp1.powf(1.0 - c.delta1);
    let exp_term = if exponent > EXP_OVERFLOW {
        0.0
    } else {
        c.w3 / exponent.exp()
    };
    let rate_exp = c.delta2 - 2.0 * c.delta1;
    let poly_term = c.w2 / kp1.powf(rate_exp);
    BoundEval {
        two_term: exp_term + poly_term,
        merged: c.w4.map(|w4| (c.w2 + w4) / kp1.powf(rate_exp)),
        vacuous: rate_exp <= 0.0,
    }
}

/// Empirical gradient-disagreement constant from a pilot run:
/// `max_k |g~(w_k)|^2 / (n (1+k)^d2)` over a short full-batch run.
/// Advisory only; it feeds the bound constants, never the sampler.
pub fn estimate_mu_g(
    graph: &Graph,
    schedule: &StepSchedule,
    model: &dyn Model,
    seed: u64,
    iterations: u64,
) -> Result<f64> {
    let n = graph.n();
    let d = model.d_w();
    let shard_lens: Vec<usize> = (0..n).map(|i| model.shard_len(i)).collect();
    let mut state = NetworkState::new(n, d, seed, &shard_lens);
    let mut mu = 0.0f64;
    for k in 0..iterations {
        let rec = dula_step(&mut state, graph, schedule, model, 0)?;
        // Disagreement of the recorded gradients (evaluated at w_k).
        let mut dis = 0.0;
        for dd in 0..d {
            let mean: f64 = (0..n).map(|i| rec.grads[i * d + dd]).sum::<f64>() / n as f64;
            dis += (0..n)
                .map(|i| (rec.grads[i * d + dd] - mean).powi(2))
                .sum::<f64>();
        }
        let ratio = dis / (n as f64 * (1.0 + k as f64).powf(schedule.delta2));
        mu = mu.max(ratio);
    }
    Ok(mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::QuadraticGaussian;

    #[test]
    fn consensus_error_hand_cases() {
        // All agents equal.
        assert_eq!(consensus_error(&[1.5, 1.5, 1.5], 3, 1), 0.0);
        // n = 2, d = 1, w = [0, 2]: disagreement [-1, 1], squared norm 2.
        assert_eq!(consensus_error(&[0.0, 2.0], 2, 1), 2.0);
    }

    #[test]
    fn consensus_error_shift_invariance_and_quadratic_scaling() {
        let w = [0.3, -1.0, 2.0, 0.5, 0.1, -0.4];
        let base = consensus_error(&w, 3, 2);
        let shifted: Vec<f64> = w
            .iter()
            .enumerate()
            .map(|(i, x)| x + if i % 2 == 0 { 7.0 } else { -2.0 })
            .collect();
        assert!((consensus_error(&shifted, 3, 2) - base).abs() < 1e-9);

        // Scaling the disagreement component by c scales the error by c^2.
        let mean = [(w[0] + w[2] + w[4]) / 3.0, (w[1] + w[3] + w[5]) / 3.0];
        let c = 3.0;
        let scaled: Vec<f64> = w
            .iter()
            .enumerate()
            .map(|(i, x)| mean[i % 2] + c * (x - mean[i % 2]))
            .collect();
        assert!((consensus_error(&scaled, 3, 2) - c * c * base).abs() < 1e-9);
    }

    #[test]
    fn bound_constants_match_direct_evaluation() {
        let graph = Graph::ring(5).unwrap();
        let s = StepSchedule::new(0.01, 0.2, 0.05, 0.55);
        let c = bound_constants(&graph, &s, 1.0, 2, 0.0).unwrap();
        // W1 = 0.2 * 1.381966 / 0.95
        assert!((c.w1 - 0.2909402129).abs() < 1e-9);
        // kbar = ceil((0.5 / 0.2763932)^(1/0.95)) = 2
        assert_eq!(c.kbar, 2);
        assert!(c.w2 > 0.0 && c.w3 > 0.0);
        // W3 >= exp(W1) * E|w~_0|^2 with the sum nonnegative.
        let c2 = bound_constants(&graph, &s, 1.0, 2, 3.0).unwrap();
        assert!(c2.w3 >= c.w1.exp() * 3.0);
    }

    #[test]
    fn bound_unavailable_cases() {
        let graph = Graph::ring(5).unwrap();
        let constant_beta = StepSchedule::new(0.01, 0.2, 0.0, 0.7);
        assert!(matches!(
            bound_constants(&graph, &constant_beta, 1.0, 2, 0.0),
            Err(Error::BoundUnavailable(_))
        ));
        let too_big_b = StepSchedule::new(0.01, 0.8, 0.05, 0.7);
        assert!(matches!(
            bound_constants(&graph, &too_big_b, 1.0, 2, 0.0),
            Err(Error::BoundUnavailable(_))
        ));
        let disconnected = Graph::new(4, &[(0, 1), (2, 3)]).unwrap();
        let s = StepSchedule::new(0.01, 0.2, 0.05, 0.7);
        assert!(matches!(
            bound_constants(&disconnected, &s, 1.0, 2, 0.0),
            Err(Error::BoundUnavailable(_))
        ));
    }

    #[test]
    fn bound_evaluation_terms() {
        let graph = Graph::ring(5).unwrap();
        let s = StepSchedule::new(0.01, 0.2, 0.05, 0.7);
        let c = bound_constants(&graph, &s, 0.5, 2, 0.0).unwrap();

        // k = 0: W3/exp(W1) + W2.
        let at0 = consensus_bound(&c, 0);
        assert!((at0.two_term - (c.w3 / c.w1.exp() + c.w2)).abs() < 1e-12);
        assert!(!at0.vacuous);

        // Far out the polynomial term dominates (exponential < 1% of total).
        let far = consensus_bound(&c, 1_000_000);
        let poly = c.w2 / (1_000_001f64).powf(c.delta2 - 2.0 * c.delta1);
        assert!(far.two_term - poly < 0.01 * far.two_term);

        // The merged form dominates the two-term bound everywhere sampled.
        let mut k = 0u64;
        while k <= 1_000_000 {
            let eval = consensus_bound(&c, k);
            assert!(eval.merged.unwrap() >= eval.two_term - 1e-12, "k = {k}");
            k = if k == 0 { 1 } else { k * 3 };
        }

        // Overflow guard: gigantic iteration counts must not produce NaN.
        let huge = consensus_bound(&c, u64::MAX / 2);
        assert!(huge.two_term.is_finite());
    }

    #[test]
    fn pilot_mu_g_is_positive_and_finite() {
        let graph = Graph::ring(5).unwrap();
        let s = StepSchedule::new(0.05, 0.2, 0.05, 0.7);
        let model = QuadraticGaussian::isotropic(2, 5);
        let mu = estimate_mu_g(&graph, &s, &model, 7, 200).unwrap();
        assert!(mu.is_finite() && mu > 0.0);
    }
}
