//! Entropically regularized optimal transport between discrete
//! distributions, computed by Sinkhorn matrix scaling.
//!
//! The reported distance is the transport cost `sum_ij T_ij C_ij` of the
//! converged plan under the squared-Euclidean ground cost (the entropy term
//! is not included). Two kernel conventions are supported, selected by
//! [`SinkhornKernel`]: the default reads `lambda` as the regularization
//! weight (`K = exp(-C / lambda)`, sharper plans for smaller `lambda`);
//! the alternative reads it as the inverse weight (`K = exp(-lambda C)`).
//!
//! Scaling runs in the plain domain while the scaling vectors stay finite
//! and positive, and restarts in the log domain otherwise, so sharply
//! regularized problems still converge.

use crate::error::{Error, Result};

/// Weighted atoms in `R^dim`; weights are nonnegative and sum to one.
#[derive(Debug, Clone)]
pub struct DiscreteDistribution {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    /// `points` is row-major `len * dim`. Weights must be nonnegative and
    /// sum to 1 within 1e-12.
    pub fn new(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || weights.is_empty() || points.len() != weights.len() * dim {
            return Err(Error::InvalidParameter(
                "support points and weights have inconsistent shapes".into(),
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            dim,
            points,
            weights,
        })
    }

    /// Normalize nonnegative masses to sum 1.
    pub fn from_unnormalized(dim: usize, points: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter(
                "total mass must be positive".into(),
            ));
        }
        let weights = masses.iter().map(|m| m / total).collect();
        Self::new(dim, points, weights)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Drop zero-weight atoms (their rows/columns of the plan are empty).
    fn pruned(&self) -> (Vec<&[f64]>, Vec<f64>) {
        let mut pts = Vec::new();
        let mut ws = Vec::new();
        for i in 0..self.len() {
            if self.weights[i] > 0.0 {
                pts.push(self.point(i));
                ws.push(self.weights[i]);
            }
        }
        (pts, ws)
    }
}

/// How the regularization parameter enters the Gibbs kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SinkhornKernel {
    /// `K = exp(-C / lambda)`: `lambda` is the entropic weight.
    #[default]
    RegularizedCost,
    /// `K = exp(-lambda C)`: `lambda` is the inverse entropic weight.
    InverseRegularized,
}

#[derive(Debug, Clone, Copy)]
pub struct SinkhornParams {
    pub lambda: f64,
    pub max_iter: usize,
    /// Max-norm marginal violation at which scaling stops.
    pub tol: f64,
    pub kernel: SinkhornKernel,
}

impl Default for SinkhornParams {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            max_iter: 10_000,
            tol: 1e-9,
            kernel: SinkhornKernel::default(),
        }
    }
}

/// Result of one Sinkhorn solve.
#[derive(Debug, Clone, Copy)]
pub struct SinkhornOutcome {
    /// Transport cost `sum_ij T_ij C_ij` of the final plan.
    pub cost: f64,
    /// Whether the marginal violation dropped below tolerance within the
    /// iteration budget.
    pub converged: bool,
    pub iterations: usize,
    pub marginal_violation: f64,
}

/// Entropically regularized transport cost between `p` and `q`.
pub fn sinkhorn_distance(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    params: &SinkhornParams,
) -> Result<SinkhornOutcome> {
    if p.dim != q.dim {
        return Err(Error::InvalidParameter(
            "distributions live in different dimensions".into(),
        ));
    }
    if !(params.lambda > 0.0) {
        return Err(Error::InvalidParameter("lambda must be positive".into()));
    }
    let (pa, a) = p.pruned();
    let (pb, b) = q.pruned();
    if pa.is_empty() || pb.is_empty() {
        return Err(Error::InvalidParameter("empty support".into()));
    }
    let m = pa.len();
    let n = pb.len();
    let inv_eps = match params.kernel {
        SinkhornKernel::RegularizedCost => 1.0 / params.lambda,
        SinkhornKernel::InverseRegularized => params.lambda,
    };

    // Squared-Euclidean ground cost, row-major m x n.
    let mut cost = vec![0.0; m * n];
    for (i, pi) in pa.iter().enumerate() {
        for (j, pj) in pb.iter().enumerate() {
            cost[i * n + j] = pi
                .iter()
                .zip(pj.iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
        }
    }

    // Retry in the log domain both when the scaling vectors leave f64 range
    // and when kernel underflow (entries truncated to exact 0) leaves the
    // plain iteration chasing an infeasible plan.
    match scale_plain(&a, &b, &cost, inv_eps, params) {
        Some(outcome) if outcome.converged => Ok(outcome),
        _ => Ok(scale_log_domain(&a, &b, &cost, inv_eps, params)),
    }
}

/// Debiased divergence `d(P,Q) - (d(P,P) + d(Q,Q)) / 2`; vanishes at `P = Q`
/// even though the regularized cost itself does not.
pub fn sinkhorn_divergence(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    params: &SinkhornParams,
) -> Result<f64> {
    let pq = sinkhorn_distance(p, q, params)?.cost;
    let pp = sinkhorn_distance(p, p, params)?.cost;
    let qq = sinkhorn_distance(q, q, params)?.cost;
    Ok(pq - 0.5 * (pp + qq))
}

/// Classic scaling `v = b ./ (K' u)`, `u = a ./ (K v)`. Returns `None` if
/// the scaling vectors leave the representable range, signalling the caller
/// to redo the solve in the log domain.
fn scale_plain(
    a: &[f64],
    b: &[f64],
    cost: &[f64],
    inv_eps: f64,
    params: &SinkhornParams,
) -> Option<SinkhornOutcome> {
    let m = a.len();
    let n = b.len();
    let kernel: Vec<f64> = cost.iter().map(|c| (-c * inv_eps).exp()).collect();
    let mut u = vec![1.0; m];
    let mut v = vec![1.0; n];
    let mut kv = vec![0.0; m];
    let mut ktu = vec![0.0; n];

    let mut violation = f64::INFINITY;
    let mut iterations = 0;
    for it in 1..=params.max_iter {
        iterations = it;
        // u update: rows become exact.
        for i in 0..m {
            kv[i] = (0..n).map(|j| kernel[i * n + j] * v[j]).sum();
            u[i] = a[i] / kv[i];
        }
        // v update: columns become exact.
        for j in 0..n {
            ktu[j] = (0..m).map(|i| kernel[i * n + j] * u[i]).sum();
            v[j] = b[j] / ktu[j];
        }
        if u.iter().chain(v.iter()).any(|x| !x.is_finite() || *x <= 0.0) {
            return None;
        }
        // Row marginals moved by the v update; measure their violation.
        violation = 0.0f64;
        for i in 0..m {
            let row: f64 = (0..n).map(|j| u[i] * kernel[i * n + j] * v[j]).sum();
            violation = violation.max((row - a[i]).abs());
        }
        if violation < params.tol {
            break;
        }
    }

    let mut total = 0.0;
    for i in 0..m {
        for j in 0..n {
            total += u[i] * kernel[i * n + j] * v[j] * cost[i * n + j];
        }
    }
    if !total.is_finite() {
        return None;
    }
    Some(SinkhornOutcome {
        cost: total,
        converged: violation < params.tol,
        iterations,
        marginal_violation: violation,
    })
}

/// The same fixed point iterated on `log u`, `log v` with log-sum-exp
/// reductions; immune to overflow for sharp kernels.
fn scale_log_domain(
    a: &[f64],
    b: &[f64],
    cost: &[f64],
    inv_eps: f64,
    params: &SinkhornParams,
) -> SinkhornOutcome {
    let m = a.len();
    let n = b.len();
    let log_a: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let log_b: Vec<f64> = b.iter().map(|x| x.ln()).collect();
    let mut log_u = vec![0.0; m];
    let mut log_v = vec![0.0; n];

    let lse = |terms: &mut dyn Iterator<Item = f64>| -> f64 {
        let vals: Vec<f64> = terms.collect();
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        max + vals.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    };

    let mut violation = f64::INFINITY;
    let mut iterations = 0;
    for it in 1..=params.max_iter {
        iterations = it;
        for i in 0..m {
            let s = lse(&mut (0..n).map(|j| log_v[j] - cost[i * n + j] * inv_eps));
            log_u[i] = log_a[i] - s;
        }
        for j in 0..n {
            let s = lse(&mut (0..m).map(|i| log_u[i] - cost[i * n + j] * inv_eps));
            log_v[j] = log_b[j] - s;
        }
        violation = 0.0f64;
        for i in 0..m {
            let row = lse(&mut (0..n).map(|j| log_u[i] + log_v[j] - cost[i * n + j] * inv_eps));
            violation = violation.max((row.exp() - a[i]).abs());
        }
        if violation < params.tol {
            break;
        }
    }

    let mut total = 0.0;
    for i in 0..m {
        for j in 0..n {
            let log_t = log_u[i] + log_v[j] - cost[i * n + j] * inv_eps;
            total += log_t.exp() * cost[i * n + j];
        }
    }
    SinkhornOutcome {
        cost: total,
        converged: violation < params.tol,
        iterations,
        marginal_violation: violation,
    }
}
