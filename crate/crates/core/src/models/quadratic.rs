//! Gaussian test target with a known precision matrix.
//!
//! The agents share the quadratic potential `U(w) = 1/2 w' P w` equally:
//! `U_i(w) = 1/2 w' (P/n) w`, so the stationary target is exactly
//! `N(0, P^-1)` and every constant of the convergence theory is available
//! in closed form. Used as the oracle model in statistical tests; it has no
//! data, so mini-batch arguments are ignored.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{ensure_finite, Model};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct QuadraticGaussian {
    precision: DMatrix<f64>,
    n_agents: usize,
    lambda_max: f64,
}

impl QuadraticGaussian {
    /// Target `N(0, I)` in `d_w` dimensions shared by `n_agents` agents.
    pub fn isotropic(d_w: usize, n_agents: usize) -> Self {
        Self::with_precision(DMatrix::identity(d_w, d_w), n_agents)
    }

    /// Target `N(0, precision^-1)`; the matrix must be symmetric positive
    /// definite.
    pub fn with_precision(precision: DMatrix<f64>, n_agents: usize) -> Self {
        assert!(n_agents >= 1);
        assert_eq!(precision.nrows(), precision.ncols());
        let eig = SymmetricEigen::new(precision.clone());
        let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        Self {
            precision,
            n_agents,
            lambda_max,
        }
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }
}

impl Model for QuadraticGaussian {
    fn d_w(&self) -> usize {
        self.precision.nrows()
    }

    fn n_agents(&self) -> usize {
        self.n_agents
    }

    fn shard_len(&self, _agent: usize) -> usize {
        0
    }

    fn local_grad(&self, agent: usize, w: &[f64], _batch: Option<&[usize]>) -> Result<Vec<f64>> {
        ensure_finite(w, self.d_w())?;
        if agent >= self.n_agents {
            return Err(Error::InvalidParameter(format!("agent {agent} out of range")));
        }
        let wv = DVector::from_column_slice(w);
        let g = &self.precision * wv / self.n_agents as f64;
        Ok(g.iter().copied().collect())
    }

    fn local_potential(&self, agent: usize, w: &[f64]) -> Result<f64> {
        ensure_finite(w, self.d_w())?;
        if agent >= self.n_agents {
            return Err(Error::InvalidParameter(format!("agent {agent} out of range")));
        }
        let wv = DVector::from_column_slice(w);
        Ok(0.5 * (wv.transpose() * &self.precision * &wv)[(0, 0)] / self.n_agents as f64)
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(self.lambda_max / self.n_agents as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::global_grad;

    #[test]
    fn identity_precision_single_agent_gradient_is_w() {
        let model = QuadraticGaussian::isotropic(3, 1);
        let w = [0.5, -2.0, 1.0];
        assert_eq!(model.local_grad(0, &w, None).unwrap(), w.to_vec());
    }

    #[test]
    fn scaled_precision_global_gradient() {
        let model = QuadraticGaussian::with_precision(DMatrix::identity(2, 2) * 2.0, 4);
        let g = global_grad(&model, &[1.0, -3.0]).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-12);
        assert!((g[1] + 6.0).abs() < 1e-12);
        assert_eq!(model.lipschitz(), Some(0.5));
    }

    #[test]
    fn potential_difference_is_half_norm() {
        let model = QuadraticGaussian::isotropic(2, 1);
        let at_w = model.log_posterior_unnormalized(&[1.0, 2.0]).unwrap();
        let at_0 = model.log_posterior_unnormalized(&[0.0, 0.0]).unwrap();
        assert!((at_w - at_0 + 0.5 * 5.0).abs() < 1e-12);
    }
}
