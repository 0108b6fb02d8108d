//! Grid discretizations of two-dimensional posteriors.
//!
//! The reference posterior is `exp(-U)` evaluated at the cell centers of a
//! rectangular grid and normalized to sum 1; sampled posteriors are binned
//! onto the same grid so both sides of a transport comparison share one
//! support.

use super::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::models::Model;

/// Rectangular grid over `[x_min, x_max] x [y_min, y_max]` with square
/// cells of side `resolution`.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub resolution: f64,
}

impl GridSpec {
    /// The window that covers both posterior modes of the mixture target:
    /// `[-1.5, 2.5] x [-3, 3]`.
    pub fn mixture_window(resolution: f64) -> Self {
        Self {
            x_min: -1.5,
            x_max: 2.5,
            y_min: -3.0,
            y_max: 3.0,
            resolution,
        }
    }

    pub fn cells(&self) -> (usize, usize) {
        let nx = ((self.x_max - self.x_min) / self.resolution).round() as usize;
        let ny = ((self.y_max - self.y_min) / self.resolution).round() as usize;
        (nx.max(1), ny.max(1))
    }

    /// Row-major cell centers, `nx * ny` points in `R^2`.
    pub fn centers(&self) -> Vec<f64> {
        let (nx, ny) = self.cells();
        let mut pts = Vec::with_capacity(nx * ny * 2);
        for ix in 0..nx {
            for iy in 0..ny {
                pts.push(self.x_min + (ix as f64 + 0.5) * self.resolution);
                pts.push(self.y_min + (iy as f64 + 0.5) * self.resolution);
            }
        }
        pts
    }

    /// Cell index of a point, clamped into the grid so boundary samples
    /// keep their mass.
    pub fn cell_of(&self, x: f64, y: f64) -> usize {
        let (nx, ny) = self.cells();
        let ix = (((x - self.x_min) / self.resolution).floor() as i64).clamp(0, nx as i64 - 1);
        let iy = (((y - self.y_min) / self.resolution).floor() as i64).clamp(0, ny as i64 - 1);
        ix as usize * ny + iy as usize
    }
}

/// Normalized `exp(-U)` over the grid cell centers: the reference posterior
/// for a two-dimensional model. Log densities are shifted by their maximum
/// before exponentiation, so flat tails cannot underflow the whole grid.
pub fn grid_posterior(model: &dyn Model, grid: &GridSpec) -> Result<DiscreteDistribution> {
    if model.d_w() != 2 {
        return Err(Error::InvalidParameter(
            "grid posteriors are defined for two-dimensional models".into(),
        ));
    }
    let centers = grid.centers();
    let n_cells = centers.len() / 2;
    let mut log_dens = Vec::with_capacity(n_cells);
    for c in 0..n_cells {
        log_dens.push(model.log_posterior_unnormalized(&centers[c * 2..c * 2 + 2])?);
    }
    let max = log_dens.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let masses: Vec<f64> = log_dens.iter().map(|l| (l - max).exp()).collect();
    DiscreteDistribution::from_unnormalized(2, centers, masses)
}

/// Two-dimensional histogram of samples on the grid support; out-of-window
/// samples are clamped into the boundary cells.
pub fn histogram_on_grid<'a, I>(samples: I, grid: &GridSpec) -> Result<DiscreteDistribution>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let centers = grid.centers();
    let n_cells = centers.len() / 2;
    let mut counts = vec![0.0; n_cells];
    let mut total = 0usize;
    for w in samples {
        if w.len() != 2 {
            return Err(Error::InvalidParameter(
                "histogram samples must be two-dimensional".into(),
            ));
        }
        counts[grid.cell_of(w[0], w[1])] += 1.0;
        total += 1;
    }
    if total == 0 {
        return Err(Error::InvalidParameter("no samples to bin".into()));
    }
    DiscreteDistribution::from_unnormalized(2, centers, counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::GaussianMixtureTiedMeans;

    #[test]
    fn grid_geometry() {
        let g = GridSpec::mixture_window(0.1);
        assert_eq!(g.cells(), (40, 60));
        let centers = g.centers();
        assert_eq!(centers.len(), 40 * 60 * 2);
        assert!((centers[0] - -1.45).abs() < 1e-12);
        assert!((centers[1] - -2.95).abs() < 1e-12);

        // Clamping keeps stray samples in the boundary cells.
        assert_eq!(g.cell_of(-100.0, -100.0), 0);
        assert_eq!(g.cell_of(100.0, 100.0), 40 * 60 - 1);
    }

    #[test]
    fn reference_posterior_normalizes_and_peaks_near_the_modes() {
        // A draw representative of the generating process (sample variance
        // close to the mixture's 2.25); unrepresentative 100-point draws
        // can legitimately move the maximum onto the merged ridge.
        let data = GaussianMixtureTiedMeans::generate_data(13, 100, 0.0, 1.0);
        let model = GaussianMixtureTiedMeans::new(vec![data]);
        let grid = GridSpec::mixture_window(0.05);
        let dist = grid_posterior(&model, &grid).unwrap();

        let total: f64 = dist.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);

        let argmax = (0..dist.len())
            .max_by(|&a, &b| dist.weights()[a].partial_cmp(&dist.weights()[b]).unwrap())
            .unwrap();
        let p = dist.point(argmax);
        let near_mode_a = ((p[0] - 0.0).powi(2) + (p[1] - 1.0).powi(2)).sqrt() < 0.2;
        let near_mode_b = ((p[0] - 1.0).powi(2) + (p[1] + 1.0).powi(2)).sqrt() < 0.2;
        assert!(
            near_mode_a || near_mode_b,
            "argmax at ({}, {})",
            p[0],
            p[1]
        );

        // Both mode neighborhoods carry real mass in the true posterior.
        let (mut mass_a, mut mass_b) = (0.0, 0.0);
        for i in 0..dist.len() {
            let q = dist.point(i);
            if ((q[0]).powi(2) + (q[1] - 1.0).powi(2)).sqrt() < 0.3 {
                mass_a += dist.weights()[i];
            }
            if ((q[0] - 1.0).powi(2) + (q[1] + 1.0).powi(2)).sqrt() < 0.3 {
                mass_b += dist.weights()[i];
            }
        }
        assert!(mass_a > 0.05 && mass_b > 0.05, "{mass_a} / {mass_b}");
    }

    #[test]
    fn histogram_counts_and_clamping() {
        let grid = GridSpec::mixture_window(0.5);
        let samples: Vec<Vec<f64>> = vec![vec![0.1, 0.9], vec![0.1, 0.9], vec![9.0, 9.0]];
        let hist = histogram_on_grid(samples.iter().map(|s| s.as_slice()), &grid).unwrap();
        let total: f64 = hist.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let w_at = |x: f64, y: f64| hist.weights()[grid.cell_of(x, y)];
        assert!((w_at(0.1, 0.9) - 2.0 / 3.0).abs() < 1e-12);
        assert!((w_at(2.4, 2.9) - 1.0 / 3.0).abs() < 1e-12);
    }
}
