//! Undirected agent communication graphs.
//!
//! A [`Graph`] holds the edge set of the network, its dense Laplacian
//! `L = D - A`, and the spectral quantities that control consensus speed:
//! the algebraic connectivity `lambda2(L)` and the largest singular value
//! `sigma_max(L)`. The consensus mixing matrix applied each round is
//! `W_k = I - beta_k * L`.
//!
//! Graphs here are small (tens of agents), so everything is dense and the
//! spectrum is computed eagerly at construction by a symmetric eigensolver.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Tolerance used to decide whether an eigenvalue is zero.
pub const EIG_ZERO_TOL: f64 = 1e-9;

/// Spectrum of the graph Laplacian.
#[derive(Debug, Clone)]
pub struct SpectralSummary {
    /// All Laplacian eigenvalues, sorted ascending. `eigenvalues[0]` is 0
    /// (up to solver tolerance) for every valid Laplacian.
    pub eigenvalues: Vec<f64>,
    /// Second-smallest eigenvalue (algebraic connectivity); positive iff
    /// the graph is connected. Defined as 0 for a single-node graph.
    pub lambda2: f64,
    /// Largest singular value of `L`; equals the largest eigenvalue since
    /// the Laplacian is symmetric positive semi-definite.
    pub sigma_max: f64,
}

/// Admissibility verdict for the consensus gain `b` (mixing matrix
/// `I - b*L` must have a single eigenvalue at 1 and the rest strictly
/// inside the unit circle; `b * sigma_max(L) < 1` is the sufficient check
/// used here).
#[derive(Debug, Clone, Copy)]
pub struct BetaVerdict {
    pub admissible: bool,
    /// `1 - b * sigma_max(L)`; positive iff admissible.
    pub margin: f64,
}

/// Undirected, unweighted communication graph on agents `0..n`.
///
/// Immutable after construction: adjacency, Laplacian, connectivity and
/// spectrum are cached eagerly, so shared references are safe to read from
/// multiple workers.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    laplacian: DMatrix<f64>,
    connected: bool,
    spectral: SpectralSummary,
}

impl Graph {
    /// Build a graph from an explicit edge list. Edges are unordered pairs;
    /// self-loops and duplicates are rejected.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTopology("agent count must be positive".into()));
        }
        let mut normalized: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return Err(Error::InvalidTopology(format!("self-loop at agent {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::InvalidTopology(format!(
                    "edge ({a},{b}) references an agent >= n = {n}"
                )));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        if normalized.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidTopology("duplicate edge".into()));
        }

        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in &normalized {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }

        // Degrees and adjacency are integers; building the Laplacian from
        // them keeps row sums exactly zero after the cast to f64.
        let mut laplacian = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            laplacian[(i, i)] = neighbors[i].len() as f64;
            for &j in &neighbors[i] {
                laplacian[(i, j)] = -1.0;
            }
        }

        let connected = bfs_connected(&neighbors);
        let spectral = spectral_of(&laplacian);

        Ok(Self {
            n,
            edges: normalized,
            neighbors,
            laplacian,
            connected,
            spectral,
        })
    }

    /// Cycle graph on `n >= 2` agents: agent `i` talks to `(i +/- 1) mod n`.
    /// `ring(2)` degenerates to the single edge `(0,1)`.
    pub fn ring(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidTopology(format!(
                "ring requires at least 2 agents, got {n}"
            )));
        }
        let mut edges = Vec::with_capacity(n);
        for i in 0..n {
            let j = (i + 1) % n;
            if i < j || n > 2 {
                edges.push((i, j));
            }
        }
        Self::new(n, &edges)
    }

    /// Single agent with no edges (the degenerate "network" used by the
    /// centralized baseline).
    pub fn singleton() -> Self {
        Self::new(1, &[]).expect("singleton graph is always valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    /// Dense graph Laplacian `L = D - A`.
    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    /// Connectivity decided by BFS from agent 0, independent of any
    /// floating-point eigenvalue tolerance.
    pub fn is_connected(&self) -> bool {
        self.connected
    }

    pub fn spectral_summary(&self) -> &SpectralSummary {
        &self.spectral
    }

    /// Check the consensus-gain condition `b * sigma_max(L) < 1` (strict,
    /// no epsilon slack; shrink `b` on rejection).
    pub fn validate_b(&self, b: f64) -> Result<BetaVerdict> {
        if !(b > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "consensus gain b must be positive, got {b}"
            )));
        }
        let margin = 1.0 - b * self.spectral.sigma_max;
        Ok(BetaVerdict {
            admissible: margin > 0.0,
            margin,
        })
    }

    /// Mixing matrix `W = I - beta * L`. Rows and columns each sum to 1
    /// for any `beta`; for admissible `beta` the spectrum lies in `(-1, 1]`
    /// with a single eigenvalue at 1.
    pub fn mixing_matrix(&self, beta: f64) -> DMatrix<f64> {
        DMatrix::<f64>::identity(self.n, self.n) - &self.laplacian * beta
    }

    /// Max-norm deviation of `I - (1/n) 1 1^T` from `L * pinv(L)`.
    ///
    /// The two sides agree for connected graphs; for disconnected graphs the
    /// returned deviation is large. Used as a test oracle for the projection
    /// onto the disagreement subspace.
    pub fn projection_identity_check(&self) -> f64 {
        let n = self.n;
        let pinv = symmetric_pseudo_inverse(&self.laplacian);
        let product = &self.laplacian * pinv;
        let mut max_dev: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let centering = if i == j { 1.0 - 1.0 / n as f64 } else { -1.0 / n as f64 };
                max_dev = max_dev.max((centering - product[(i, j)]).abs());
            }
        }
        max_dev
    }
}

fn bfs_connected(neighbors: &[Vec<usize>]) -> bool {
    let n = neighbors.len();
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    seen[0] = true;
    queue.push_back(0);
    let mut count = 1;
    while let Some(i) = queue.pop_front() {
        for &j in &neighbors[i] {
            if !seen[j] {
                seen[j] = true;
                count += 1;
                queue.push_back(j);
            }
        }
    }
    count == n
}

fn spectral_of(laplacian: &DMatrix<f64>) -> SpectralSummary {
    let n = laplacian.nrows();
    let eig = SymmetricEigen::new(laplacian.clone());
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lambda2 = if n >= 2 { eigenvalues[1] } else { 0.0 };
    let sigma_max = eigenvalues[n - 1].max(0.0);
    SpectralSummary {
        eigenvalues,
        lambda2,
        sigma_max,
    }
}

/// Moore-Penrose pseudoinverse of a symmetric matrix via its
/// eigendecomposition; eigenvalues below [`EIG_ZERO_TOL`] are treated as 0.
pub fn symmetric_pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let mut inv_vals = eig.eigenvalues.clone();
    for v in inv_vals.iter_mut() {
        *v = if v.abs() > EIG_ZERO_TOL { 1.0 / *v } else { 0.0 };
    }
    &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose()
}
