//! Decentralized Bayesian posterior sampling via Langevin dynamics.
//!
//! A network of agents, each holding a private data shard, collaboratively
//! samples the global posterior: every round each agent averages with its
//! graph neighbors, takes a local Langevin step, and injects Gaussian
//! noise. The crate provides:
//!
//! - [`topology`]: communication graphs, Laplacian spectra, mixing matrices;
//! - [`schedules`]: the decaying step-size laws and their validity checks,
//!   plus the theoretically recommended gain and iteration-count formulas;
//! - [`models`]: target posteriors (Gaussian mixture with tied means,
//!   Bayesian logistic regression with a Laplace prior, and an exactly
//!   Gaussian test target) exposed through per-agent gradients;
//! - [`datasets`]: sparse-text parsing, synthetic data, deterministic
//!   splits and shards;
//! - [`sampler`]: the decentralized and centralized Langevin engines, a
//!   gradient-descent baseline, and the exact average-dynamics identity;
//! - [`diagnostics`]: consensus errors and their closed-form bounds,
//!   Sinkhorn transport distances, grid posteriors, accuracy curves;
//! - [`harness`]: config parsing, experiment orchestration, CSV output.
//!
//! Every run is a pure function of its configuration and a 64-bit seed:
//! per-agent randomness comes from counter-based streams keyed by
//! `(seed, agent)`, so results are reproducible across thread counts.

pub mod datasets;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod models;
pub mod rng;
pub mod runlog;
pub mod sampler;
pub mod schedules;
pub mod topology;

pub use error::{Error, Result};
