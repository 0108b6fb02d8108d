//! Classification accuracy from posterior samples.
//!
//! Predictions use the running posterior-mean predictive probability: the
//! mean of `sigmoid(w . x)` over the samples retained so far, thresholded
//! at 0.5 with ties going to class 1.

use crate::datasets::SparseDataset;
use crate::runlog::SampleRecord;

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Running per-test-point sums of predictive probabilities for one agent.
#[derive(Debug, Clone)]
pub struct PredictiveTracker {
    sums: Vec<f64>,
    count: usize,
}

impl PredictiveTracker {
    pub fn new(test_len: usize) -> Self {
        Self {
            sums: vec![0.0; test_len],
            count: 0,
        }
    }

    /// Absorb one retained sample.
    pub fn push(&mut self, w: &[f64], test: &SparseDataset) {
        debug_assert_eq!(test.len(), self.sums.len());
        for (sum, row) in self.sums.iter_mut().zip(&test.rows) {
            *sum += sigmoid(row.dot(w));
        }
        self.count += 1;
    }

    pub fn n_samples(&self) -> usize {
        self.count
    }

    /// Accuracy of the posterior-mean predictive classifier; `None` before
    /// any sample arrives.
    pub fn accuracy(&self, test: &SparseDataset) -> Option<f64> {
        if self.count == 0 {
            return None;
        }
        let mut correct = 0usize;
        for (sum, row) in self.sums.iter().zip(&test.rows) {
            let predicted = u8::from(sum / self.count as f64 >= 0.5);
            correct += usize::from(predicted == row.label);
        }
        Some(correct as f64 / test.len() as f64)
    }
}

/// Accuracy of a single parameter vector (used before any sample is
/// retained).
pub fn accuracy_of_params(w: &[f64], test: &SparseDataset) -> f64 {
    let mut correct = 0usize;
    for row in &test.rows {
        let predicted = u8::from(sigmoid(row.dot(w)) >= 0.5);
        correct += usize::from(predicted == row.label);
    }
    correct as f64 / test.len() as f64
}

/// One point of an accuracy curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyPoint {
    pub iter: u64,
    pub agent: usize,
    pub accuracy: f64,
}

/// Accuracy of every agent at every retained iteration, using the running
/// posterior-mean predictive. `samples` must be in iteration order (as
/// produced by a run).
pub fn accuracy_curve(
    samples: &[SampleRecord],
    n_agents: usize,
    test: &SparseDataset,
) -> Vec<AccuracyPoint> {
    let mut trackers: Vec<PredictiveTracker> =
        (0..n_agents).map(|_| PredictiveTracker::new(test.len())).collect();
    let mut curve = Vec::with_capacity(samples.len());
    for s in samples {
        trackers[s.agent].push(&s.w, test);
        curve.push(AccuracyPoint {
            iter: s.iter,
            agent: s.agent,
            accuracy: trackers[s.agent].accuracy(test).expect("just pushed"),
        });
    }
    curve
}
