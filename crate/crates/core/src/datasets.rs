//! Sparse classification datasets: parsing, synthesis, splitting, sharding.
//!
//! The on-disk format is the usual sparse text layout, one sample per line:
//! `label index:value index:value ...` with 1-based, strictly increasing
//! indices. Labels `-1`/`+1` (or `0`/`1`) are mapped to `{0, 1}` at parse
//! time. All randomized operations are pure functions of their inputs and a
//! 64-bit seed.

use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// One labeled sample with sparse features (1-based indices).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    /// Class label in `{0, 1}`.
    pub label: u8,
    /// `(index, value)` pairs with strictly increasing indices.
    pub features: Vec<(u32, f64)>,
}

impl SparseRow {
    /// Sparse dot product against a dense parameter vector. Feature index
    /// `j` (1-based) maps to `w[j - 1]`; indices beyond `w.len()` are
    /// ignored.
    pub fn dot(&self, w: &[f64]) -> f64 {
        let mut acc = 0.0;
        for &(idx, val) in &self.features {
            let j = (idx - 1) as usize;
            if j < w.len() {
                acc += w[j] * val;
            }
        }
        acc
    }
}

/// A sparse binary-classification dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDataset {
    pub rows: Vec<SparseRow>,
    /// Feature dimension: the largest index observed, or a forced value.
    pub n_features: usize,
}

impl SparseDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Force the feature dimension (e.g. when a file is known to have more
    /// columns than its sample shows). Rejects values below the observed
    /// maximum index.
    pub fn with_n_features(mut self, n_features: usize) -> Result<Self> {
        if n_features < self.n_features {
            return Err(Error::Data(format!(
                "forced n_features {n_features} is below observed max index {}",
                self.n_features
            )));
        }
        self.n_features = n_features;
        Ok(self)
    }

    /// Serialize back to the sparse text format (for round-trip checks and
    /// interchange with other tools).
    pub fn to_sparse_text(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push_str(if row.label == 1 { "+1" } else { "-1" });
            for &(idx, val) in &row.features {
                out.push_str(&format!(" {idx}:{val}"));
            }
            out.push('\n');
        }
        out
    }

    /// Empirical fraction of rows labeled 1.
    pub fn label_mean(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().map(|r| r.label as f64).sum::<f64>() / self.rows.len() as f64
    }
}

/// Parse the sparse text format from a buffered reader. Blank lines are
/// skipped and `#` starts a comment. Malformed tokens are reported with
/// their 1-based line number.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<SparseDataset> {
    let mut rows = Vec::new();
    let mut n_features = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Io {
            path: "<stream>".into(),
            source: e,
        })?;
        let lineno = lineno + 1;
        let content = match line.split_once('#') {
            Some((head, _)) => head,
            None => line.as_str(),
        };
        let mut tokens = content.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue; // blank line
        };
        let label = parse_label(label_tok, lineno)?;
        let mut features = Vec::new();
        let mut last_idx = 0u32;
        for tok in tokens {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("expected index:value, got '{tok}'"),
            })?;
            let idx: u32 = idx_s.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid feature index '{idx_s}'"),
            })?;
            let val: f64 = val_s.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("invalid feature value '{val_s}'"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: lineno,
                    message: "feature indices are 1-based; got 0".into(),
                });
            }
            if idx <= last_idx {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("indices not strictly increasing at '{tok}'"),
                });
            }
            last_idx = idx;
            n_features = n_features.max(idx as usize);
            features.push((idx, val));
        }
        rows.push(SparseRow { label, features });
    }
    Ok(SparseDataset { rows, n_features })
}

/// Convenience wrapper over [`parse_libsvm`] for in-memory text.
pub fn parse_libsvm_str(text: &str) -> Result<SparseDataset> {
    parse_libsvm(text.as_bytes())
}

fn parse_label(tok: &str, lineno: usize) -> Result<u8> {
    match tok {
        "+1" | "1" => Ok(1),
        "-1" | "0" => Ok(0),
        other => {
            // Accept float spellings of the same values ("1.0", "-1.0").
            match other.parse::<f64>() {
                Ok(v) if v == 1.0 => Ok(1),
                Ok(v) if v == -1.0 || v == 0.0 => Ok(0),
                _ => Err(Error::Parse {
                    line: lineno,
                    message: format!("unsupported label '{tok}'"),
                }),
            }
        }
    }
}

/// Deterministic shuffled split into `ceil(fraction * N)` training rows and
/// the rest for testing.
pub fn train_test_split(
    data: &SparseDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(SparseDataset, SparseDataset)> {
    if data.is_empty() {
        return Err(Error::Data("cannot split an empty dataset".into()));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_train = (train_fraction * data.len() as f64).ceil() as usize;
    let pick = |idxs: &[usize]| SparseDataset {
        rows: idxs.iter().map(|&i| data.rows[i].clone()).collect(),
        n_features: data.n_features,
    };
    Ok((pick(&order[..n_train]), pick(&order[n_train..])))
}

/// Assignment of dataset rows to agents with equal (within one) shard sizes.
#[derive(Debug, Clone)]
pub struct Partition {
    /// Agent index per dataset row.
    pub assignment: Vec<usize>,
    pub n_agents: usize,
    pub seed: u64,
}

impl Partition {
    /// Row indices held by one agent, in dataset order.
    pub fn shard(&self, agent: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(row, &a)| (a == agent).then_some(row))
            .collect()
    }

    pub fn shard_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.n_agents];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Randomly divide `data` into `n_agents` shards of equal size (within one),
/// deterministically under `seed`.
pub fn partition(data: &SparseDataset, n_agents: usize, seed: u64) -> Result<Partition> {
    partition_len(data.len(), n_agents, seed)
}

/// [`partition`] for any collection length (used for non-sparse data too).
pub fn partition_len(n_rows: usize, n_agents: usize, seed: u64) -> Result<Partition> {
    if n_agents == 0 {
        return Err(Error::InvalidParameter("n_agents must be positive".into()));
    }
    if n_rows < n_agents {
        return Err(Error::Data(format!(
            "cannot partition {n_rows} rows across {n_agents} agents"
        )));
    }
    let mut order: Vec<usize> = (0..n_rows).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut assignment = vec![0usize; n_rows];
    for (pos, &row) in order.iter().enumerate() {
        assignment[row] = pos % n_agents;
    }
    Ok(Partition {
        assignment,
        n_agents,
        seed,
    })
}

/// Synthetic logistic-regression data: `x ~ N(0, I_d)` stored densely in
/// sparse form, `y ~ Bernoulli(sigmoid(true_w . x))`.
pub fn synth_logreg(seed: u64, n_rows: usize, d: usize, true_w: &[f64]) -> Result<SparseDataset> {
    if n_rows == 0 || d == 0 {
        return Err(Error::InvalidParameter(
            "synthetic dataset needs n_rows >= 1 and d >= 1".into(),
        ));
    }
    if true_w.len() != d {
        return Err(Error::InvalidParameter(format!(
            "true_w has length {}, expected {d}",
            true_w.len()
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let mut features = Vec::with_capacity(d);
        let mut logit = 0.0;
        for j in 0..d {
            let x: f64 = StandardNormal.sample(&mut rng);
            logit += true_w[j] * x;
            features.push((j as u32 + 1, x));
        }
        let p = 1.0 / (1.0 + (-logit).exp());
        let label = u8::from(rng.gen::<f64>() < p);
        rows.push(SparseRow { label, features });
    }
    Ok(SparseDataset {
        rows,
        n_features: d,
    })
}
