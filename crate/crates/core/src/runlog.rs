//! In-memory record of one sampling run.

/// Which update rule a run used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    /// Decentralized Langevin dynamics over a communication graph.
    Dula,
    /// Centralized Langevin dynamics on the pooled posterior.
    Cula,
    /// Gradient descent without injected noise (point-estimate baseline).
    Sgd,
}

impl EngineKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EngineKind::Dula => "dula",
            EngineKind::Cula => "cula",
            EngineKind::Sgd => "sgd",
        }
    }
}

impl std::str::FromStr for EngineKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dula" => Ok(EngineKind::Dula),
            "cula" => Ok(EngineKind::Cula),
            "sgd" => Ok(EngineKind::Sgd),
            other => Err(format!("unknown engine '{other}'")),
        }
    }
}

/// Run provenance. `created_unix` is the only field allowed to differ
/// between byte-identical reruns; it is written to the metadata file only,
/// never to the data CSVs.
#[derive(Debug, Clone, Default)]
pub struct RunMeta {
    pub config_hash: String,
    pub seed: u64,
    pub engine: String,
    pub n_agents: usize,
    pub d_w: usize,
    pub iterations: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub batch_size: usize,
    pub record_every: u64,
    pub created_unix: u64,
    /// Free-form notes: schedule parameterizations, validation warnings,
    /// desk-scale deviations.
    pub notes: Vec<String>,
}

/// One retained posterior sample of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub iter: u64,
    pub agent: usize,
    pub w: Vec<f64>,
}

/// Squared consensus error at one recorded iteration, with the theoretical
/// bound when the constants are available.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusRecord {
    pub iter: u64,
    pub error_sq: f64,
    pub bound: Option<f64>,
}

/// Classification accuracy of one agent at one recorded iteration,
/// aggregated over replications (std 0 for single runs).
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRecord {
    pub iter: u64,
    pub agent: usize,
    pub mean_acc: f64,
    pub std_acc: f64,
}

/// Everything a run emits; records are appended in iteration order.
#[derive(Debug, Clone, Default)]
pub struct RunLog {
    pub meta: RunMeta,
    pub samples: Vec<SampleRecord>,
    pub consensus: Vec<ConsensusRecord>,
    pub accuracy: Vec<AccuracyRecord>,
}

impl RunLog {
    /// Retained samples of one agent, in iteration order.
    pub fn samples_of(&self, agent: usize) -> impl Iterator<Item = &SampleRecord> {
        self.samples.iter().filter(move |s| s.agent == agent)
    }
}
