//! The sampling engines.
//!
//! One synchronous round of the decentralized chain updates every agent
//! against the iteration-`k` snapshot:
//!
//! ```text
//! w_i(k+1) = w_i(k) - beta_k * sum_j a_ij (w_i(k) - w_j(k))
//!                   - alpha_k * n * g_i(w_i(k))
//!                   + sqrt(2 alpha_k) * v_i(k),     v_i(k) ~ N(0, n I)
//! ```
//!
//! The centralized chain is the single-site analogue with the pooled
//! gradient and unit-variance noise; with one agent the two coincide
//! bit-for-bit under a shared seed (same streams, same kernel). A
//! gradient-descent engine without noise serves as the point-estimate
//! baseline.

use rand_chacha::ChaCha12Rng;

use crate::diagnostics::consensus_error;
use crate::error::{Error, Result};
use crate::models::{global_grad, Model};
use crate::rng;
use crate::runlog::{ConsensusRecord, EngineKind, RunLog, RunMeta, SampleRecord};
use crate::schedules::StepSchedule;
use crate::topology::Graph;

/// Per-agent mini-batch state: a shuffled pass over the shard, reshuffled
/// each epoch from the agent's own stream.
#[derive(Debug, Clone)]
struct BatchCursor {
    order: Vec<usize>,
    pos: usize,
}

impl BatchCursor {
    fn new(shard_len: usize) -> Self {
        Self {
            order: (0..shard_len).collect(),
            pos: shard_len, // forces a shuffle before the first batch
        }
    }

    fn next_batch(&mut self, batch_size: usize, rng: &mut ChaCha12Rng) -> Vec<usize> {
        use rand::seq::SliceRandom;
        if self.pos >= self.order.len() {
            self.order.shuffle(rng);
            self.pos = 0;
        }
        let take = batch_size.min(self.order.len() - self.pos);
        let batch = self.order[self.pos..self.pos + take].to_vec();
        self.pos += take;
        batch
    }
}

/// Stacked per-agent parameters plus the per-agent random streams.
#[derive(Debug, Clone)]
pub struct NetworkState {
    w: Vec<f64>,
    scratch: Vec<f64>,
    k: u64,
    n_chains: usize,
    d_w: usize,
    noise_streams: Vec<ChaCha12Rng>,
    shuffle_streams: Vec<ChaCha12Rng>,
    cursors: Vec<BatchCursor>,
}

impl NetworkState {
    /// All agents start at the origin; streams are keyed by
    /// `(seed, agent)` so the draws of one agent never depend on how many
    /// other agents exist.
    pub fn new(n_chains: usize, d_w: usize, seed: u64, shard_lens: &[usize]) -> Self {
        assert!(n_chains >= 1 && d_w >= 1);
        assert_eq!(shard_lens.len(), n_chains);
        Self {
            w: vec![0.0; n_chains * d_w],
            scratch: vec![0.0; n_chains * d_w],
            k: 0,
            n_chains,
            d_w,
            noise_streams: (0..n_chains).map(|i| rng::noise_stream(seed, i)).collect(),
            shuffle_streams: (0..n_chains).map(|i| rng::shuffle_stream(seed, i)).collect(),
            cursors: shard_lens.iter().map(|&m| BatchCursor::new(m)).collect(),
        }
    }

    /// Gaussian initialization `w_i(0) ~ N(0, scale^2 I)` drawn from each
    /// agent's noise stream.
    pub fn init_gaussian(&mut self, scale: f64) {
        for i in 0..self.n_chains {
            let slice = &mut self.w[i * self.d_w..(i + 1) * self.d_w];
            rng::fill_std_normal(&mut self.noise_streams[i], slice);
            for x in slice.iter_mut() {
                *x *= scale;
            }
        }
    }

    pub fn iteration(&self) -> u64 {
        self.k
    }

    pub fn n_chains(&self) -> usize {
        self.n_chains
    }

    pub fn d_w(&self) -> usize {
        self.d_w
    }

    pub fn stacked(&self) -> &[f64] {
        &self.w
    }

    pub fn agent(&self, i: usize) -> &[f64] {
        &self.w[i * self.d_w..(i + 1) * self.d_w]
    }

    pub fn set_agent(&mut self, i: usize, w: &[f64]) {
        assert_eq!(w.len(), self.d_w);
        self.w[i * self.d_w..(i + 1) * self.d_w].copy_from_slice(w);
    }

    fn draw_batch(&mut self, agent: usize, shard_len: usize, batch_size: usize) -> Option<Vec<usize>> {
        if batch_size == 0 || shard_len == 0 || batch_size >= shard_len {
            return None;
        }
        Some(self.cursors[agent].next_batch(batch_size, &mut self.shuffle_streams[agent]))
    }
}

/// Noise and gradients actually used by one recorded step; consumed by the
/// average-dynamics identity check and fault-injection tests.
#[derive(Debug, Clone)]
pub struct StepRecord {
    /// Stacked `v_i(k)` draws (variance `n` per coordinate).
    pub noise: Vec<f64>,
    /// Stacked `g_i(w_i(k))` evaluations (batch gradients if batching).
    pub grads: Vec<f64>,
}

/// The shared per-agent update; both engines funnel through this exact
/// expression so that their single-agent trajectories are bit-identical.
#[inline]
fn update_kernel(
    out: &mut [f64],
    cur: &[f64],
    consensus: &[f64],
    beta: f64,
    grad: &[f64],
    drift_scale: f64,
    noise: &[f64],
    noise_scale: f64,
) {
    for d in 0..cur.len() {
        out[d] = cur[d] - beta * consensus[d] - drift_scale * grad[d] + noise_scale * noise[d];
    }
}

fn check_finite(state: &NetworkState) -> Result<()> {
    for i in 0..state.n_chains {
        if state.agent(i).iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence {
                agent: i,
                iteration: state.k,
            });
        }
    }
    Ok(())
}

/// One decentralized round with explicit noise draws `v` (stacked, one
/// `d_w` block per agent, already scaled to variance `n`). Exposed for
/// identity checks and zero-noise tests; [`dula_step`] draws `v` from the
/// per-agent streams.
pub fn dula_step_with_noise(
    state: &mut NetworkState,
    graph: &Graph,
    schedule: &StepSchedule,
    model: &dyn Model,
    batch_size: usize,
    v: &[f64],
) -> Result<StepRecord> {
    let n = state.n_chains;
    let d = state.d_w;
    if graph.n() != n || model.n_agents() != n {
        return Err(Error::InvalidParameter(format!(
            "graph ({}), model ({}) and state ({}) disagree on the agent count",
            graph.n(),
            model.n_agents(),
            n
        )));
    }
    if v.len() != n * d {
        return Err(Error::InvalidParameter(format!(
            "noise record has length {}, expected {}",
            v.len(),
            n * d
        )));
    }
    let alpha = schedule.alpha(state.k);
    let beta = schedule.beta(state.k);
    let drift_scale = alpha * n as f64;
    let noise_scale = (2.0 * alpha).sqrt();

    let mut grads = vec![0.0; n * d];
    let mut consensus = vec![0.0; d];
    for i in 0..n {
        let batch = state.draw_batch(i, model.shard_len(i), batch_size);
        let w_i = &state.w[i * d..(i + 1) * d];
        let g = model.local_grad(i, w_i, batch.as_deref())?;
        grads[i * d..(i + 1) * d].copy_from_slice(&g);

        // hat_w_i = sum_j a_ij (w_i - w_j), read from the round snapshot.
        let deg = graph.degree(i) as f64;
        for (dd, c) in consensus.iter_mut().enumerate() {
            *c = deg * w_i[dd];
        }
        for &j in graph.neighbors(i) {
            let w_j = &state.w[j * d..(j + 1) * d];
            for (c, x) in consensus.iter_mut().zip(w_j) {
                *c -= x;
            }
        }

        let (cur, out) = (&state.w[i * d..(i + 1) * d], &mut state.scratch[i * d..(i + 1) * d]);
        update_kernel(
            out,
            cur,
            &consensus,
            beta,
            &g,
            drift_scale,
            &v[i * d..(i + 1) * d],
            noise_scale,
        );
    }
    std::mem::swap(&mut state.w, &mut state.scratch);
    state.k += 1;
    check_finite(state)?;
    Ok(StepRecord {
        noise: v.to_vec(),
        grads,
    })
}

/// One decentralized round (Gaussian noise of variance `n` per agent).
pub fn dula_step(
    state: &mut NetworkState,
    graph: &Graph,
    schedule: &StepSchedule,
    model: &dyn Model,
    batch_size: usize,
) -> Result<StepRecord> {
    let n = state.n_chains;
    let d = state.d_w;
    let sqrt_n = (n as f64).sqrt();
    let mut v = vec![0.0; n * d];
    for i in 0..n {
        let block = &mut v[i * d..(i + 1) * d];
        rng::fill_std_normal(&mut state.noise_streams[i], block);
        for x in block.iter_mut() {
            *x *= sqrt_n;
        }
    }
    dula_step_with_noise(state, graph, schedule, model, batch_size, &v)
}

/// One centralized Langevin step on the pooled posterior with unit-variance
/// noise. Mini-batches require a single-shard model (pool the data first).
pub fn cula_step(
    state: &mut NetworkState,
    schedule: &StepSchedule,
    model: &dyn Model,
    batch_size: usize,
) -> Result<()> {
    centralized_step(state, schedule, model, batch_size, true)
}

/// One gradient-descent step (no injected noise).
pub fn sgd_step(
    state: &mut NetworkState,
    schedule: &StepSchedule,
    model: &dyn Model,
    batch_size: usize,
) -> Result<()> {
    centralized_step(state, schedule, model, batch_size, false)
}

fn centralized_step(
    state: &mut NetworkState,
    schedule: &StepSchedule,
    model: &dyn Model,
    batch_size: usize,
    with_noise: bool,
) -> Result<()> {
    let d = state.d_w;
    if state.n_chains != 1 {
        return Err(Error::InvalidParameter(
            "centralized engines drive a single chain".into(),
        ));
    }
    if batch_size > 0 && model.n_agents() > 1 {
        return Err(Error::InvalidParameter(
            "mini-batch centralized runs need the data pooled into one shard".into(),
        ));
    }
    let alpha = schedule.alpha(state.k);

    // Gradient of the pooled potential at the current iterate (exactly one
    // model evaluation per shard per step, no lookahead).
    let grad = if model.n_agents() == 1 {
        let batch = state.draw_batch(0, model.shard_len(0), batch_size);
        model.local_grad(0, &state.w, batch.as_deref())?
    } else {
        global_grad(model, &state.w)?
    };

    let mut noise = vec![0.0; d];
    let noise_scale = if with_noise {
        rng::fill_std_normal(&mut state.noise_streams[0], &mut noise);
        (2.0 * alpha).sqrt()
    } else {
        0.0
    };

    let consensus = vec![0.0; d];
    update_kernel(
        &mut state.scratch[..d],
        &state.w[..d],
        &consensus,
        0.0,
        &grad,
        alpha,
        &noise,
        noise_scale,
    );
    std::mem::swap(&mut state.w, &mut state.scratch);
    state.k += 1;
    check_finite(state)
}

/// Residual of the exact average dynamics over one recorded step:
///
/// ```text
/// mean(after) - [ mean(before) - alpha_k * sum_i g_i(w_i(k)) + sqrt(2 alpha_k) * mean(v_i) ]
/// ```
///
/// The consensus term cancels under averaging because `1' L = 0`, so the
/// max-norm residual is zero (to rounding) regardless of `beta_k`.
/// Gradients are re-evaluated full-batch at the `before` state, matching
/// the full-gradient dynamics the identity is stated for.
pub fn average_shadow(
    before: &NetworkState,
    after: &NetworkState,
    noise: &[f64],
    schedule: &StepSchedule,
    model: &dyn Model,
) -> Result<f64> {
    let n = before.n_chains;
    let d = before.d_w;
    if after.n_chains != n || after.d_w != d || after.k != before.k + 1 {
        return Err(Error::InvalidParameter(
            "states are not one step apart".into(),
        ));
    }
    if noise.len() != n * d {
        return Err(Error::InvalidParameter(format!(
            "noise record has length {}, expected {}",
            noise.len(),
            n * d
        )));
    }
    let alpha = schedule.alpha(before.k);

    let mut predicted = vec![0.0; d];
    for dd in 0..d {
        let mean_before: f64 = (0..n).map(|i| before.agent(i)[dd]).sum::<f64>() / n as f64;
        let mean_noise: f64 = (0..n).map(|i| noise[i * d + dd]).sum::<f64>() / n as f64;
        predicted[dd] = mean_before + (2.0 * alpha).sqrt() * mean_noise;
    }
    for i in 0..n {
        let g = model.local_grad(i, before.agent(i), None)?;
        for (p, gi) in predicted.iter_mut().zip(g) {
            *p -= alpha * gi;
        }
    }

    let mut residual: f64 = 0.0;
    for dd in 0..d {
        let mean_after: f64 = (0..n).map(|i| after.agent(i)[dd]).sum::<f64>() / n as f64;
        residual = residual.max((mean_after - predicted[dd]).abs());
    }
    Ok(residual)
}

/// Run-level configuration (everything except topology/schedule/model).
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub engine: EngineKind,
    pub iterations: u64,
    pub burn_in: u64,
    pub thinning: u64,
    /// 0 means full-batch gradients.
    pub batch_size: usize,
    pub seed: u64,
    /// Stride for consensus-error records; 0 disables them.
    pub record_every: u64,
    /// Standard deviation of the Gaussian initialization (0 starts at the
    /// origin).
    pub init_scale: f64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.burn_in >= self.iterations {
            return Err(Error::InvalidParameter(format!(
                "need burn_in < iterations, got {} / {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidParameter("thinning must be >= 1".into()));
        }
        Ok(())
    }
}

/// A finished (or aborted) run: the log plus the divergence site if the
/// chain blew up. On divergence the log holds everything recorded before
/// the failing iteration so callers can still flush it.
#[derive(Debug)]
pub struct RunOutput {
    pub log: RunLog,
    pub divergence: Option<(usize, u64)>,
}

/// Execute a full run. `graph` is required for the decentralized engine and
/// ignored by the centralized ones. Deterministic in `(config, inputs)`.
pub fn run(
    config: &RunConfig,
    graph: Option<&Graph>,
    schedule: &StepSchedule,
    model: &dyn Model,
) -> Result<RunOutput> {
    config.validate()?;
    let n_chains = match config.engine {
        EngineKind::Dula => {
            let g = graph.ok_or_else(|| {
                Error::InvalidParameter("decentralized engine requires a graph".into())
            })?;
            if g.n() != model.n_agents() {
                return Err(Error::InvalidParameter(format!(
                    "graph has {} agents but the model is partitioned across {}",
                    g.n(),
                    model.n_agents()
                )));
            }
            if !g.is_connected() {
                return Err(Error::InvalidTopology(
                    "decentralized runs require a connected graph".into(),
                ));
            }
            if g.n() >= 2 {
                let verdict = g.validate_b(schedule.beta(0))?;
                if !verdict.admissible {
                    return Err(Error::InvalidParameter(format!(
                        "initial consensus step beta_0 = {} is inadmissible (margin {})",
                        schedule.beta(0),
                        verdict.margin
                    )));
                }
            }
            g.n()
        }
        EngineKind::Cula | EngineKind::Sgd => 1,
    };

    let d = model.d_w();
    let shard_lens: Vec<usize> = match config.engine {
        EngineKind::Dula => (0..n_chains).map(|i| model.shard_len(i)).collect(),
        _ => vec![if model.n_agents() == 1 { model.shard_len(0) } else { 0 }],
    };
    let mut state = NetworkState::new(n_chains, d, config.seed, &shard_lens);
    if config.init_scale > 0.0 {
        state.init_gaussian(config.init_scale);
    }

    let mut log = RunLog {
        meta: RunMeta {
            seed: config.seed,
            engine: config.engine.as_str().into(),
            n_agents: n_chains,
            d_w: d,
            iterations: config.iterations,
            burn_in: config.burn_in,
            thinning: config.thinning,
            batch_size: config.batch_size,
            record_every: config.record_every,
            ..RunMeta::default()
        },
        ..RunLog::default()
    };

    for _ in 0..config.iterations {
        let step_result = match config.engine {
            EngineKind::Dula => dula_step(
                &mut state,
                graph.expect("checked above"),
                schedule,
                model,
                config.batch_size,
            )
            .map(|_| ()),
            EngineKind::Cula => cula_step(&mut state, schedule, model, config.batch_size),
            EngineKind::Sgd => sgd_step(&mut state, schedule, model, config.batch_size),
        };
        if let Err(err) = step_result {
            return match err {
                Error::Divergence { agent, iteration } => Ok(RunOutput {
                    log,
                    divergence: Some((agent, iteration)),
                }),
                other => Err(other),
            };
        }
        let k = state.iteration();
        if config.record_every > 0 && k % config.record_every == 0 {
            log.consensus.push(ConsensusRecord {
                iter: k,
                error_sq: consensus_error(state.stacked(), n_chains, d),
                bound: None,
            });
        }
        if k > config.burn_in && (k - config.burn_in) % config.thinning == 0 {
            for i in 0..n_chains {
                log.samples.push(SampleRecord {
                    iter: k,
                    agent: i,
                    w: state.agent(i).to_vec(),
                });
            }
        }
    }
    Ok(RunOutput {
        log,
        divergence: None,
    })
}
