//! Reproducible random streams.
//!
//! Every source of randomness in a run is a counter-based ChaCha stream
//! keyed by `(master seed, stream id)`. Agent `i` owns two streams: one for
//! its Gaussian noise and one for its mini-batch shuffles, so changing the
//! batch size never perturbs the noise sequence, and adding agents never
//! perturbs existing agents' draws. The centralized baseline chain reuses
//! agent 0's streams, which makes the single-agent decentralized run and
//! the centralized run bit-identical under a shared seed.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

const SHUFFLE_STREAM_BASE: u64 = 1 << 32;

/// Noise stream of an agent (also used by the centralized chain as agent 0).
pub fn noise_stream(master_seed: u64, agent: usize) -> ChaCha12Rng {
    keyed_stream(master_seed, agent as u64)
}

/// Mini-batch shuffle stream of an agent.
pub fn shuffle_stream(master_seed: u64, agent: usize) -> ChaCha12Rng {
    keyed_stream(master_seed, SHUFFLE_STREAM_BASE + agent as u64)
}

/// Master seed of replication `r` under a base seed.
pub fn replication_seed(base_seed: u64, replication: usize) -> u64 {
    base_seed.wrapping_add(replication as u64)
}

fn keyed_stream(master_seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Fill `out` with independent standard-normal draws.
pub fn fill_std_normal(rng: &mut ChaCha12Rng, out: &mut [f64]) {
    for x in out.iter_mut() {
        *x = StandardNormal.sample(rng);
    }
}
