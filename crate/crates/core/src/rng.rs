//! Deterministic random-stream derivation.
//!
//! Every run draws from its own ChaCha8 stream derived from a master seed
//! and a stream index via a SplitMix64 mix, so independent runs (trials,
//! strategies, tuning candidates) never share or interleave randomness and
//! any single run can be replayed from `(master_seed, stream)` alone.
//!
//! Stream allocation conventions used by the benchmark pipelines:
//! - sweeps: `stream = (t_index << 32) | (strategy << 24) | trial`
//! - tuning: `stream = trial` for every candidate pair, so candidates are
//!   compared under common random numbers.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; a bijective 64-bit mix.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the seed for one stream from the master seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

/// Build the ChaCha8 generator for one stream.
pub fn stream_rng(master: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream))
}

/// Stream index for one run of a (T, strategy, trial) sweep.
pub fn sweep_stream(t_index: usize, strategy_index: usize, trial: usize) -> u64 {
    ((t_index as u64) << 32) | ((strategy_index as u64) << 24) | trial as u64
}
