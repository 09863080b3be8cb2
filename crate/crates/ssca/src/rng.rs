//! Deterministic seed derivation.
//!
//! Every random stream in this crate is derived from a single master seed
//! through a fixed splitmix64 expansion, so that runs are bit-reproducible
//! and independent streams (per iteration, per sample path) never overlap
//! by construction of distinct derivation labels.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One round of the splitmix64 output function.
///
/// This is the standard finalizer from Steele, Lea and Flood's SplittableRandom;
/// it is a bijection on `u64` with good avalanche behavior, which makes it a
/// safe way to spread structured inputs (seed + counter) into unrelated seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the sampling seed for outer iteration `t` (1-based) from the
/// run's master seed. Distinct `(seed, t)` pairs map to distinct streams.
pub fn iteration_seed(master: u64, t: usize) -> u64 {
    splitmix64(master ^ splitmix64(t as u64))
}

/// Derives the seed for sample path `path` of a multi-path campaign.
pub fn path_seed(master: u64, path: usize) -> u64 {
    // Offset the label space so path streams never coincide with
    // iteration streams of the same master seed.
    splitmix64(master ^ splitmix64((path as u64) | 0x8000_0000_0000_0000))
}

/// Derives the seed for restart attempt `attempt` of a multi-restart run.
pub fn restart_seed(master: u64, attempt: usize) -> u64 {
    // A third label space, disjoint from iterations and paths.
    splitmix64(master ^ splitmix64((attempt as u64) | 0x4000_0000_0000_0000))
}

/// Builds the per-iteration sample generator.
pub fn iteration_rng(master: u64, t: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(iteration_seed(master, t))
}

/// Builds a generator for one-off Monte Carlo estimates.
pub fn estimate_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
