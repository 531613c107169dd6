//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8 (the `rand_chacha`
//! implementation), keyed by `SeedableRng::seed_from_u64(seed ^ index)` and
//! placed on a ChaCha stream selected by a purpose tag. The key expansion is
//! the PCG32-based `seed_from_u64` of `rand_core`, so any implementation that
//! reproduces ChaCha8 and that expansion reproduces every experiment.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// ChaCha stream tags, one per kind of draw, so that e.g. the noise of trial
/// 3 never shares keystream with the signal of trial 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Ensemble = 1,
    Signal = 2,
    Noise = 3,
    Subsets = 4,
    Probe = 5,
    Permutation = 6,
}

/// Substream for `index` under `seed`, derived as `seed ^ index`.
pub fn substream(seed: u64, index: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index);
    rng.set_stream(purpose as u64);
    rng
}

/// Root stream for a seed (index 0).
pub fn stream(seed: u64, purpose: Purpose) -> ChaCha8Rng {
    substream(seed, 0, purpose)
}

/// A fresh `u64` seed for child `index` of `seed`, e.g. one per trial.
pub fn derive_seed(seed: u64, index: u64, purpose: Purpose) -> u64 {
    use rand::Rng;
    substream(seed, index, purpose).random()
}
