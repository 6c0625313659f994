//! Deterministic substream RNG for simulations.
//!
//! Streams are ChaCha8 generators keyed by (seed, domain, index) through a
//! splitmix64 expansion, so every trial and every codeword gets its own
//! stream regardless of execution order or parallelism. Not cryptographic.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Substream namespace for codeword generation.
pub const DOMAIN_CODEWORD: u64 = 0x636f_6465;
/// Substream namespace for simulation trials.
pub const DOMAIN_TRIAL: u64 = 0x7472_6961;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream keyed by `(seed, domain, index)`; identical inputs give identical
/// streams on every platform.
pub fn substream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut state = seed ^ domain.rotate_left(17) ^ index.rotate_left(43);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
