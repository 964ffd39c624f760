//! Seeded random streams.
//!
//! Every random quantity is drawn from a ChaCha8 generator keyed by the
//! master seed plus a 64-bit index, on one of the named [`Stream`]s. Two
//! consumers on different streams never share key material, so adding
//! draws to one stream never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent streams derived from one master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    /// Dense projection entries (Haar, Gaussian, Rademacher).
    Projection = 1,
    /// Diagonal ±1 signature `D` of the Hadamard kinds.
    Signature = 2,
    /// Row permutation of the garbled transform.
    Permutation = 3,
    /// Block sampling (`Ω_part`) and mini-batch draws.
    Sampling = 4,
    /// Worker runtimes, indexed by iteration.
    Runtime = 5,
    /// Synthetic data generation.
    Data = 6,
    /// Power-iteration start vectors.
    PowerIteration = 7,
    /// Key draws in the secrecy experiments.
    Key = 8,
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for `(seed, stream, index)`.
pub fn stream_rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    key[16..24].copy_from_slice(&mix(seed ^ mix(index)).to_le_bytes());
    key[24..].copy_from_slice(&(stream as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream as u64);
    rng
}

/// Derives a child seed, e.g. one per experiment repeat.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix(seed ^ mix(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}
