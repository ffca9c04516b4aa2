//! Deterministic random number generation.
//!
//! Every random decision in this crate flows through [`Rng`], a splitmix64
//! generator. The generator and the seed-mixing function below are fixed
//! bit-exactly so that a corpus produced from `(base_seed, epoch, index)` is
//! byte-identical across platforms, runs, and worker counts.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The splitmix64 finalizer: a bijective 64-bit mix.
///
/// `z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
///  z *= 0x94D049BB133111EB; z ^= z >> 31` (all wrapping).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the per-sample seed from `(base_seed, epoch, index)`.
///
/// Defined bit-exactly as `mix64(mix64(mix64(base_seed) ^ epoch) ^ index)`.
/// Each argument passes through the finalizer before the next is folded in,
/// so distinct `(epoch, index)` pairs yield statistically independent seeds.
#[inline]
pub fn mix_seed(base_seed: u64, epoch: u64, index: u64) -> u64 {
    mix64(mix64(mix64(base_seed) ^ epoch) ^ index)
}

/// splitmix64 stream generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    /// Next 64 random bits: `state += GOLDEN_GAMMA; mix64(state)`.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform draw in `[0, 1)` from the top 53 bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[0, bound)` via the 128-bit multiply-shift reduction
    /// `(next_u64() * bound) >> 64`. Bias is below 2^-11 for any bound that
    /// fits a corpus and the reduction is branch-free and deterministic.
    #[inline]
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }
}
