//! Portable seeded generator.
//!
//! All randomness goes through [`Xoshiro256PlusPlus`] seeded with
//! `seed_from_u64`, which expands the 64-bit seed with SplitMix64. Given the
//! same seed, every design, restart set and replicate is bit-identical across
//! platforms.

use rand::SeedableRng;
pub use rand_xoshiro::Xoshiro256PlusPlus;

pub type Rng = Xoshiro256PlusPlus;

pub fn seeded(seed: u64) -> Rng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Fisher-Yates shuffle of `0..n`.
pub fn permutation(rng: &mut Rng, n: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}
