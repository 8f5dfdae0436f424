//! Circuit execution backends.
//!
//! [`tableau`] is the exact reference simulator. [`frame`] propagates Pauli
//! error frames against one noiseless reference run and is the Monte Carlo
//! workhorse. Both consume [`Circuit`](crate::circuit::Circuit) unchanged.

pub mod frame;
pub mod tableau;

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use thiserror::Error;

use crate::pauli::Bits;

pub use frame::{frame_sample, FrameSampler};
pub use tableau::{tableau_run, Tableau};

/// Per-shot random number generator.
pub type ShotRng = Xoshiro256PlusPlus;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("noiseless {kind} {index} is not deterministic")]
    NondeterministicReference { kind: &'static str, index: usize },
}

/// Results of one shot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotOutcome {
    pub detectors: Bits,
    pub observables: Bits,
    pub records: Option<Bits>,
}

impl ShotOutcome {
    pub fn any_detector(&self) -> bool {
        !self.detectors.is_zero()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based seed for shot `index` of a run seeded with `master`.
pub fn shot_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn shot_rng(master: u64, index: u64) -> ShotRng {
    ShotRng::seed_from_u64(shot_seed(master, index))
}

/// Parity of `bits` over `indices`.
pub fn parity(bits: &Bits, indices: &[usize]) -> bool {
    indices.iter().fold(false, |acc, &i| acc ^ bits.get(i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn shot_seeds_are_distinct_and_stable() {
        let seeds: HashSet<u64> = (0..10_000).map(|i| shot_seed(7, i)).collect();
        assert_eq!(seeds.len(), 10_000);
        assert_eq!(shot_seed(7, 3), shot_seed(7, 3));
        assert_ne!(shot_seed(7, 3), shot_seed(8, 3));
    }
}
