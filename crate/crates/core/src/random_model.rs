//! The i.i.d. uniform reference model.
//!
//! Points come from ChaCha20 (`rand_chacha::ChaCha20Rng`), seeded with
//! `seed_from_u64(seed)` and switched to stream `stream` via `set_stream`.
//! Each point is one `next_u64()` read as a 64-bit fraction of a turn, so a
//! given `(seed, stream)` yields the same point set on every platform.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::sequence::FracPointSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngSpec { seed, stream }
    }

    pub fn generator(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// `n` sorted i.i.d. uniform points; the point set carries no alpha.
pub fn iid_points(n: usize, rng: RngSpec) -> FracPointSet {
    assert!(n >= 1, "n must be positive");
    let mut gen = rng.generator();
    let fixed = (0..n).map(|_| gen.next_u64()).collect();
    FracPointSet::from_fixed(fixed)
}

/// `L (1 - L/N)`, the variance of Binomial(N, L/N).
pub fn binomial_variance_reference(n: usize, l: f64) -> f64 {
    l * (1.0 - l / n as f64)
}
