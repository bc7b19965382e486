//! Seeded, logged random draws.
//!
//! Every draw is a uniform `u ∈ [0, 1)` built from 53 bits of a ChaCha8
//! stream, so results do not depend on platform word size. Each user gets an
//! independent sub-stream per run, derived from `(seed, user, run)`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::model::{RunId, UserId};

#[derive(Debug, Clone)]
pub struct DrawStream {
    rng: ChaCha8Rng,
    log: Vec<f64>,
}

impl DrawStream {
    pub fn from_seed(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), log: Vec::new() }
    }

    /// Sub-stream for one user in one run.
    pub fn for_user(seed: u64, user: &UserId, run: RunId) -> Self {
        let mut h = Sha256::new();
        h.update(seed.to_le_bytes());
        h.update((user.0.len() as u64).to_le_bytes());
        h.update(user.0.as_bytes());
        h.update(run.0.to_le_bytes());
        let digest: [u8; 32] = h.finalize().into();
        Self { rng: ChaCha8Rng::from_seed(digest), log: Vec::new() }
    }

    pub fn next_unit(&mut self) -> f64 {
        let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        self.log.push(u);
        u
    }

    /// Uniform index in `0..n`; `n` must be positive.
    pub fn pick(&mut self, n: usize) -> usize {
        assert!(n > 0, "pick from an empty range");
        let u = self.next_unit();
        ((u * n as f64) as usize).min(n - 1)
    }

    /// Every draw made so far, in order.
    pub fn log(&self) -> &[f64] {
        &self.log
    }
}
