// Copyright 2026 The rwsd Authors
// SPDX-License-Identifier: Apache-2.0

//! Counter-based random streams.
//!
//! Every replica owns one ChaCha8 keystream selected by `(seed, replica_id)`:
//! the seed fixes the key and the replica id selects the 64-bit stream
//! number. The block counter advances as words are consumed, so a stream can
//! be resumed or skipped without replaying its predecessors and results never
//! depend on which worker ran which replica.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    replica_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, replica_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(replica_id);
        Self {
            seed,
            replica_id,
            inner,
        }
    }

    /// Re-opens a stream at a given 32-bit word position.
    pub fn at_counter(seed: u64, replica_id: u64, counter: u128) -> Self {
        let mut stream = Self::new(seed, replica_id);
        stream.inner.set_word_pos(counter);
        stream
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replica_id(&self) -> u64 {
        self.replica_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u128 {
        self.inner.get_word_pos()
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Symmetric +-1 sign with unit variance.
    #[inline]
    pub fn rademacher(&mut self) -> f64 {
        if self.inner.next_u32() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.standard_normal();
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}
