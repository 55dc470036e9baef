//! Counter-based splittable random streams.
//!
//! Every random draw in the crate is addressed by a key path such as
//! `(master seed, trial, size, pretrain seed, finetune seed, checkpoint,
//! instance)`. A stream is a pure function of its key and a counter, so the
//! values a parallel trial sees never depend on scheduling.

use rand_core::{impls, Error as RandError, RngCore};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer (Stafford variant 13).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A random stream keyed by a path of integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(master_seed: u64) -> Self {
        CounterRng {
            key: mix64(master_seed ^ 0x6a09_e667_f3bc_c908),
            counter: 0,
        }
    }

    /// Derive an independent child stream. The parent's position is ignored,
    /// so `fork` depends only on the key path.
    #[inline]
    pub fn fork(&self, label: u64) -> Self {
        CounterRng {
            key: mix64(self.key ^ mix64(label.wrapping_add(GOLDEN_GAMMA))),
            counter: 0,
        }
    }

    pub fn fork_path(&self, labels: &[u64]) -> Self {
        labels.iter().fold(self.clone(), |rng, &l| rng.fork(l))
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Random access to the stream: the `n`-th output.
    #[inline]
    pub fn at(&self, n: u64) -> u64 {
        mix64(self.key.wrapping_add(n.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform on [0, 1) with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform integer in `0..n`, by rejection.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

impl RngCore for CounterRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        let v = self.at(self.counter);
        self.counter = self.counter.wrapping_add(1);
        v
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        impls::fill_bytes_via_next(self, dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), RandError> {
        self.fill_bytes(dest);
        Ok(())
    }
}
