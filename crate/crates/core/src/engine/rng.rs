//! Seeded, stream-split pseudo-randomness.
//!
//! Every consumer of randomness owns an [`RngStream`] identified by the run
//! seed and a stream id. Streams are ChaCha8 instances sharing a key and
//! differing in their stream (nonce) word, so draws from one stream never
//! perturb another and adding a consumer does not shift existing sequences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::time::Duration;

/// What a stream is used for; combined with a device index into a stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Traffic = 1,
    Phase = 2,
    Channel = 3,
    Poll = 4,
    Oracle = 5,
    Misc = 6,
}

impl Purpose {
    pub fn stream_id(self, index: u64) -> u64 {
        ((self as u64) << 40) | index
    }
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn for_purpose(seed: u64, purpose: Purpose, index: u64) -> Self {
        Self::new(seed, purpose.stream_id(index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on [0, 1).
    pub fn unit(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform on [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Uniform integer microsecond count on [lo, hi); returns `lo` if the range is empty.
    pub fn uniform_duration(&mut self, lo: Duration, hi: Duration) -> Duration {
        if hi <= lo {
            return lo;
        }
        Duration::from_micros(self.rng.random_range(lo.as_micros()..hi.as_micros()))
    }

    /// Exponential draw with the given rate (events per second), in seconds.
    pub fn exponential(&mut self, rate: f64) -> f64 {
        Exp::new(rate)
            .expect("exponential rate must be positive and finite")
            .sample(&mut self.rng)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}
