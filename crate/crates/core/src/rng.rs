//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8, a counter-based
//! generator. A run seed is expanded with `seed_from_u64` and each consumer
//! (weight init, dropout masks, batch order, validation split, per-subject
//! simulation) reads its own stream id, so changing how much one consumer
//! draws never shifts the values another one sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream ids used by the trainer and simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    WeightInit,
    Dropout,
    BatchOrder,
    ValidationSplit,
    Bootstrap,
    Baseline,
    /// Choice of evaluation subsets.
    Sampling,
    Subject(u64),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::WeightInit => 1,
            Stream::Dropout => 2,
            Stream::BatchOrder => 3,
            Stream::ValidationSplit => 4,
            Stream::Bootstrap => 5,
            Stream::Baseline => 6,
            Stream::Sampling => 7,
            Stream::Subject(i) => (1 << 32) + i,
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}
