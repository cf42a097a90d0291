//! Seeded random streams.
//!
//! Every consumer derives its generator from one root seed plus a named
//! stream, so adding draws to one stream never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Scene,
    Injection,
    WeakOrAmbiguity,
    Sampling,
    Graphs,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Scene => 1,
            Stream::Injection => 2,
            Stream::WeakOrAmbiguity => 3,
            Stream::Sampling => 4,
            Stream::Graphs => 5,
        }
    }
}

pub fn stream(seed: u64, s: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(s.id());
    rng
}
