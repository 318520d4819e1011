use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Components that draw randomness; each owns a family of counted streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    SweepA = 1,
    SweepB = 2,
    SweepSample = 3,
    AssemblyA = 4,
    AssemblyShape = 5,
    Ladder = 6,
    Audit = 7,
}

/// Splits one master seed into independent ChaCha streams `(component, counter)`.
#[derive(Clone, Copy, Debug)]
pub struct SeedStreams {
    master: u64,
}

impl SeedStreams {
    pub fn new(master: u64) -> Self {
        SeedStreams { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn rng(&self, stream: Stream, counter: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(((stream as u64) << 40) | (counter & ((1 << 40) - 1)));
        rng
    }

    /// A derived 64-bit seed, for APIs that take one.
    pub fn seed(&self, stream: Stream, counter: u64) -> u64 {
        self.rng(stream, counter).random()
    }
}
