//! Named, index-addressable random streams.
//!
//! Every random decision in the crate draws from a [`StreamSeed`]. A seed is
//! split by label (`derive`) or by integer index (`child`) with a SplitMix64
//! finalizer, and a concrete generator is a ChaCha8 instance keyed by the seed
//! with an explicit 64-bit stream number. Monte Carlo simulation `i` always
//! reads stream `i`, so the partition of work across threads never changes
//! the numbers a simulation sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamSeed(u64);

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

// FNV-1a; stable across platforms and toolchains unlike std's hasher.
fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

impl StreamSeed {
    pub const fn new(seed: u64) -> Self {
        StreamSeed(seed)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    /// Sub-seed for a named purpose ("reward", "init", ...).
    pub fn derive(self, label: &str) -> Self {
        StreamSeed(splitmix64(self.0 ^ splitmix64(label_hash(label))))
    }

    /// Sub-seed for an indexed purpose (episode number, graph id, ...).
    pub fn child(self, index: u64) -> Self {
        StreamSeed(splitmix64(self.0.wrapping_add(splitmix64(index ^ 0x5851_f42d_4c95_7f2d))))
    }

    /// Generator on stream 0.
    pub fn rng(self) -> ChaCha8Rng {
        self.stream(0)
    }

    /// Generator on an explicit stream number.
    pub fn stream(self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }
}

impl From<u64> for StreamSeed {
    fn from(seed: u64) -> Self {
        StreamSeed(seed)
    }
}
