//! Deterministic random substreams.
//!
//! Replicate `i` of an experiment always draws from the same ChaCha stream,
//! derived from the master seed, a purpose tag and `i`. Results are therefore
//! identical for a fixed master seed no matter how replicates are scheduled
//! across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose tags separating the substream families of one experiment.
pub mod tags {
    pub const TRIPLETS: u64 = 0x5452_4950;
    pub const POLICY: u64 = 0x504f_4c49;
    pub const ASSUMPTIONS: u64 = 0x4153_534d;
    pub const STOPPING: u64 = 0x5354_4f50;
    pub const FOC: u64 = 0x464f_4343;
    pub const INTEGRAL: u64 = 0x494e_5447;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Streams {
    master: u64,
}

impl Streams {
    pub fn new(master_seed: u64) -> Self {
        Self { master: master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master
    }

    /// A family of streams independent from this one, e.g. for a second,
    /// independent pool of the same experiment.
    pub fn fork(&self, salt: u64) -> Self {
        Self {
            master: splitmix64(self.master ^ splitmix64(salt.wrapping_add(0x6a09_e667_f3bc_c909))),
        }
    }

    pub fn rng(&self, tag: u64, replicate: u64) -> StreamRng {
        let mut rng = StreamRng::seed_from_u64(splitmix64(self.master ^ splitmix64(tag)));
        rng.set_stream(replicate);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
