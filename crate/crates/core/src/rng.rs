//! Splittable, reproducible random streams.
//!
//! Every unit of work (a walk replicate, a scenery replicate under a fixed
//! walk, ...) draws from its own ChaCha8 stream. The key is derived from
//! the master seed and a lane tag; the replicate index selects the ChaCha
//! stream (nonce). Results therefore do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Lane tags separating independent uses of the same master seed.
pub mod lane {
    pub const WALK: u64 = 0x5741_4c4b;
    pub const SCENERY: u64 = 0x5343_454e;
    pub const TORAL: u64 = 0x544f_5241;
    pub const AUX: u64 = 0x4155_5800;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Identifies one reproducible random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamId {
    pub master_seed: u64,
    pub lane: u64,
    pub index: u64,
}

impl StreamId {
    pub fn new(master_seed: u64, lane: u64, index: u64) -> Self {
        StreamId {
            master_seed,
            lane,
            index,
        }
    }

    /// A sub-stream, e.g. scenery replicate `sub` under walk replicate `self.index`.
    pub fn child(&self, sub: u64) -> StreamId {
        StreamId {
            master_seed: self.master_seed,
            lane: splitmix64(self.lane ^ splitmix64(self.index.wrapping_add(0x1234_5678))),
            index: sub,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut state = splitmix64(self.master_seed) ^ self.lane;
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.index);
        rng
    }
}
