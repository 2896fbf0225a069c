//! Seeded, splittable random streams.
//!
//! A [`RngStream`] names a ChaCha8 key built from `(seed, stream_id)`. Monte
//! Carlo estimators cut their sample budget into fixed-size chunks and draw
//! chunk `k` from ChaCha stream `k` under that key, so results do not depend
//! on how chunks are scheduled across threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// A sibling stream with a different id under the same seed.
    pub fn with_stream(&self, stream_id: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id,
        }
    }

    fn key(&self) -> [u8; 32] {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.stream_id.to_le_bytes());
        key[16..24].copy_from_slice(&splitmix64(self.seed).to_le_bytes());
        key[24..].copy_from_slice(&splitmix64(self.stream_id ^ 0xA5A5_A5A5_A5A5_A5A5).to_le_bytes());
        key
    }

    /// Generator for the whole stream (substream 0).
    pub fn generator(&self) -> ChaCha8Rng {
        self.substream(0)
    }

    /// Generator for substream `index`; distinct indices never overlap.
    pub fn substream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key());
        rng.set_stream(index);
        rng
    }
}
