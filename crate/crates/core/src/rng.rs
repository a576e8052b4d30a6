//! Splittable seeding: one user seed fans out into independent ChaCha
//! streams keyed by a purpose label and an index, so results do not depend
//! on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Root of a seed tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree(u64);

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        SeedTree(seed)
    }

    pub fn seed(&self) -> u64 {
        self.0
    }

    /// Child tree for a labelled sub-task.
    pub fn child(&self, label: &str) -> SeedTree {
        let mut h = splitmix(self.0);
        for b in label.bytes() {
            h = splitmix(h ^ u64::from(b));
        }
        SeedTree(h)
    }

    /// Child tree for the `index`-th repetition of a sub-task.
    pub fn index(&self, index: u64) -> SeedTree {
        SeedTree(splitmix(splitmix(self.0) ^ index.wrapping_mul(0xD605_BBB5_8C8A_BB3D)))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Generator for stream `stream` of this node; streams never overlap.
    pub fn stream(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }
}
