//! Hierarchical, order-independent seeding.
//!
//! A [`SeedTree`] names a stream by `(master_seed, path)`. Each path element is
//! folded into the seed with a SplitMix64 finalizer so sibling paths land on
//! unrelated ChaCha streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream roles appended as the last path element.
pub mod role {
    pub const DATA: u64 = 1;
    pub const INIT: u64 = 2;
    pub const FIT: u64 = 3;
    pub const TEST: u64 = 4;
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SeedTree {
    pub master_seed: u64,
    pub path: Vec<u64>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedTree {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            path: Vec::new(),
        }
    }

    pub fn child(&self, index: u64) -> Self {
        let mut path = self.path.clone();
        path.push(index);
        Self {
            master_seed: self.master_seed,
            path,
        }
    }

    /// 64-bit digest of `(master_seed, path)`.
    pub fn seed(&self) -> u64 {
        let mut h = splitmix64(self.master_seed);
        for (depth, &p) in self.path.iter().enumerate() {
            h = splitmix64(h ^ splitmix64(p.wrapping_add((depth as u64 + 1) << 56)));
        }
        h
    }

    pub fn rng(&self) -> SimRng {
        SimRng::seed_from_u64(self.seed())
    }

    pub fn stream(&self, role: u64) -> SimRng {
        self.child(role).rng()
    }
}
