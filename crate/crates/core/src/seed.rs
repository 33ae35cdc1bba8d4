//! Deterministic seed fan-out.
//!
//! One master seed feeds every stochastic component. Child seeds are derived
//! with SplitMix64 over `(parent, stream tag, index)` so that they do not depend
//! on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed for `stream` / `index` from `parent`.
pub fn derive(parent: u64, stream: &str, index: u64) -> u64 {
    let mut h = splitmix64(parent);
    for b in stream.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    splitmix64(h ^ index)
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Named seeds for one experiment run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedPlan {
    pub master: u64,
}

impl SeedPlan {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn graph(&self) -> u64 {
        derive(self.master, "graph", 0)
    }

    pub fn louvain(&self) -> u64 {
        derive(self.master, "louvain", 0)
    }

    pub fn anneal(&self, level: usize) -> u64 {
        derive(self.master, "anneal", level as u64)
    }

    pub fn local_gnn(&self, level: usize) -> u64 {
        derive(self.master, "local-gnn", level as u64)
    }

    pub fn main_gnn(&self, sample: usize) -> u64 {
        derive(self.master, "main-gnn", sample as u64)
    }
}
