//! Seeded random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream derived from the
//! experiment seed, so that adding chains or changing one parameter
//! distribution never perturbs the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream reserved for couplings of bonds sampled directly in the dual.
pub const STREAM_COUPLINGS_A: u64 = 1;
/// Stream reserved for couplings of bonds whose duals are determined.
pub const STREAM_COUPLINGS_B: u64 = 2;
/// Stream reserved for external fields.
pub const STREAM_FIELDS: u64 = 3;
const STREAM_CHAIN_BASE: u64 = 1 << 32;

pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Independent generator for Monte Carlo chain `chain` of an experiment.
pub fn chain_rng(seed: u64, chain: u64) -> SimRng {
    stream_rng(seed, STREAM_CHAIN_BASE + chain)
}

/// Identifies the random stream of one chain: experiment seed plus chain index.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct ChainSeed {
    pub seed: u64,
    pub chain: u64,
}

impl ChainSeed {
    pub fn new(seed: u64, chain: u64) -> Self {
        Self { seed, chain }
    }

    pub fn rng(&self) -> SimRng {
        chain_rng(self.seed, self.chain)
    }
}

impl From<u64> for ChainSeed {
    fn from(seed: u64) -> Self {
        Self { seed, chain: 0 }
    }
}
