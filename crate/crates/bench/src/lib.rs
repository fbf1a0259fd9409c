//! Fixed-seed fixtures shared by the benchmarks.

use proxgen_core::instances::{StrongFamily, StrongParams, Theorem1Instance, Theorem1Params};
use proxgen_core::MdpDistribution;

pub const SEED: u64 = 17;

/// Tree family with small features so benchmarks time queries, not feature draws.
pub fn tree_family(horizon: u32, gap: u32) -> Theorem1Instance {
    let mut p = Theorem1Params::new(horizon, gap, SEED);
    p.feature_dim = 16;
    Theorem1Instance::build(p).expect("valid fixture parameters")
}

pub fn strong_family(horizon: u32, members: u64) -> MdpDistribution {
    StrongFamily::build(StrongParams::new(horizon, members, SEED))
        .expect("valid fixture parameters")
        .distribution()
}
