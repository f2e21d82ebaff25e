//! Exact enumeration and primal-domain baseline estimators.

mod chain;
mod estimate;
mod exact;

pub use chain::{gibbs_sweep, open_probability, swendsen_wang_sweep, ChainState, PrimalModel};
pub use estimate::{method1_uniform_estimate, method2_reciprocal_estimate, PrimalSampler, DEFAULT_BURN_IN};
pub use exact::{enumerate_z, enumerate_z_with_budget, state_count, ExactResult, DEFAULT_ENUMERATION_BUDGET};
