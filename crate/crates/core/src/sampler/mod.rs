//! Dual-domain estimators of the partition function.

pub mod auxiliary;
pub mod draw;
pub mod estimate;

pub use auxiliary::{AuxKind, AuxiliaryDistribution, Q1Normalizer};
pub use draw::{draw_y_alg1, draw_y_alg2, draw_z, SymbolLaw, MAX_REJECTIONS};
pub use estimate::{
    draw_potts, dual_gibbs_estimate, field_sum_violation, is_estimate, is_estimate_with, log_lambda,
    uniform_dual_estimate, ConfigSampler, DualGibbsChain,
};
