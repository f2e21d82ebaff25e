//! Linear algebra over `Z_q` on the dual parity checks: splitting the
//! dual variables into a sampled and a determined block, and completing
//! assignments.

pub mod elim;
pub mod partition;
pub mod solve;
pub mod zq;

pub use elim::{reduce, reduce_bits, reduce_bytes, Reduced};
pub use partition::{
    build_preset, candidate_bonds, spanning_bonds, strongest_field_site, validate_partition, PartitionReport,
    PartitionScheme, Preset, Residual,
};
pub use solve::{Completion, FreeParametrization, LinearMap, Propagator};
pub use zq::Zq;
