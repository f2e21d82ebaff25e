//! Partition functions of 2D ferromagnetic Ising and q-state Potts models,
//! estimated by importance sampling on the dual Forney factor graph.
//!
//! The crate is organised bottom-up:
//!
//! - [`lattice`]: geometry, couplings and fields, primal energies;
//! - [`primal`]: exact enumeration and primal-domain baselines (uniform
//!   sampling, reciprocal estimator over Gibbs or Swendsen-Wang chains);
//! - [`dual`]: the dual factor graph, its factor tables and the constant
//!   linking its partition function to the primal one;
//! - [`gf`]: the split of dual variables into a sampled block and a
//!   determined block, and the modular linear algebra behind it;
//! - [`sampler`]: the dual-domain estimators (two importance samplers for
//!   Ising, the Potts sampler, uniform and Gibbs baselines);
//! - [`ais`]: annealed importance sampling over strengthened couplings;
//! - [`stats`]: log-domain accumulators and estimate traces.

pub mod ais;
pub mod dual;
pub mod error;
pub mod gf;
pub mod lattice;
pub mod primal;
pub mod rng;
pub mod sampler;
pub mod stats;

pub use error::{Error, Result};
pub use lattice::{build_lattice, Boundary, Family, LatticeSpec, ModelParams, ParamDistribution};
pub use rng::ChainSeed;
pub use stats::{EstimateTrace, LogAccumulator};
