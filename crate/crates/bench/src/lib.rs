//! Fixtures shared by the benchmarks.

use dualis_core::dual::{dualize, DualGraph};
use dualis_core::gf::{build_preset, PartitionScheme, Preset};
use dualis_core::lattice::draw_params_on_stream;
use dualis_core::{build_lattice, Boundary, Family, LatticeSpec, ModelParams, ParamDistribution};

pub struct Fixture {
    pub spec: LatticeSpec,
    pub params: ModelParams,
    pub dual: DualGraph,
    pub scheme: PartitionScheme,
}

/// Periodic lattice with couplings and fields drawn uniformly.
pub fn fixture(side: usize, family: Family, couplings: (f64, f64), fields: (f64, f64), preset: Preset) -> Fixture {
    let spec = build_lattice(side, side, Boundary::Periodic).unwrap();
    let js = draw_params_on_stream(&ParamDistribution::UniformRange(couplings.0, couplings.1), spec.n_bonds(), 7, 1).unwrap();
    let hs = draw_params_on_stream(&ParamDistribution::UniformRange(fields.0, fields.1), spec.n_sites(), 7, 3).unwrap();
    let params = ModelParams::new(family, js, hs);
    let dual = dualize(&spec, &params).unwrap();
    let scheme = build_preset(&dual, preset).unwrap();
    Fixture { spec, params, dual, scheme }
}
