//! Realizes a configuration as one concrete model instance.

use dualis_core::dual::{dualize, DualGraph};
use dualis_core::gf::{build_preset, PartitionScheme, Preset};
use dualis_core::lattice::draw_params_on_stream;
use dualis_core::rng::{STREAM_COUPLINGS_A, STREAM_COUPLINGS_B, STREAM_FIELDS};
use dualis_core::{build_lattice, LatticeSpec, ModelParams, ParamDistribution};

use crate::config::{Couplings, ExperimentConfig, PartitionName, SamplerId};
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub spec: LatticeSpec,
    pub params: ModelParams,
    /// Per bond: whether its dual variable is in the determined block.
    pub bonds_in_b: Vec<bool>,
}

impl Instance {
    pub fn bonds_b(&self) -> usize {
        self.bonds_in_b.iter().filter(|&&b| b).count()
    }

    pub fn bonds_a(&self) -> usize {
        self.bonds_in_b.len() - self.bonds_b()
    }
}

fn draw(dist: &ParamDistribution, count: usize, seed: u64, stream: u64) -> Result<Vec<f64>, CliError> {
    if count == 0 {
        return Ok(Vec::new());
    }
    Ok(draw_params_on_stream(dist, count, seed, stream)?)
}

fn split_preset(partition: PartitionName) -> Preset {
    match partition {
        PartitionName::Comb => Preset::Alg1Style,
        PartitionName::Checker => Preset::Checker { exclude_field: false },
    }
}

/// Draws fields, chooses the bond split, then draws couplings per bond
/// class. With separate `J_A`/`J_B` distributions the split is chosen on
/// unit couplings, so it depends on geometry alone.
pub fn build_instance(cfg: &ExperimentConfig) -> Result<Instance, CliError> {
    let spec = build_lattice(cfg.rows, cfg.cols, cfg.boundary)?;
    let nb = spec.n_bonds();
    let fields = draw(&cfg.fields, spec.n_sites(), cfg.seed, STREAM_FIELDS)?;
    let preset = split_preset(cfg.partition);
    let (couplings, bonds_in_b) = match &cfg.couplings {
        Couplings::All(dist) => {
            let js = draw(dist, nb, cfg.seed, STREAM_COUPLINGS_A)?;
            let dual = dualize(&spec, &ModelParams::new(cfg.family, js.clone(), fields.clone()))?;
            let split = build_preset(&dual, preset)?.bonds_in_b(&dual);
            (js, split)
        }
        Couplings::Split { sampled, determined } => {
            let unit = ModelParams::new(cfg.family, vec![1.0; nb], fields.clone());
            let dual = dualize(&spec, &unit)?;
            let split = build_preset(&dual, preset)?.bonds_in_b(&dual);
            let n_b = split.iter().filter(|&&b| b).count();
            let mut a = draw(sampled, nb - n_b, cfg.seed, STREAM_COUPLINGS_A)?.into_iter();
            let mut b = draw(determined, n_b, cfg.seed, STREAM_COUPLINGS_B)?.into_iter();
            let js = split.iter().map(|&in_b| if in_b { b.next() } else { a.next() }.unwrap()).collect();
            (js, split)
        }
    };
    let params = ModelParams::new(cfg.family, couplings, fields);
    params.validate(&spec)?;
    Ok(Instance { spec, params, bonds_in_b })
}

/// Preset of a sampler on the configured split: the first importance
/// sampler keeps every field dual sampled, the others move one out.
pub fn sampler_preset(partition: PartitionName, sampler: SamplerId) -> Preset {
    let exclude = sampler != SamplerId::Is1;
    match (partition, exclude) {
        (PartitionName::Comb, false) => Preset::Alg1Style,
        (PartitionName::Comb, true) => Preset::Alg2Style,
        (PartitionName::Checker, e) => Preset::Checker { exclude_field: e },
    }
}

pub fn scheme_for(
    cfg: &ExperimentConfig,
    inst: &Instance,
    dual: &DualGraph,
    sampler: SamplerId,
) -> Result<PartitionScheme, CliError> {
    Ok(PartitionScheme::from_bond_split(dual, sampler_preset(cfg.partition, sampler), &inst.bonds_in_b)?)
}
