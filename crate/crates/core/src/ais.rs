//! Annealed importance sampling over strengthened couplings of the
//! determined bonds.
//!
//! Level `v` of the ladder raises every determined-bond coupling to the
//! power `alpha_v`; level 0 is the target model. A chain starts with an
//! auxiliary draw at the top level, then walks down, applying dual Gibbs
//! sweeps at each level and collecting the ratio of consecutive dual
//! weights.

use serde::{Deserialize, Serialize};

use crate::dual::{duality_constant, dualize, DualGraph};
use crate::error::{Error, Result};
use crate::gf::PartitionScheme;
use crate::lattice::{LatticeSpec, ModelParams};
use crate::rng::ChainSeed;
use crate::sampler::{AuxKind, AuxiliaryDistribution, ConfigSampler, DualGibbsChain};
use crate::stats::{EstimateTrace, EstimatorForm, RunningMoments, TraceBuilder, TraceMeta};

/// Coupling the top level of the default ladder reaches.
pub const DEFAULT_TOP_COUPLING: f64 = 2.5;
/// Ratio between consecutive exponents of the default ladder.
pub const DEFAULT_RATIO: f64 = 1.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealingLadder {
    /// `alpha_0 = 1 <= alpha_1 <= ... <= alpha_V`.
    pub exponents: Vec<f64>,
    pub sweeps_per_level: u64,
    /// Largest tolerated variance of one level's log-weight increment.
    pub variance_limit: Option<f64>,
}

impl AnnealingLadder {
    pub fn new(exponents: Vec<f64>, sweeps_per_level: u64) -> Result<Self> {
        if exponents.len() < 2 {
            return Err(Error::Config("an annealing ladder needs at least two exponents".into()));
        }
        if exponents[0] != 1.0 {
            return Err(Error::Config(format!("the first ladder exponent must be 1, got {}", exponents[0])));
        }
        if exponents.windows(2).any(|w| !(w[1] >= w[0]) || !w[1].is_finite()) {
            return Err(Error::Config(format!("ladder exponents must be finite and nondecreasing: {exponents:?}")));
        }
        Ok(Self { exponents, sweeps_per_level, variance_limit: None })
    }

    /// Geometric ladder `alpha_v = 1.5^v`, long enough that the weakest
    /// determined coupling reaches [`DEFAULT_TOP_COUPLING`].
    pub fn default_for(min_coupling: f64, sweeps_per_level: u64) -> Result<Self> {
        if !(min_coupling > 1.0) {
            return Err(Error::Config(format!(
                "the default ladder needs determined couplings above 1 (weakest is {min_coupling}); give explicit exponents"
            )));
        }
        let top = (DEFAULT_TOP_COUPLING.ln() / min_coupling.ln()).max(1.0);
        let levels = (top.ln() / DEFAULT_RATIO.ln()).ceil().max(1.0) as i32;
        Self::new((0..=levels).map(|v| DEFAULT_RATIO.powi(v)).collect(), sweeps_per_level)
    }

    pub fn with_variance_limit(mut self, limit: f64) -> Self {
        self.variance_limit = Some(limit);
        self
    }

    pub fn levels(&self) -> usize {
        self.exponents.len() - 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AisOutcome {
    pub trace: EstimateTrace,
    /// Variance over chains of the log-weight increment entering at each
    /// level (index `V` is the initial importance weight).
    pub level_variance: Vec<f64>,
}

/// Model parameters of every ladder level, level 0 first.
pub fn level_params(params: &ModelParams, scheme: &PartitionScheme, ladder: &AnnealingLadder) -> Vec<ModelParams> {
    ladder
        .exponents
        .iter()
        .map(|&a| {
            let mut p = params.clone();
            for (b, j) in p.couplings.iter_mut().enumerate() {
                if !scheme.in_a[b] {
                    *j = j.powf(a);
                }
            }
            p
        })
        .collect()
}

pub fn ais_estimate(
    spec: &LatticeSpec,
    params: &ModelParams,
    scheme: &PartitionScheme,
    ladder: &AnnealingLadder,
    chains: u64,
    seed: impl Into<ChainSeed>,
) -> Result<AisOutcome> {
    let seed = seed.into();
    let levels: Vec<DualGraph> =
        level_params(params, scheme, ladder).iter().map(|p| dualize(spec, p)).collect::<Result<_>>()?;
    let top = levels.len() - 1;
    let base = &levels[0];
    if ladder.sweeps_per_level > 0 && levels.iter().any(|d| d.has_zero_entry()) {
        return Err(Error::ZeroWeightSupport);
    }
    let kind = if base.family.is_ising() { AuxKind::Q2 } else { AuxKind::PottsQ };
    let aux = AuxiliaryDistribution::new(&levels[top], scheme, kind)?;
    let fp = scheme.free_parametrization(base)?;
    let b_bonds: Vec<usize> = scheme.b_vars.iter().copied().filter(|&v| v < base.n_bond_vars).collect();
    let delta = |hi: &DualGraph, lo: &DualGraph, x: &[u8]| -> f64 {
        b_bonds.iter().map(|&b| lo.log_tables[b][x[b] as usize] - hi.log_tables[b][x[b] as usize]).sum()
    };

    let mut tb = TraceBuilder::new(TraceMeta {
        sampler: "ais".into(),
        seed,
        samples: chains,
        n_sites: base.n_sites,
        form: EstimatorForm::Direct,
        log_offset: aux.log_zq - duality_constant(base),
        rejections: 0,
        iid_assumption_se: false,
    });
    let mut moments = vec![RunningMoments::default(); top + 1];
    let mut sampler = ConfigSampler::new(&levels[top], scheme, &aux);
    let mut chain = DualGibbsChain::new(base, seed.rng());
    for _ in 0..chains {
        sampler.draw(&mut chain.rng, &mut chain.x)?;
        let start: f64 = scheme.b_vars.iter().map(|&v| levels[top].log_tables[v][chain.x[v] as usize]).sum();
        moments[top].push(start);
        let mut log_w = start;
        for v in (0..top).rev() {
            for _ in 0..ladder.sweeps_per_level {
                chain.sweep(&levels[v + 1], &fp);
            }
            let inc = delta(&levels[v + 1], &levels[v], &chain.x);
            moments[v].push(inc);
            log_w += inc;
        }
        tb.push(log_w)?;
    }
    let level_variance: Vec<f64> = moments.iter().map(|m| m.variance()).collect();
    if let Some(limit) = ladder.variance_limit {
        if let Some((level, &variance)) = level_variance.iter().enumerate().find(|(_, &v)| v > limit) {
            return Err(Error::LadderTooShort { level, variance, limit });
        }
    }
    Ok(AisOutcome { trace: tb.finish(), level_variance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_validation() {
        assert!(AnnealingLadder::new(vec![1.0], 1).is_err());
        assert!(AnnealingLadder::new(vec![1.2, 2.0], 1).is_err());
        assert!(AnnealingLadder::new(vec![1.0, 0.9], 1).is_err());
        assert!(AnnealingLadder::new(vec![1.0, 1.0], 1).is_ok());
        assert!(AnnealingLadder::default_for(0.9, 1).is_err());
        let l = AnnealingLadder::default_for(1.15, 5).unwrap();
        let top = *l.exponents.last().unwrap();
        assert!(1.15f64.powf(top) >= DEFAULT_TOP_COUPLING);
        assert!(1.15f64.powf(top / DEFAULT_RATIO) < DEFAULT_TOP_COUPLING);
    }
}
