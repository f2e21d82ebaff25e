use rand::Rng;

use crate::dual::{duality_constant, DualGraph};
use crate::error::{Error, Result};
use crate::gf::{FreeParametrization, PartitionScheme};
use crate::rng::{ChainSeed, SimRng};
use crate::sampler::auxiliary::{AuxKind, AuxiliaryDistribution};
use crate::stats::{EstimateTrace, EstimatorForm, TraceBuilder, TraceMeta};

/// Whether the field-dual part of `x` violates the zero-sum property that
/// every valid configuration has (always false without field duals).
pub fn field_sum_violation(dual: &DualGraph, x: &[u8]) -> bool {
    let s: u32 = x[dual.n_bond_vars..dual.n_vars()].iter().map(|&v| v as u32).sum();
    !s.is_multiple_of(dual.q as u32)
}

/// `log Λ`: log-weight of the determined block plus the global scale.
#[inline]
pub fn log_lambda(dual: &DualGraph, scheme: &PartitionScheme, x: &[u8]) -> f64 {
    scheme.b_vars.iter().map(|&v| dual.log_tables[v][x[v] as usize]).sum::<f64>() + dual.log_scale
}

/// Draws complete dual configurations from an auxiliary distribution.
pub struct ConfigSampler<'a> {
    pub dual: &'a DualGraph,
    pub scheme: &'a PartitionScheme,
    pub aux: &'a AuxiliaryDistribution,
    scratch: Vec<u8>,
}

impl<'a> ConfigSampler<'a> {
    pub fn new(dual: &'a DualGraph, scheme: &'a PartitionScheme, aux: &'a AuxiliaryDistribution) -> Self {
        Self { dual, scheme, aux, scratch: Vec::new() }
    }

    /// Fills `x` with a valid configuration; returns the rejection count.
    #[inline]
    pub fn draw(&mut self, rng: &mut SimRng, x: &mut [u8]) -> Result<u64> {
        let r = self.aux.draw(rng, x, &mut self.scratch)?;
        self.scheme.complete(x)?;
        if cfg!(debug_assertions) && field_sum_violation(self.dual, x) {
            return Err(Error::Numeric("completed configuration violates the field-dual zero sum".into()));
        }
        Ok(r)
    }
}

fn sampler_name(kind: AuxKind) -> &'static str {
    match kind {
        AuxKind::Q1 => "is1",
        AuxKind::Q2 => "is2",
        AuxKind::PottsQ => "potts",
    }
}

/// Importance-sampling estimate of `log Z`: the mean of `Λ` over draws of
/// the auxiliary distribution estimates `Z_d / Z_q`.
pub fn is_estimate(
    dual: &DualGraph,
    scheme: &PartitionScheme,
    kind: AuxKind,
    samples: u64,
    seed: impl Into<ChainSeed>,
) -> Result<EstimateTrace> {
    let aux = AuxiliaryDistribution::new(dual, scheme, kind)?;
    is_estimate_with(dual, scheme, &aux, samples, seed)
}

pub fn is_estimate_with(
    dual: &DualGraph,
    scheme: &PartitionScheme,
    aux: &AuxiliaryDistribution,
    samples: u64,
    seed: impl Into<ChainSeed>,
) -> Result<EstimateTrace> {
    let seed = seed.into();
    let mut rng = seed.rng();
    let mut tb = TraceBuilder::new(TraceMeta {
        sampler: sampler_name(aux.kind).into(),
        seed,
        samples,
        n_sites: dual.n_sites,
        form: EstimatorForm::Direct,
        log_offset: aux.log_zq - duality_constant(dual),
        rejections: 0,
        iid_assumption_se: false,
    });
    let mut sampler = ConfigSampler::new(dual, scheme, aux);
    let mut x = vec![0u8; dual.n_vars()];
    for _ in 0..samples {
        let r = sampler.draw(&mut rng, &mut x)?;
        tb.add_rejections(r);
        tb.push(log_lambda(dual, scheme, &x))?;
    }
    Ok(tb.finish())
}

/// Draws the Potts sampled block and completes it; returns the field part
/// and the bond part of the configuration.
pub fn draw_potts(dual: &DualGraph, scheme: &PartitionScheme, rng: &mut SimRng) -> Result<(Vec<u8>, Vec<u8>)> {
    let aux = AuxiliaryDistribution::new(dual, scheme, AuxKind::PottsQ)?;
    let mut x = vec![0u8; dual.n_vars()];
    ConfigSampler::new(dual, scheme, &aux).draw(rng, &mut x)?;
    let y = x.split_off(dual.n_bond_vars);
    Ok((y, x))
}

/// Uniform sampling over admissible configurations: free coordinates are
/// drawn uniformly, so every admissible configuration has mass `q^-d`.
pub fn uniform_dual_estimate(
    dual: &DualGraph,
    scheme: &PartitionScheme,
    samples: u64,
    seed: impl Into<ChainSeed>,
) -> Result<EstimateTrace> {
    if let Some(v) = dual.negative_entry() {
        return Err(Error::Unsupported(format!("dual variable {v} has a negative factor entry")));
    }
    let seed = seed.into();
    let mut rng = seed.rng();
    let fp = scheme.free_parametrization(dual)?;
    let q = dual.q;
    let mut tb = TraceBuilder::new(TraceMeta {
        sampler: "dual-uniform".into(),
        seed,
        samples,
        n_sites: dual.n_sites,
        form: EstimatorForm::Direct,
        log_offset: fp.dimension() as f64 * (q as f64).ln() - duality_constant(dual),
        rejections: 0,
        iid_assumption_se: false,
    });
    let mut xf = vec![0u8; fp.dimension()];
    let mut x = vec![0u8; dual.n_vars()];
    for _ in 0..samples {
        for v in xf.iter_mut() {
            *v = rng.random_range(0..q);
        }
        fp.assemble(&xf, &mut x, &scheme.completion)?;
        tb.push(dual.log_product(&x) + dual.log_scale)?;
    }
    Ok(tb.finish())
}

/// Heat-bath chain over admissible configurations, moving one free
/// coordinate at a time.
#[derive(Clone, Debug)]
pub struct DualGibbsChain {
    pub x: Vec<u8>,
    pub rng: SimRng,
    logp: Vec<f64>,
}

impl DualGibbsChain {
    /// Chain started at the all-zero configuration.
    pub fn new(dual: &DualGraph, rng: SimRng) -> Self {
        Self { x: vec![0; dual.n_vars()], rng, logp: vec![0.0; dual.q as usize] }
    }

    /// One systematic sweep over the free coordinates, targeting the dual
    /// weights of `dual`.
    pub fn sweep(&mut self, dual: &DualGraph, fp: &FreeParametrization) {
        let q = dual.q as usize;
        for (i, col) in fp.columns.iter().enumerate() {
            let s0 = self.x[fp.free[i]] as usize;
            let mut max = f64::NEG_INFINITY;
            for s in 0..q {
                let d = (s + q - s0) % q;
                let mut lw = 0.0;
                for &(v, c) in col {
                    lw += dual.log_tables[v][(self.x[v] as usize + c as usize * d) % q];
                }
                self.logp[s] = lw;
                max = max.max(lw);
            }
            let mut total = 0.0;
            for lp in self.logp.iter_mut() {
                *lp = (*lp - max).exp();
                total += *lp;
            }
            let mut u = self.rng.random::<f64>() * total;
            let mut pick = q - 1;
            for (s, &w) in self.logp.iter().enumerate() {
                if u < w {
                    pick = s;
                    break;
                }
                u -= w;
            }
            let d = (pick + q - s0) % q;
            if d != 0 {
                for &(v, c) in col {
                    self.x[v] = ((self.x[v] as usize + c as usize * d) % q) as u8;
                }
            }
        }
    }
}

/// Reciprocal estimator over a dual Gibbs chain: the mean of `1/f_d`
/// under the dual Boltzmann law is `q^d / Z_d`.
pub fn dual_gibbs_estimate(
    dual: &DualGraph,
    scheme: &PartitionScheme,
    samples: u64,
    burn_in: u64,
    seed: impl Into<ChainSeed>,
) -> Result<EstimateTrace> {
    if dual.has_zero_entry() || dual.negative_entry().is_some() {
        return Err(Error::ZeroWeightSupport);
    }
    let seed = seed.into();
    let fp = scheme.free_parametrization(dual)?;
    let mut tb = TraceBuilder::new(TraceMeta {
        sampler: "dual-gibbs".into(),
        seed,
        samples,
        n_sites: dual.n_sites,
        form: EstimatorForm::Reciprocal,
        log_offset: fp.dimension() as f64 * (dual.q as f64).ln() - duality_constant(dual),
        rejections: 0,
        iid_assumption_se: true,
    });
    let mut chain = DualGibbsChain::new(dual, seed.rng());
    for _ in 0..burn_in {
        chain.sweep(dual, &fp);
    }
    for _ in 0..samples {
        chain.sweep(dual, &fp);
        tb.push(-(dual.log_product(&chain.x) + dual.log_scale))?;
    }
    Ok(tb.finish())
}
