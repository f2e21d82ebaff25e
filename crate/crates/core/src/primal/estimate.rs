use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::{LatticeSpec, ModelParams};
use crate::primal::{gibbs_sweep, swendsen_wang_sweep, ChainState, PrimalModel};
use crate::rng::ChainSeed;
use crate::stats::{EstimateTrace, EstimatorForm, TraceBuilder, TraceMeta};

pub const DEFAULT_BURN_IN: u64 = 1_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimalSampler {
    Gibbs,
    #[serde(rename = "sw")]
    SwendsenWang,
}

/// Uniform importance sampling over `X^N`: `Z ~ |X|^N mean f(x)`.
pub fn method1_uniform_estimate(
    spec: &LatticeSpec,
    params: &ModelParams,
    samples: u64,
    seed: impl Into<ChainSeed>,
) -> Result<EstimateTrace> {
    let seed = seed.into();
    let mut rng = seed.rng();
    let model = PrimalModel::new(spec, params)?;
    let n = model.n_sites();
    let q = model.q();
    let mut tb = TraceBuilder::new(TraceMeta {
        sampler: "primal-uniform".into(),
        seed,
        samples,
        n_sites: n,
        form: EstimatorForm::Direct,
        log_offset: n as f64 * (q as f64).ln(),
        rejections: 0,
        iid_assumption_se: false,
    });
    let mut x = vec![0u8; n];
    for _ in 0..samples {
        for v in x.iter_mut() {
            *v = rng.random_range(0..q);
        }
        tb.push(model.log_weight(&x))?;
    }
    Ok(tb.finish())
}

/// Reciprocal estimator `1/Z ~ mean(1/f(x)) / |X|^N` over samples of the
/// Boltzmann distribution, drawn by Gibbs or Swendsen-Wang sweeps after
/// `burn_in` sweeps. The trace reports `-log` of the running mean.
pub fn method2_reciprocal_estimate(
    spec: &LatticeSpec,
    params: &ModelParams,
    sampler: PrimalSampler,
    samples: u64,
    burn_in: u64,
    seed: impl Into<ChainSeed>,
) -> Result<EstimateTrace> {
    let seed = seed.into();
    let model = PrimalModel::new(spec, params)?;
    let n = model.n_sites();
    let mut state = ChainState::random(&model, seed.rng());
    let sweep = |st: &mut ChainState| -> Result<()> {
        match sampler {
            PrimalSampler::Gibbs => {
                gibbs_sweep(&model, st);
                Ok(())
            }
            PrimalSampler::SwendsenWang => swendsen_wang_sweep(&model, st),
        }
    };
    // Surface sampler/params mismatches before burning in.
    sweep(&mut state)?;
    for _ in 1..burn_in {
        sweep(&mut state)?;
    }
    let name = match sampler {
        PrimalSampler::Gibbs => "primal-gibbs",
        PrimalSampler::SwendsenWang => "primal-sw",
    };
    let mut tb = TraceBuilder::new(TraceMeta {
        sampler: name.into(),
        seed,
        samples,
        n_sites: n,
        form: EstimatorForm::Reciprocal,
        log_offset: n as f64 * (model.q() as f64).ln(),
        rejections: 0,
        iid_assumption_se: true,
    });
    for _ in 0..samples {
        sweep(&mut state)?;
        tb.push(-model.log_weight(&state.x))?;
    }
    Ok(tb.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, Boundary, Family};
    use crate::rng::chain_rng;
    use approx::assert_relative_eq;

    #[test]
    fn constant_weight_is_exact() {
        let l = build_lattice(2, 3, Boundary::Free).unwrap();
        let p = ModelParams::uniform(&l, Family::Ising, 0.0, 0.0);
        let t = method1_uniform_estimate(&l, &p, 17, 0u64).unwrap();
        assert_relative_eq!(t.log_z().unwrap(), 6.0 * 2f64.ln(), max_relative = 1e-14);
        assert_eq!(t.std_err().unwrap(), 0.0);
        let t = method2_reciprocal_estimate(&l, &p, PrimalSampler::Gibbs, 9, 3, 0).unwrap();
        assert_relative_eq!(t.log_z().unwrap(), 6.0 * 2f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn single_sample_is_definition() {
        let l = build_lattice(2, 2, Boundary::Free).unwrap();
        let p = ModelParams::uniform(&l, Family::Ising, 0.3, 0.1);
        let t = method1_uniform_estimate(&l, &p, 1, 5).unwrap();
        // Replay the single draw.
        let mut rng = chain_rng(5, 0);
        let x: Vec<u8> = (0..4).map(|_| rng.random_range(0..2u8)).collect();
        let lf = crate::lattice::log_weight(&l, &p, &x).unwrap();
        assert_relative_eq!(t.log_z().unwrap(), 4.0 * 2f64.ln() + lf, max_relative = 1e-14);
    }

    #[test]
    fn sw_rejects_field() {
        let l = build_lattice(2, 2, Boundary::Free).unwrap();
        let p = ModelParams::uniform(&l, Family::Ising, 0.3, 0.1);
        assert!(method2_reciprocal_estimate(&l, &p, PrimalSampler::SwendsenWang, 10, 10, 0).is_err());
    }
}
