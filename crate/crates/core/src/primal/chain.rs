use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{Family, LatticeSpec, ModelParams};
use crate::rng::SimRng;

/// Adjacency-list view of a model, shared read-only by all chains.
#[derive(Clone, Debug)]
pub struct PrimalModel {
    pub family: Family,
    pub fields: Vec<f64>,
    /// Per site: `(neighbour, coupling)`, one entry per incident bond.
    pub adjacency: Vec<Vec<(usize, f64)>>,
    pub bonds: Vec<(usize, usize, f64)>,
}

impl PrimalModel {
    pub fn new(spec: &LatticeSpec, params: &ModelParams) -> Result<Self> {
        params.validate(spec)?;
        let mut adjacency = vec![Vec::new(); spec.n_sites()];
        let mut bonds = Vec::with_capacity(spec.n_bonds());
        for (b, &j) in spec.bonds.iter().zip(&params.couplings) {
            adjacency[b.lo].push((b.hi, j));
            adjacency[b.hi].push((b.lo, j));
            bonds.push((b.lo, b.hi, j));
        }
        Ok(Self { family: params.family, fields: params.fields.clone(), adjacency, bonds })
    }

    pub fn n_sites(&self) -> usize {
        self.fields.len()
    }

    pub fn q(&self) -> u8 {
        self.family.q()
    }

    pub fn log_weight(&self, x: &[u8]) -> f64 {
        let fam = self.family;
        let b: f64 = self.bonds.iter().map(|&(k, l, j)| crate::lattice::bond_energy(fam, j, x[k], x[l])).sum();
        let s: f64 = self.fields.iter().zip(x).map(|(&h, &v)| crate::lattice::site_energy(fam, h, v)).sum();
        -(b + s)
    }
}

/// One Markov chain: configuration, private generator, sweep counter.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub x: Vec<u8>,
    pub rng: SimRng,
    pub sweep_count: u64,
}

impl ChainState {
    /// Chain started from a configuration drawn uniformly at random.
    pub fn random(model: &PrimalModel, mut rng: SimRng) -> Self {
        let q = model.q();
        let x = (0..model.n_sites()).map(|_| rng.random_range(0..q)).collect();
        Self { x, rng, sweep_count: 0 }
    }
}

/// One systematic-scan heat-bath sweep: every site in index order is redrawn
/// from its exact conditional given its neighbours and field.
pub fn gibbs_sweep(model: &PrimalModel, state: &mut ChainState) {
    let q = model.q() as usize;
    let mut logp = [0f64; 256];
    for m in 0..model.n_sites() {
        let mut max = f64::NEG_INFINITY;
        for s in 0..q {
            logp[s] = model.local_log_weight(&state.x, m, s as u8);
            max = max.max(logp[s]);
        }
        let mut total = 0.0;
        for lp in logp.iter_mut().take(q) {
            *lp = (*lp - max).exp();
            total += *lp;
        }
        let mut u = state.rng.random::<f64>() * total;
        let mut pick = q - 1;
        for (s, &w) in logp.iter().enumerate().take(q) {
            if u < w {
                pick = s;
                break;
            }
            u -= w;
        }
        state.x[m] = pick as u8;
    }
    state.sweep_count += 1;
}

fn find(parent: &mut [usize], mut a: usize) -> usize {
    while parent[a] != a {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    a
}

/// Swendsen-Wang update for the zero-field Ising model: aligned neighbours
/// are bonded with probability `1 - exp(-2J)`, then every cluster gets a
/// fresh uniform spin.
pub fn swendsen_wang_sweep(model: &PrimalModel, state: &mut ChainState) -> Result<()> {
    if !model.family.is_ising() {
        return Err(Error::Unsupported("Swendsen-Wang is implemented for the Ising model only".into()));
    }
    if model.fields.iter().any(|&h| h != 0.0) {
        return Err(Error::Unsupported("Swendsen-Wang requires zero external field".into()));
    }
    let n = model.n_sites();
    let mut parent: Vec<usize> = (0..n).collect();
    for &(k, l, j) in &model.bonds {
        if state.x[k] == state.x[l] && state.rng.random::<f64>() < open_probability(j) {
            let (a, b) = (find(&mut parent, k), find(&mut parent, l));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut label = vec![u8::MAX; n];
    for m in 0..n {
        let root = find(&mut parent, m);
        if label[root] == u8::MAX {
            label[root] = state.rng.random_range(0..2u8);
        }
        state.x[m] = label[root];
    }
    state.sweep_count += 1;
    Ok(())
}

/// Bond-activation probability for an aligned Ising pair with coupling `j`.
pub fn open_probability(j: f64) -> f64 {
    -(-2.0 * j).exp_m1()
}
