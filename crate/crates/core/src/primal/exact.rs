use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{bond_energy, site_energy, LatticeSpec, ModelParams};
use crate::primal::PrimalModel;

/// Default cap on the number of primal states visited by [`enumerate_z`].
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub log_z: f64,
    pub free_energy_per_site: f64,
    pub n_sites: usize,
    pub states: u64,
}

pub fn enumerate_z(spec: &LatticeSpec, params: &ModelParams) -> Result<ExactResult> {
    enumerate_z_with_budget(spec, params, DEFAULT_ENUMERATION_BUDGET)
}

/// Number of primal states, or an error when it exceeds `budget`.
pub fn state_count(n_sites: usize, q: u8, budget: u64) -> Result<u64> {
    let states = (q as f64).powi(n_sites as i32);
    if states > budget as f64 {
        return Err(Error::BudgetExceeded { states, budget });
    }
    Ok((q as u64).pow(n_sites as u32))
}

/// Exact `log Z` by visiting every configuration in modular Gray-code order,
/// so each step changes one spin and the log-weight is updated locally.
pub fn enumerate_z_with_budget(spec: &LatticeSpec, params: &ModelParams, budget: u64) -> Result<ExactResult> {
    params.validate(spec)?;
    let n = spec.n_sites();
    let q = params.q();
    let states = state_count(n, q, budget)?;
    let model = PrimalModel::new(spec, params)?;

    let mut x = vec![0u8; n];
    let mut counter = vec![0u8; n];
    let mut logf = -crate::lattice::energy(spec, params, &x)?;
    let mut shift = logf;
    let mut sum = 1.0f64;

    for _ in 1..states {
        // The digit that changes is the lowest non-maximal counter digit.
        let mut j = 0;
        while counter[j] == q - 1 {
            counter[j] = 0;
            j += 1;
        }
        counter[j] += 1;
        let old = x[j];
        let new = if old + 1 == q { 0 } else { old + 1 };
        logf += model.local_log_weight(&x, j, new) - model.local_log_weight(&x, j, old);
        x[j] = new;

        if logf > shift + 32.0 {
            sum *= (shift - logf).exp();
            shift = logf;
        }
        sum += (logf - shift).exp();
    }

    let log_z = shift + sum.ln();
    Ok(ExactResult { log_z, free_energy_per_site: log_z / n as f64, n_sites: n, states })
}

impl PrimalModel {
    /// Log-weight terms involving site `m` when it holds `s` (neighbours
    /// taken from `x`).
    #[inline]
    pub fn local_log_weight(&self, x: &[u8], m: usize, s: u8) -> f64 {
        let mut e = site_energy(self.family, self.fields[m], s);
        for &(nb, j) in &self.adjacency[m] {
            e += bond_energy(self.family, j, s, x[nb]);
        }
        -e
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, log_weight, Boundary, Family};
    use approx::assert_relative_eq;

    fn brute(spec: &LatticeSpec, params: &ModelParams) -> f64 {
        let n = spec.n_sites();
        let q = params.q() as usize;
        let mut terms = Vec::new();
        for code in 0..q.pow(n as u32) {
            let x: Vec<u8> = (0..n).map(|i| ((code / q.pow(i as u32)) % q) as u8).collect();
            terms.push(log_weight(spec, params, &x).unwrap());
        }
        crate::stats::log_sum_exp(&terms)
    }

    #[test]
    fn single_bond() {
        let l = build_lattice(1, 2, Boundary::Free).unwrap();
        let p = ModelParams::uniform(&l, Family::Ising, 1.0, 0.0);
        let r = enumerate_z(&l, &p).unwrap();
        assert_relative_eq!(r.log_z.exp(), 4.0 * 1f64.cosh(), max_relative = 1e-14);
        assert_relative_eq!(r.log_z.exp(), 6.17232, epsilon = 1e-5);
        assert_eq!(r.free_energy_per_site, r.log_z / 2.0);
    }

    #[test]
    fn gray_code_matches_brute_force() {
        let l = build_lattice(2, 3, Boundary::Periodic).unwrap();
        let mut p = ModelParams::uniform(&l, Family::Ising, 0.4, -0.3);
        p.couplings[2] = 1.1;
        p.fields[4] = 0.7;
        assert_relative_eq!(enumerate_z(&l, &p).unwrap().log_z, brute(&l, &p), max_relative = 1e-12);

        let l = build_lattice(2, 2, Boundary::Free).unwrap();
        let p = ModelParams::new(Family::Potts { q: 3 }, vec![0.3, 0.9, 1.2, 0.5], vec![0.2, 0.0, 0.4, 1.0]);
        assert_relative_eq!(enumerate_z(&l, &p).unwrap().log_z, brute(&l, &p), max_relative = 1e-12);
    }

    #[test]
    fn budget() {
        let l = build_lattice(5, 6, Boundary::Free).unwrap();
        let p = ModelParams::uniform(&l, Family::Ising, 0.4, 0.0);
        assert!(matches!(enumerate_z(&l, &p), Err(Error::BudgetExceeded { .. })));
        assert!(enumerate_z_with_budget(&l, &p, 1 << 10).is_err());
    }
}
