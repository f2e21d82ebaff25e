//! Lattice geometry, model parameters and primal energetics.
//!
//! Spins take values in `{0, .., q-1}` (Ising uses `{0, 1}`), sites are
//! indexed row-major, and `beta` is fixed to one: temperature enters only
//! through the magnitude of couplings and fields.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Free,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Horizontal,
    Vertical,
}

/// A nearest-neighbour bond. `lo < hi` always holds; `(row, col)` is the
/// position of the bond's anchor site (left end for horizontal bonds, upper
/// end for vertical ones; the last column/row for wraparound bonds).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub lo: usize,
    pub hi: usize,
    pub axis: Axis,
    pub wrap: bool,
    pub row: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub rows: usize,
    pub cols: usize,
    pub boundary: Boundary,
    pub bonds: Vec<Bond>,
}

impl LatticeSpec {
    pub fn n_sites(&self) -> usize {
        self.rows * self.cols
    }

    pub fn n_bonds(&self) -> usize {
        self.bonds.len()
    }

    pub fn site(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// Bonds incident to each site, as `(bond index, other site)`.
    pub fn incidence(&self) -> Vec<Vec<(usize, usize)>> {
        let mut inc = vec![Vec::new(); self.n_sites()];
        for (b, bond) in self.bonds.iter().enumerate() {
            inc[bond.lo].push((b, bond.hi));
            inc[bond.hi].push((b, bond.lo));
        }
        inc
    }
}

/// Builds a `rows x cols` grid. Bonds are listed horizontal (row-major),
/// then vertical, then wraparound (horizontal wraps before vertical ones).
///
/// A periodic lattice needs at least two rows and two columns. With exactly
/// two, a wraparound bond doubles an interior one; both are kept, giving the
/// `2N` bonds of a torus.
pub fn build_lattice(rows: usize, cols: usize, boundary: Boundary) -> Result<LatticeSpec> {
    if rows == 0 || cols == 0 {
        return Err(Error::Lattice(format!("dimensions must be positive, got {rows}x{cols}")));
    }
    if boundary == Boundary::Periodic && (rows < 2 || cols < 2) {
        return Err(Error::Lattice(format!(
            "periodic wrap needs at least 2 rows and 2 columns, got {rows}x{cols}"
        )));
    }
    let at = |r: usize, c: usize| r * cols + c;
    let mut bonds = Vec::new();
    for r in 0..rows {
        for c in 0..cols.saturating_sub(1) {
            bonds.push(Bond { lo: at(r, c), hi: at(r, c + 1), axis: Axis::Horizontal, wrap: false, row: r, col: c });
        }
    }
    for r in 0..rows.saturating_sub(1) {
        for c in 0..cols {
            bonds.push(Bond { lo: at(r, c), hi: at(r + 1, c), axis: Axis::Vertical, wrap: false, row: r, col: c });
        }
    }
    if boundary == Boundary::Periodic {
        for r in 0..rows {
            bonds.push(Bond { lo: at(r, 0), hi: at(r, cols - 1), axis: Axis::Horizontal, wrap: true, row: r, col: cols - 1 });
        }
        for c in 0..cols {
            bonds.push(Bond { lo: at(0, c), hi: at(rows - 1, c), axis: Axis::Vertical, wrap: true, row: rows - 1, col: c });
        }
    }
    Ok(LatticeSpec { rows, cols, boundary, bonds })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Ising,
    Potts { q: u8 },
}

impl Family {
    pub fn q(&self) -> u8 {
        match *self {
            Family::Ising => 2,
            Family::Potts { q } => q,
        }
    }

    pub fn is_ising(&self) -> bool {
        matches!(self, Family::Ising)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub family: Family,
    /// One coupling per bond, same order as `LatticeSpec::bonds`.
    pub couplings: Vec<f64>,
    /// One field per site.
    pub fields: Vec<f64>,
}

impl ModelParams {
    pub fn new(family: Family, couplings: Vec<f64>, fields: Vec<f64>) -> Self {
        Self { family, couplings, fields }
    }

    /// Constant coupling and field on every bond and site.
    pub fn uniform(spec: &LatticeSpec, family: Family, coupling: f64, field: f64) -> Self {
        Self::new(family, vec![coupling; spec.n_bonds()], vec![field; spec.n_sites()])
    }

    pub fn q(&self) -> u8 {
        self.family.q()
    }

    pub fn has_field(&self) -> bool {
        self.fields.iter().any(|&h| h != 0.0)
    }

    /// Checks lengths, ferromagnetism (`J >= 0`) and, for Potts, `H >= 0`.
    pub fn validate(&self, spec: &LatticeSpec) -> Result<()> {
        if let Family::Potts { q } = self.family {
            if q < 2 {
                return Err(Error::Params(format!("Potts needs q >= 2, got {q}")));
            }
        }
        if self.couplings.len() != spec.n_bonds() {
            return Err(Error::Params(format!(
                "{} couplings for {} bonds",
                self.couplings.len(),
                spec.n_bonds()
            )));
        }
        if self.fields.len() != spec.n_sites() {
            return Err(Error::Params(format!("{} fields for {} sites", self.fields.len(), spec.n_sites())));
        }
        if let Some((b, j)) = self.couplings.iter().enumerate().find(|(_, j)| !j.is_finite() || **j < 0.0) {
            return Err(Error::Params(format!("coupling {j} on bond {b} is not ferromagnetic")));
        }
        if let Some((m, h)) = self.fields.iter().enumerate().find(|(_, h)| !h.is_finite()) {
            return Err(Error::Params(format!("field {h} on site {m} is not finite")));
        }
        if !self.family.is_ising() {
            if let Some((m, h)) = self.fields.iter().enumerate().find(|(_, h)| **h < 0.0) {
                return Err(Error::Params(format!("Potts field {h} on site {m} is negative")));
            }
        }
        Ok(())
    }
}

fn check_config(spec: &LatticeSpec, params: &ModelParams, x: &[u8]) -> Result<()> {
    if x.len() != spec.n_sites() {
        return Err(Error::Params(format!("configuration has {} spins for {} sites", x.len(), spec.n_sites())));
    }
    let q = params.q();
    if let Some((m, s)) = x.iter().enumerate().find(|(_, s)| **s >= q) {
        return Err(Error::Params(format!("spin {s} at site {m} is outside the alphabet of size {q}")));
    }
    Ok(())
}

/// Energy contribution of one bond with coupling `j`.
#[inline]
pub fn bond_energy(family: Family, j: f64, a: u8, b: u8) -> f64 {
    match family {
        Family::Ising => {
            if a == b {
                -j
            } else {
                j
            }
        }
        Family::Potts { .. } => {
            if a == b {
                -j
            } else {
                0.0
            }
        }
    }
}

/// Energy contribution of one site in field `h`.
#[inline]
pub fn site_energy(family: Family, h: f64, s: u8) -> f64 {
    match family {
        Family::Ising => {
            if s == 1 {
                -h
            } else {
                h
            }
        }
        Family::Potts { .. } => {
            if s == 0 {
                -h
            } else {
                0.0
            }
        }
    }
}

pub fn energy(spec: &LatticeSpec, params: &ModelParams, x: &[u8]) -> Result<f64> {
    check_config(spec, params, x)?;
    let fam = params.family;
    let bonds: f64 = spec
        .bonds
        .iter()
        .zip(&params.couplings)
        .map(|(b, &j)| bond_energy(fam, j, x[b.lo], x[b.hi]))
        .sum();
    let sites: f64 = params.fields.iter().zip(x).map(|(&h, &s)| site_energy(fam, h, s)).sum();
    Ok(bonds + sites)
}

/// `log f(x) = -energy(x)`; weights are only ever handled in log form.
pub fn log_weight(spec: &LatticeSpec, params: &ModelParams, x: &[u8]) -> Result<f64> {
    energy(spec, params, x).map(|e| -e)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ParamDistribution {
    Constant(f64),
    UniformRange(f64, f64),
    Explicit(Vec<f64>),
}

impl ParamDistribution {
    pub fn validate(&self, count: usize) -> Result<()> {
        match self {
            ParamDistribution::Constant(v) if !v.is_finite() => Err(Error::Params(format!("constant {v} is not finite"))),
            ParamDistribution::UniformRange(lo, hi) if !(lo.is_finite() && hi.is_finite() && lo <= hi) => {
                Err(Error::Params(format!("invalid uniform range [{lo}, {hi}]")))
            }
            ParamDistribution::Explicit(v) if v.len() != count => {
                Err(Error::Params(format!("explicit list has {} values, {} needed", v.len(), count)))
            }
            _ => Ok(()),
        }
    }
}

/// Draws `count` values on stream 0 of `seed`.
pub fn draw_params(dist: &ParamDistribution, count: usize, seed: u64) -> Result<Vec<f64>> {
    draw_params_on_stream(dist, count, seed, 0)
}

/// Draws `count` i.i.d. values from `dist` using the given sub-stream of `seed`.
pub fn draw_params_on_stream(dist: &ParamDistribution, count: usize, seed: u64, stream: u64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::Params("parameter count must be positive".into()));
    }
    dist.validate(count)?;
    Ok(match dist {
        ParamDistribution::Constant(v) => vec![*v; count],
        ParamDistribution::UniformRange(lo, hi) => {
            let mut rng = stream_rng(seed, stream);
            (0..count).map(|_| rng.random_range(*lo..=*hi)).collect()
        }
        ParamDistribution::Explicit(v) => v.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bond_counts() {
        assert_eq!(build_lattice(2, 2, Boundary::Free).unwrap().n_bonds(), 4);
        assert_eq!(build_lattice(2, 2, Boundary::Periodic).unwrap().n_bonds(), 8);
        assert_eq!(build_lattice(30, 30, Boundary::Periodic).unwrap().n_bonds(), 1800);
        let l = build_lattice(3, 5, Boundary::Free).unwrap();
        assert_eq!(l.n_bonds(), 3 * 4 + 5 * 2);
    }

    #[test]
    fn periodic_too_small() {
        assert!(build_lattice(1, 5, Boundary::Periodic).is_err());
        assert!(build_lattice(0, 5, Boundary::Free).is_err());
        assert!(build_lattice(1, 1, Boundary::Free).is_ok());
    }

    #[test]
    fn bond_ordering_and_neighbours() {
        let l = build_lattice(3, 4, Boundary::Periodic).unwrap();
        let mut seen_wrap = false;
        for b in &l.bonds {
            assert!(b.lo < b.hi);
            let (r1, c1) = (b.lo / 4, b.lo % 4);
            let (r2, c2) = (b.hi / 4, b.hi % 4);
            let dr = (r1 as i64 - r2 as i64).rem_euclid(3);
            let dc = (c1 as i64 - c2 as i64).rem_euclid(4);
            assert!((dr == 0 && (dc == 1 || dc == 3)) || (dc == 0 && (dr == 1 || dr == 2)));
            if seen_wrap {
                assert!(b.wrap, "wrap bonds must come last");
            }
            seen_wrap |= b.wrap;
        }
        let mut pairs: Vec<_> = l.bonds.iter().map(|b| (b.lo, b.hi)).collect();
        pairs.sort();
        pairs.dedup();
        assert_eq!(pairs.len(), l.n_bonds());
    }

    #[test]
    fn energy_examples() {
        let l = build_lattice(1, 2, Boundary::Free).unwrap();
        let p = ModelParams::uniform(&l, Family::Ising, 1.0, 0.0);
        assert_eq!(energy(&l, &p, &[0, 0]).unwrap(), -1.0);
        assert_eq!(energy(&l, &p, &[0, 1]).unwrap(), 1.0);
        assert_eq!(log_weight(&l, &p, &[0, 0]).unwrap(), 1.0);

        // Potts(3), J = 2, H = (1, 0): both bond and site 0 in state 0.
        let p3 = ModelParams::new(Family::Potts { q: 3 }, vec![2.0], vec![1.0, 0.0]);
        assert_eq!(energy(&l, &p3, &[0, 0]).unwrap(), -3.0);

        let p4 = ModelParams::uniform(&l, Family::Potts { q: 4 }, 0.75, 0.0);
        assert_eq!(log_weight(&l, &p4, &[1, 1]).unwrap(), 0.75);

        let one = build_lattice(1, 1, Boundary::Free).unwrap();
        let ph = ModelParams::new(Family::Ising, vec![], vec![-0.5]);
        assert_eq!(log_weight(&one, &ph, &[0]).unwrap(), 0.5);
    }

    #[test]
    fn energy_rejects_bad_configs() {
        let l = build_lattice(1, 2, Boundary::Free).unwrap();
        let p = ModelParams::uniform(&l, Family::Ising, 1.0, 0.0);
        assert!(energy(&l, &p, &[0]).is_err());
        assert!(energy(&l, &p, &[0, 2]).is_err());
    }

    #[test]
    fn validation() {
        let l = build_lattice(2, 2, Boundary::Free).unwrap();
        assert!(ModelParams::uniform(&l, Family::Ising, -0.1, 0.0).validate(&l).is_err());
        assert!(ModelParams::uniform(&l, Family::Ising, 0.5, -0.3).validate(&l).is_ok());
        assert!(ModelParams::uniform(&l, Family::Potts { q: 3 }, 0.5, -0.3).validate(&l).is_err());
        assert!(ModelParams::uniform(&l, Family::Potts { q: 1 }, 0.5, 0.3).validate(&l).is_err());
        let mut p = ModelParams::uniform(&l, Family::Ising, 0.5, 0.0);
        p.couplings.pop();
        assert!(p.validate(&l).is_err());
    }

    #[test]
    fn draws() {
        assert_eq!(draw_params(&ParamDistribution::Constant(0.25), 40, 1).unwrap(), vec![0.25; 40]);
        let v = draw_params(&ParamDistribution::UniformRange(1.15, 1.25), 900, 7).unwrap();
        assert!(v.iter().all(|x| (1.15..=1.25).contains(x)));
        assert_eq!(v, draw_params(&ParamDistribution::UniformRange(1.15, 1.25), 900, 7).unwrap());
        assert_eq!(draw_params(&ParamDistribution::Explicit(vec![0.1, 0.2]), 2, 0).unwrap(), vec![0.1, 0.2]);
        assert!(draw_params(&ParamDistribution::Explicit(vec![0.1]), 2, 0).is_err());
        assert!(draw_params(&ParamDistribution::UniformRange(2.0, 1.0), 2, 0).is_err());
        let a = draw_params_on_stream(&ParamDistribution::UniformRange(0.0, 1.0), 10, 3, 1).unwrap();
        let b = draw_params_on_stream(&ParamDistribution::UniformRange(0.0, 1.0), 10, 3, 2).unwrap();
        assert_ne!(a, b);
    }
}
