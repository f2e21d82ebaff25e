//! Completing a dual assignment from its sampled block.

use crate::dual::DualGraph;
use crate::error::{Error, Result};
use crate::gf::elim::{reduce, Reduced};
use crate::gf::zq::Zq;

/// Parity checks solved one unknown at a time. Each step assigns
/// `x[var] = Σ coef * x[other]` over terms already known; the rows left
/// over are checks that must evaluate to zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Propagator {
    q: u8,
    step_var: Vec<u32>,
    step_end: Vec<u32>,
    terms: Vec<(u32, u8)>,
    check_end: Vec<u32>,
    check_terms: Vec<(u32, u8)>,
}

impl Propagator {
    /// Peels the site checks of `dual` for the unknowns flagged in
    /// `unknown`. Returns `None` when peeling stalls before every unknown
    /// is reached.
    pub fn build(dual: &DualGraph, unknown: &[bool]) -> Option<Self> {
        let z = Zq::new(dual.q);
        let rows = &dual.site_rows;
        let mut var_rows: Vec<Vec<usize>> = vec![Vec::new(); dual.n_vars()];
        for (r, row) in rows.iter().enumerate() {
            for &(v, _) in row {
                var_rows[v].push(r);
            }
        }
        let mut open: Vec<usize> = rows.iter().map(|row| row.iter().filter(|(v, _)| unknown[*v]).count()).collect();
        let mut solved = vec![false; dual.n_vars()];
        let mut used = vec![false; rows.len()];
        let mut queue: Vec<usize> = (0..rows.len()).filter(|&r| open[r] == 1).rev().collect();

        let mut out = Propagator {
            q: dual.q,
            step_var: Vec::new(),
            step_end: Vec::new(),
            terms: Vec::new(),
            check_end: Vec::new(),
            check_terms: Vec::new(),
        };
        while let Some(r) = queue.pop() {
            if used[r] || open[r] != 1 {
                continue;
            }
            let &(v, c) = rows[r].iter().find(|(v, _)| unknown[*v] && !solved[*v]).expect("one open unknown");
            let scale = z.neg(z.inv(c)?);
            used[r] = true;
            solved[v] = true;
            out.step_var.push(v as u32);
            for &(o, co) in &rows[r] {
                if o != v {
                    out.terms.push((o as u32, z.mul(scale, co)));
                }
            }
            out.step_end.push(out.terms.len() as u32);
            for &r2 in &var_rows[v] {
                open[r2] -= 1;
                if open[r2] == 1 && !used[r2] {
                    queue.push(r2);
                }
            }
        }
        if (0..dual.n_vars()).any(|v| unknown[v] && !solved[v]) {
            return None;
        }
        for (r, row) in rows.iter().enumerate() {
            if !used[r] {
                out.check_terms.extend(row.iter().map(|&(v, c)| (v as u32, c)));
                out.check_end.push(out.check_terms.len() as u32);
            }
        }
        Some(out)
    }

    pub fn n_checks(&self) -> usize {
        self.check_end.len()
    }

    /// Fills the unknowns of `x` in place. On a failed check returns its
    /// index; the unknowns are filled regardless.
    #[inline]
    pub fn complete(&self, x: &mut [u8]) -> std::result::Result<(), usize> {
        let q = self.q as u32;
        let mut start = 0usize;
        for (i, &end) in self.step_end.iter().enumerate() {
            let mut acc = 0u32;
            for &(o, c) in &self.terms[start..end as usize] {
                acc += c as u32 * x[o as usize] as u32;
            }
            x[self.step_var[i] as usize] = (acc % q) as u8;
            start = end as usize;
        }
        let mut start = 0usize;
        for (i, &end) in self.check_end.iter().enumerate() {
            let mut acc = 0u32;
            for &(o, c) in &self.check_terms[start..end as usize] {
                acc += c as u32 * x[o as usize] as u32;
            }
            if !acc.is_multiple_of(q) {
                return Err(i);
            }
            start = end as usize;
        }
        Ok(())
    }
}

/// Dense map from the sampled block to the determined block, read off the
/// reduced constraint system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearMap {
    pub q: u8,
    pub a_vars: Vec<usize>,
    pub b_vars: Vec<usize>,
    /// `matrix[i][j]`: coefficient of `a_vars[j]` in `b_vars[i]`.
    pub matrix: Vec<Vec<u8>>,
    /// Conditions `Σ c x_a ≡ 0` the sampled block must satisfy.
    pub residuals: Vec<Vec<(usize, u8)>>,
}

impl LinearMap {
    /// Requires every B column to carry a pivot of `reduced`, whose columns
    /// are dual variables.
    pub fn from_reduced(reduced: &Reduced, a_vars: &[usize], b_vars: &[usize]) -> Result<Self> {
        let z = Zq::new(reduced.q);
        let mut pivot_row = vec![usize::MAX; reduced.n_cols];
        for &(r, c) in &reduced.pivots {
            pivot_row[c] = r;
        }
        let mut matrix = Vec::with_capacity(b_vars.len());
        for &b in b_vars {
            let r = pivot_row[b];
            if r == usize::MAX {
                return Err(Error::Partition(format!("variable {b} is not determined by the sampled block")));
            }
            matrix.push(a_vars.iter().map(|&a| z.neg(reduced.rows[r][a])).collect());
        }
        let residuals = reduced
            .free_rows()
            .into_iter()
            .map(|r| a_vars.iter().filter(|&&a| reduced.rows[r][a] != 0).map(|&a| (a, reduced.rows[r][a])).collect::<Vec<_>>())
            .filter(|t: &Vec<(usize, u8)>| !t.is_empty())
            .collect();
        Ok(Self { q: reduced.q, a_vars: a_vars.to_vec(), b_vars: b_vars.to_vec(), matrix, residuals })
    }

    /// `x_B = M x_A` with both blocks in the order of `a_vars`/`b_vars`.
    pub fn apply(&self, x_a: &[u8]) -> Vec<u8> {
        let q = self.q as u32;
        self.matrix
            .iter()
            .map(|row| (row.iter().zip(x_a).map(|(&m, &x)| m as u32 * x as u32).sum::<u32>() % q) as u8)
            .collect()
    }

    /// Index of the first residual condition violated by `x` (a full flat
    /// assignment whose sampled block is set).
    pub fn violated_residual(&self, x: &[u8]) -> Option<usize> {
        let q = self.q as u32;
        self.residuals.iter().position(|t| t.iter().map(|&(v, c)| c as u32 * x[v] as u32).sum::<u32>() % q != 0)
    }
}

/// Fast completion path: peeling when it reaches every unknown, the dense
/// map otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Completion {
    Peel(Propagator),
    Dense(LinearMap),
}

impl Completion {
    /// Fills the determined block of the flat assignment `x` in place.
    #[inline]
    pub fn complete(&self, x: &mut [u8]) -> Result<()> {
        match self {
            Completion::Peel(p) => p.complete(x).map_err(Error::Inadmissible),
            Completion::Dense(m) => {
                if let Some(i) = m.violated_residual(x) {
                    return Err(Error::Inadmissible(i));
                }
                let xa: Vec<u8> = m.a_vars.iter().map(|&a| x[a]).collect();
                for (&b, v) in m.b_vars.iter().zip(m.apply(&xa)) {
                    x[b] = v;
                }
                Ok(())
            }
        }
    }
}

/// Coordinates on the admissible sampled assignments: `free` variables take
/// any value, `dependent` ones are fixed by the residual conditions, and
/// `columns[i]` is the full dual assignment obtained by setting `free[i]`
/// to one and all other free variables to zero. Every admissible full
/// assignment is `Σ x_free[i] * columns[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreeParametrization {
    pub q: u8,
    pub free: Vec<usize>,
    /// `(variable, [(free position, coefficient)])`.
    pub dependent: Vec<(usize, Vec<(usize, u8)>)>,
    /// Sparse `(variable, coefficient)` columns.
    pub columns: Vec<Vec<(usize, u8)>>,
}

impl FreeParametrization {
    /// `residuals` are conditions over `a_vars`; dependents are chosen
    /// highest variable index first, so field duals go before bond duals.
    pub fn new(q: u8, n_vars: usize, a_vars: &[usize], residuals: &[Vec<(usize, u8)>], completion: &Completion) -> Result<Self> {
        let rows: Vec<Vec<u8>> = residuals
            .iter()
            .map(|t| {
                let mut r = vec![0u8; n_vars];
                for &(v, c) in t {
                    r[v] = c;
                }
                r
            })
            .collect();
        let mut order = a_vars.to_vec();
        order.sort_unstable_by(|a, b| b.cmp(a));
        let red = reduce(q, n_vars, rows, &order)?;
        let z = Zq::new(q);
        let is_dep: std::collections::HashMap<usize, usize> = red.pivots.iter().map(|&(r, c)| (c, r)).collect();
        let mut free: Vec<usize> = a_vars.iter().copied().filter(|v| !is_dep.contains_key(v)).collect();
        free.sort_unstable();
        let pos: std::collections::HashMap<usize, usize> = free.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut dependent = Vec::new();
        for &(r, c) in &red.pivots {
            let terms =
                free.iter().filter(|&&f| red.rows[r][f] != 0).map(|&f| (pos[&f], z.neg(red.rows[r][f]))).collect();
            dependent.push((c, terms));
        }
        if red.free_rows().iter().any(|&r| red.rows[r].iter().any(|&v| v != 0)) {
            return Err(Error::Partition("residual conditions are inconsistent".into()));
        }
        let mut me = Self { q, free, dependent, columns: Vec::new() };
        let mut x = vec![0u8; n_vars];
        let mut xf = vec![0u8; me.free.len()];
        for i in 0..me.free.len() {
            xf.iter_mut().for_each(|v| *v = 0);
            xf[i] = 1;
            me.assemble(&xf, &mut x, completion)?;
            me.columns.push(x.iter().enumerate().filter_map(|(v, &s)| (s != 0).then_some((v, s))).collect());
        }
        Ok(me)
    }

    /// Sets the sampled block of `x` from free values and completes it.
    pub fn assemble(&self, x_free: &[u8], x: &mut [u8], completion: &Completion) -> Result<()> {
        x.iter_mut().for_each(|v| *v = 0);
        self.fill_sampled(x_free, x);
        completion.complete(x)
    }

    /// Writes free and dependent variables of the sampled block.
    #[inline]
    pub fn fill_sampled(&self, x_free: &[u8], x: &mut [u8]) {
        let q = self.q as u32;
        for (&v, &s) in self.free.iter().zip(x_free) {
            x[v] = s;
        }
        for (v, terms) in &self.dependent {
            x[*v] = (terms.iter().map(|&(i, c)| c as u32 * x_free[i] as u32).sum::<u32>() % q) as u8;
        }
    }

    /// `log_q` of the number of admissible sampled assignments.
    pub fn dimension(&self) -> usize {
        self.free.len()
    }
}
