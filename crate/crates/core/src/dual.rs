//! The dual normal factor graph of a lattice model.
//!
//! Every primal bond gets one dual variable, and when the model has a field
//! every site gets one more. Variables are numbered bonds first (in lattice
//! bond order), then sites. Each site carries a parity check over `Z_q`:
//! the field dual of the site, plus every incident bond dual with sign `+1`
//! when the site is the bond's lower end and `-1` when it is the upper end,
//! must sum to zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Family, LatticeSpec, ModelParams};
use crate::stats::log_sum_exp;

/// Largest `q^E` visited by [`enumerate_zd`].
pub const DUAL_ENUMERATION_BUDGET: u64 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableForm {
    /// Fourier-transformed factors with their constant prefactors.
    Raw,
    /// Ising factors divided by their value at zero; the quotient lives in
    /// `log_scale`.
    Tanh,
}

/// Role of a dual variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "index")]
pub enum VarRole {
    Bond(usize),
    Field(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualGraph {
    pub family: Family,
    pub q: u8,
    pub n_sites: usize,
    pub n_bond_vars: usize,
    pub n_field_vars: usize,
    /// `(lower site, upper site)` of each bond variable.
    pub bond_ends: Vec<(usize, usize)>,
    /// Per site: the `(variable, coefficient)` pairs of its parity check.
    pub site_rows: Vec<Vec<(usize, u8)>>,
    /// Factor value per variable and symbol.
    pub tables: Vec<Vec<f64>>,
    /// `ln |table|`.
    pub log_tables: Vec<Vec<f64>>,
    pub log_scale: f64,
    pub form: TableForm,
    pub lattice: LatticeSpec,
    pub couplings: Vec<f64>,
    /// Fields after canonicalization (see [`dualize`]).
    pub fields: Vec<f64>,
}

/// A dual assignment split into bond part `z` and field part `y` (empty
/// when the graph has no field variables).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DualConfig {
    pub z: Vec<u8>,
    pub y: Vec<u8>,
}

impl DualConfig {
    pub fn zeros(dual: &DualGraph) -> Self {
        Self { z: vec![0; dual.n_bond_vars], y: vec![0; dual.n_field_vars] }
    }

    pub fn from_flat(dual: &DualGraph, flat: &[u8]) -> Self {
        let (z, y) = flat.split_at(dual.n_bond_vars);
        Self { z: z.to_vec(), y: y.to_vec() }
    }

    pub fn to_flat(&self) -> Vec<u8> {
        let mut v = self.z.clone();
        v.extend_from_slice(&self.y);
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DualWeight {
    /// Log-weight of a configuration satisfying every parity check.
    Valid(f64),
    /// First site whose parity check fails.
    Invalid { site: usize },
}

impl DualWeight {
    pub fn valid(self) -> Result<f64> {
        match self {
            DualWeight::Valid(w) => Ok(w),
            DualWeight::Invalid { site } => Err(Error::InvalidDualConfig { site }),
        }
    }

    pub fn is_valid(&self) -> bool {
        matches!(self, DualWeight::Valid(_))
    }
}

fn ising_tables(j: f64) -> Vec<f64> {
    vec![4.0 * j.cosh(), 4.0 * j.sinh()]
}

fn ising_field_table(h: f64) -> Vec<f64> {
    vec![2.0 * h.cosh(), -2.0 * h.sinh()]
}

fn potts_bond_table(q: u8, j: f64) -> Vec<f64> {
    let qf = q as f64;
    let mut t = vec![qf * j.exp_m1(); q as usize];
    t[0] = qf * (j.exp() + qf - 1.0);
    t
}

fn potts_field_table(q: u8, h: f64) -> Vec<f64> {
    let mut t = vec![h.exp_m1(); q as usize];
    t[0] = h.exp() + q as f64 - 1.0;
    t
}

fn logs(t: &[f64]) -> Vec<f64> {
    t.iter().map(|v| v.abs().ln()).collect()
}

/// Builds the dual graph with raw factor tables.
///
/// When no Ising field is negative, all fields are negated first: `Z` is
/// invariant under a global field flip, and nonpositive fields make every
/// table entry nonnegative. Fields of mixed sign are kept as given and
/// produce negative entries, which the samplers refuse.
pub fn dualize(spec: &LatticeSpec, params: &ModelParams) -> Result<DualGraph> {
    params.validate(spec)?;
    let q = params.q();
    let n = spec.n_sites();
    let nb = spec.n_bonds();
    let with_field = params.has_field();
    let fields: Vec<f64> = match params.family {
        Family::Ising if params.fields.iter().all(|&h| h >= 0.0) => params.fields.iter().map(|h| -h).collect(),
        Family::Ising => params.fields.clone(),
        Family::Potts { .. } => params.fields.clone(),
    };

    let mut tables = Vec::with_capacity(nb + n);
    for &j in &params.couplings {
        tables.push(match params.family {
            Family::Ising => ising_tables(j),
            Family::Potts { q } => potts_bond_table(q, j),
        });
    }
    if with_field {
        for &h in &fields {
            tables.push(match params.family {
                Family::Ising => ising_field_table(h),
                Family::Potts { q } => potts_field_table(q, h),
            });
        }
    }

    let minus_one = q - 1;
    let mut site_rows = vec![Vec::new(); n];
    let mut bond_ends = Vec::with_capacity(nb);
    for (b, bond) in spec.bonds.iter().enumerate() {
        site_rows[bond.lo].push((b, 1u8));
        site_rows[bond.hi].push((b, minus_one));
        bond_ends.push((bond.lo, bond.hi));
    }
    if with_field {
        for (m, row) in site_rows.iter_mut().enumerate() {
            row.push((nb + m, 1));
        }
    }

    let log_tables = tables.iter().map(|t| logs(t)).collect();
    Ok(DualGraph {
        family: params.family,
        q,
        n_sites: n,
        n_bond_vars: nb,
        n_field_vars: if with_field { n } else { 0 },
        bond_ends,
        site_rows,
        tables,
        log_tables,
        log_scale: 0.0,
        form: TableForm::Raw,
        lattice: spec.clone(),
        couplings: params.couplings.clone(),
        fields,
    })
}

/// Ising tables `(1, tanh J)` and `(1, -tanh H)`; the removed factors
/// `4 cosh J` and `2 cosh H` are added to `log_scale`, so every
/// configuration keeps its total weight.
pub fn tanh_tables(dual: &DualGraph) -> Result<DualGraph> {
    if !dual.family.is_ising() {
        return Err(Error::Unsupported("the tanh reparametrization exists for the Ising model only".into()));
    }
    if dual.form == TableForm::Tanh {
        return Ok(dual.clone());
    }
    let mut out = dual.clone();
    let mut scale = dual.log_scale;
    for (v, t) in out.tables.iter_mut().enumerate() {
        let (c, tanh) = match dual.role(v) {
            VarRole::Bond(b) => {
                let j = dual.couplings[b];
                ((4.0 * j.cosh()).ln(), j.tanh())
            }
            VarRole::Field(m) => {
                let h = dual.fields[m];
                ((2.0 * h.cosh()).ln(), -h.tanh())
            }
        };
        scale += c;
        *t = vec![1.0, tanh];
    }
    out.log_tables = out.tables.iter().map(|t| logs(t)).collect();
    out.log_scale = scale;
    out.form = TableForm::Tanh;
    Ok(out)
}

impl DualGraph {
    /// Number of dual variables.
    pub fn n_vars(&self) -> usize {
        self.n_bond_vars + self.n_field_vars
    }

    /// Dual edge count, the same as [`DualGraph::n_vars`].
    pub fn edge_count(&self) -> usize {
        self.n_vars()
    }

    pub fn has_field_vars(&self) -> bool {
        self.n_field_vars > 0
    }

    pub fn role(&self, var: usize) -> VarRole {
        if var < self.n_bond_vars {
            VarRole::Bond(var)
        } else {
            VarRole::Field(var - self.n_bond_vars)
        }
    }

    /// Variable index of the field dual at `site`, if field duals exist.
    pub fn field_var(&self, site: usize) -> Option<usize> {
        (self.has_field_vars() && site < self.n_sites).then(|| self.n_bond_vars + site)
    }

    pub fn is_field_var(&self, var: usize) -> bool {
        var >= self.n_bond_vars && var < self.n_vars()
    }

    /// First violated parity check of a flat assignment, if any.
    pub fn violated_site(&self, x: &[u8]) -> Option<usize> {
        let q = self.q as u32;
        self.site_rows
            .iter()
            .position(|row| row.iter().map(|&(v, c)| c as u32 * x[v] as u32).sum::<u32>() % q != 0)
    }

    /// `Σ log |table|` over all variables, ignoring validity and scale.
    pub fn log_product(&self, x: &[u8]) -> f64 {
        x.iter().zip(&self.log_tables).map(|(&s, t)| t[s as usize]).sum()
    }

    /// Whether the product of table entries at `x` is negative.
    pub fn negative_product(&self, x: &[u8]) -> bool {
        x.iter().zip(&self.tables).filter(|(&s, t)| t[s as usize] < 0.0).count() % 2 == 1
    }

    /// Weight of a flat assignment (bonds then fields).
    pub fn eval_flat(&self, x: &[u8]) -> Result<DualWeight> {
        if x.len() != self.n_vars() {
            return Err(Error::Config(format!("dual assignment has {} values for {} variables", x.len(), self.n_vars())));
        }
        if let Some((v, s)) = x.iter().enumerate().find(|(_, s)| **s >= self.q) {
            return Err(Error::Config(format!("symbol {s} of dual variable {v} is outside Z_{}", self.q)));
        }
        if let Some(site) = self.violated_site(x) {
            return Ok(DualWeight::Invalid { site });
        }
        if self.negative_product(x) {
            return Err(Error::Numeric("dual weight is negative (fields of mixed sign)".into()));
        }
        Ok(DualWeight::Valid(self.log_product(x) + self.log_scale))
    }

    /// Whether some symbol of some variable has zero weight.
    pub fn has_zero_entry(&self) -> bool {
        self.tables.iter().flatten().any(|&v| v == 0.0)
    }

    /// First variable with a negative table entry (mixed-sign Ising fields).
    pub fn negative_entry(&self) -> Option<usize> {
        self.tables.iter().position(|t| t.iter().any(|&v| v < 0.0))
    }
}

/// `log Π γ(z) Π λ(y) + log_scale` for a valid configuration, or the first
/// violated site.
pub fn eval_dual_weight(dual: &DualGraph, config: &DualConfig) -> Result<DualWeight> {
    if config.z.len() != dual.n_bond_vars || config.y.len() != dual.n_field_vars {
        return Err(Error::Config(format!(
            "dual configuration has {}+{} values, graph has {}+{} variables",
            config.z.len(),
            config.y.len(),
            dual.n_bond_vars,
            dual.n_field_vars
        )));
    }
    dual.eval_flat(&config.to_flat())
}

/// `log Z_d` by visiting all `q^E` assignments. Terms of either sign are
/// summed separately, so fields of mixed sign are handled.
pub fn enumerate_zd(dual: &DualGraph) -> Result<f64> {
    enumerate_zd_with_budget(dual, DUAL_ENUMERATION_BUDGET)
}

pub fn enumerate_zd_with_budget(dual: &DualGraph, budget: u64) -> Result<f64> {
    let e = dual.n_vars();
    let states = (dual.q as f64).powi(e as i32);
    if states > budget as f64 {
        return Err(Error::BudgetExceeded { states, budget });
    }
    let q = dual.q;
    let mut x = vec![0u8; e];
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    loop {
        if dual.violated_site(&x).is_none() {
            if dual.negative_product(&x) {
                neg.push(dual.log_product(&x));
            } else {
                pos.push(dual.log_product(&x));
            }
        }
        let mut i = 0;
        loop {
            if i == e {
                let (p, n) = (log_sum_exp(&pos), log_sum_exp(&neg));
                if n >= p {
                    return Err(Error::Numeric("dual partition function is not positive".into()));
                }
                return Ok(p + (-(n - p).exp()).ln_1p() + dual.log_scale);
            }
            x[i] += 1;
            if x[i] < q {
                break;
            }
            x[i] = 0;
            i += 1;
        }
    }
}

/// `log(Z_d / Z)`.
///
/// Established by enumeration on small lattices: `2 |bonds| log q` when
/// field duals are present and `(2 |bonds| - N) log q` otherwise.
pub fn duality_constant(dual: &DualGraph) -> f64 {
    let nb = dual.n_bond_vars as f64;
    let lq = (dual.q as f64).ln();
    if dual.has_field_vars() {
        2.0 * nb * lq
    } else {
        (2.0 * nb - dual.n_sites as f64) * lq
    }
}
