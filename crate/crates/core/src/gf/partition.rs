use serde::{Deserialize, Serialize};

use crate::dual::DualGraph;
use crate::error::{Error, Result};
use crate::gf::elim::reduce;
use crate::gf::solve::{Completion, FreeParametrization, LinearMap, Propagator};
use crate::lattice::Axis;

/// How the dual variables are split into a sampled block A and a
/// determined block B.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// All field duals sampled; bonds in comb pattern (horizontal bonds off
    /// the last row sampled).
    Alg1Style,
    /// As [`Preset::Alg1Style`], with the field dual of the strongest field
    /// moved to the determined block.
    Alg2Style,
    /// Bonds anchored at odd `row + col` start in the sampled block.
    Checker { exclude_field: bool },
    /// Explicit list of sampled variables.
    Custom(Vec<usize>),
}

impl Preset {
    pub fn excludes_field(&self) -> bool {
        matches!(self, Preset::Alg2Style | Preset::Checker { exclude_field: true })
    }
}

/// Condition `Σ coef * x[var] ≡ 0 (mod q)` on the sampled block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Residual {
    pub terms: Vec<(usize, u8)>,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub ok: bool,
    pub q: u8,
    pub n_vars: usize,
    pub a_count: usize,
    pub b_count: usize,
    /// Bond duals in each block.
    pub bonds_a: usize,
    pub bonds_b: usize,
    /// Rank of the constraint columns of the determined block.
    pub rank: usize,
    /// Determined variables left undetermined (`b_count - rank`).
    pub deficiency: usize,
    pub residuals: Vec<Residual>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionScheme {
    pub preset: Preset,
    pub a_vars: Vec<usize>,
    pub b_vars: Vec<usize>,
    /// Site whose field dual was moved to the determined block.
    pub excluded_field_var: Option<usize>,
    pub in_a: Vec<bool>,
    pub report: PartitionReport,
    pub map: LinearMap,
    pub completion: Completion,
}

fn describe(dual: &DualGraph, terms: &[(usize, u8)]) -> String {
    let all_fields = terms.len() == dual.n_field_vars
        && terms.iter().all(|&(v, c)| dual.is_field_var(v) && c == terms[0].1)
        && dual.n_field_vars > 0;
    if all_fields {
        if dual.q == 2 {
            return "sum of field duals is even".into();
        }
        return format!("sum of field duals = 0 mod {}", dual.q);
    }
    let parts: Vec<String> = terms.iter().map(|&(v, c)| if c == 1 { format!("x{v}") } else { format!("{c}*x{v}") }).collect();
    format!("{} = 0 mod {}", parts.join(" + "), dual.q)
}

/// Checks whether the determined block is fixed uniquely by the sampled
/// block, by reducing the site checks over `Z_q` with determined columns
/// pivoted first (lowest index first).
pub fn validate_partition(dual: &DualGraph, a_vars: &[usize]) -> PartitionReport {
    validate_inner(dual, a_vars).0
}

fn validate_inner(dual: &DualGraph, a_vars: &[usize]) -> (PartitionReport, Option<LinearMap>) {
    let n = dual.n_vars();
    let mut in_a = vec![false; n];
    let mut bad = None;
    for &a in a_vars {
        if a >= n || in_a[a] {
            bad = Some(format!("sampled variable {a} is out of range or repeated"));
            break;
        }
        in_a[a] = true;
    }
    let b_vars: Vec<usize> = (0..n).filter(|&v| !in_a[v]).collect();
    let mut a_sorted: Vec<usize> = (0..n).filter(|&v| in_a[v]).collect();
    a_sorted.dedup();
    let bonds_a = a_sorted.iter().filter(|&&v| v < dual.n_bond_vars).count();
    let mut report = PartitionReport {
        ok: false,
        q: dual.q,
        n_vars: n,
        a_count: a_sorted.len(),
        b_count: b_vars.len(),
        bonds_a,
        bonds_b: dual.n_bond_vars - bonds_a,
        rank: 0,
        deficiency: b_vars.len(),
        residuals: Vec::new(),
        message: String::new(),
    };
    if let Some(m) = bad {
        report.message = m;
        return (report, None);
    }
    let rows: Vec<Vec<u8>> = dual
        .site_rows
        .iter()
        .map(|row| {
            let mut r = vec![0u8; n];
            for &(v, c) in row {
                r[v] = c;
            }
            r
        })
        .collect();
    let red = match reduce(dual.q, n, rows, &b_vars) {
        Ok(r) => r,
        Err(e) => {
            report.message = e.to_string();
            return (report, None);
        }
    };
    report.rank = red.rank();
    report.deficiency = b_vars.len() - red.rank();
    let map = LinearMap::from_reduced(&red, &a_sorted, &b_vars).ok();
    let residual_rows: Vec<Vec<(usize, u8)>> = red
        .free_rows()
        .into_iter()
        .map(|r| (0..n).filter(|&v| red.rows[r][v] != 0 ).map(|v| (v, red.rows[r][v])).collect::<Vec<_>>())
        .filter(|t: &Vec<(usize, u8)>| !t.is_empty())
        .collect();
    report.residuals = residual_rows
        .iter()
        .map(|t| {
            let z = crate::gf::zq::Zq::new(dual.q);
            let terms: Vec<(usize, u8)> = match z.inv(t[0].1) {
                Some(i) => t.iter().map(|&(v, c)| (v, z.mul(c, i))).collect(),
                None => t.clone(),
            };
            Residual { description: describe(dual, &terms), terms }
        })
        .collect();
    report.ok = report.deficiency == 0;
    report.message = if report.ok {
        if report.residuals.is_empty() {
            "determined; every sampled assignment is admissible".into()
        } else {
            format!("determined; {} residual condition(s) on the sampled block", report.residuals.len())
        }
    } else {
        format!("{} determined variable(s) are not fixed by the sampled block", report.deficiency)
    };
    (report, map)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut a: usize) -> usize {
        while self.0[a] != a {
            self.0[a] = self.0[self.0[a]];
            a = self.0[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        self.0[a.max(b)] = a.min(b);
        true
    }
}

/// Turns a candidate set of determined bonds into a spanning tree of the
/// lattice: candidates are taken strongest coupling first (ties by index)
/// and dropped when they close a cycle, then remaining bonds are added the
/// same way until the tree spans.
pub fn spanning_bonds(dual: &DualGraph, candidate: &[bool]) -> Vec<bool> {
    let nb = dual.n_bond_vars;
    let mut order: Vec<usize> = (0..nb).collect();
    order.sort_by(|&a, &b| dual.couplings[b].total_cmp(&dual.couplings[a]).then(a.cmp(&b)));
    let mut uf = UnionFind((0..dual.n_sites).collect());
    let mut in_b = vec![false; nb];
    for pass in [true, false] {
        for &b in &order {
            if candidate[b] == pass {
                let (lo, hi) = dual.bond_ends[b];
                if uf.union(lo, hi) {
                    in_b[b] = true;
                }
            }
        }
    }
    in_b
}

/// Geometric starting pattern of determined bonds for a preset.
pub fn candidate_bonds(dual: &DualGraph, preset: &Preset) -> Vec<bool> {
    let lat = &dual.lattice;
    lat.bonds
        .iter()
        .map(|b| match preset {
            Preset::Checker { .. } => (b.row + b.col) % 2 == 0,
            _ => !(b.axis == Axis::Horizontal && !b.wrap && b.row + 1 < lat.rows),
        })
        .collect()
}

/// Site with the largest `|H|`, ties going to the highest index.
pub fn strongest_field_site(dual: &DualGraph) -> usize {
    let mut best = 0;
    for m in 0..dual.n_sites {
        if dual.fields[m].abs() >= dual.fields[best].abs() {
            best = m;
        }
    }
    best
}

impl PartitionScheme {
    /// Builds a scheme from a per-bond choice of determined bonds. Field
    /// duals are all sampled, except the one at the strongest field when
    /// `preset` excludes one.
    pub fn from_bond_split(dual: &DualGraph, preset: Preset, bonds_in_b: &[bool]) -> Result<Self> {
        let mut a: Vec<usize> = (0..dual.n_bond_vars).filter(|&b| !bonds_in_b[b]).collect();
        let mut excluded = None;
        if dual.has_field_vars() {
            let skip = preset.excludes_field().then(|| strongest_field_site(dual));
            excluded = skip;
            a.extend((0..dual.n_sites).filter(|&m| Some(m) != skip).map(|m| dual.n_bond_vars + m));
        }
        Self::with_sampled(dual, preset, a, excluded)
    }

    /// Scheme with an explicit sampled block.
    pub fn custom(dual: &DualGraph, a_vars: Vec<usize>) -> Result<Self> {
        Self::with_sampled(dual, Preset::Custom(a_vars.clone()), a_vars, None)
    }

    fn with_sampled(dual: &DualGraph, preset: Preset, mut a_vars: Vec<usize>, excluded: Option<usize>) -> Result<Self> {
        a_vars.sort_unstable();
        let (report, map) = validate_inner(dual, &a_vars);
        if !report.ok {
            return Err(Error::Partition(report.message));
        }
        let map = map.expect("determined partition has a map");
        let n = dual.n_vars();
        let mut in_a = vec![false; n];
        for &v in &a_vars {
            in_a[v] = true;
        }
        let b_vars: Vec<usize> = (0..n).filter(|&v| !in_a[v]).collect();
        let unknown: Vec<bool> = in_a.iter().map(|&a| !a).collect();
        let completion = match Propagator::build(dual, &unknown) {
            Some(p) => Completion::Peel(p),
            None => Completion::Dense(map.clone()),
        };
        Ok(Self { preset, a_vars, b_vars, excluded_field_var: excluded, in_a, report, map, completion })
    }

    pub fn bonds_in_b(&self, dual: &DualGraph) -> Vec<bool> {
        (0..dual.n_bond_vars).map(|b| !self.in_a[b]).collect()
    }

    /// Rebuilds the same split on another graph of the same lattice (new
    /// couplings or tables). A preset that excludes a field dual picks it
    /// again from the new fields.
    pub fn rebind(&self, dual: &DualGraph) -> Result<Self> {
        match &self.preset {
            Preset::Custom(a) => Self::custom(dual, a.clone()),
            p => {
                let b: Vec<bool> = (0..dual.n_bond_vars).map(|v| !self.in_a.get(v).copied().unwrap_or(true)).collect();
                Self::from_bond_split(dual, p.clone(), &b)
            }
        }
    }

    /// Residual conditions as sparse rows.
    pub fn residual_terms(&self) -> Vec<Vec<(usize, u8)>> {
        self.report.residuals.iter().map(|r| r.terms.clone()).collect()
    }

    /// Whether the only residual condition is the zero sum of all field
    /// duals.
    pub fn residual_is_field_sum(&self, dual: &DualGraph) -> bool {
        self.report.residuals.len() == 1
            && self.report.residuals[0].terms.len() == dual.n_field_vars
            && self.report.residuals[0].terms.iter().all(|&(v, c)| dual.is_field_var(v) && c == 1)
    }

    /// `x_B` for `x_A`, both in the scheme's variable order.
    pub fn solve_b(&self, dual: &DualGraph, x_a: &[u8]) -> Result<Vec<u8>> {
        if x_a.len() != self.a_vars.len() {
            return Err(Error::Config(format!("{} sampled values for {} sampled variables", x_a.len(), self.a_vars.len())));
        }
        let mut x = vec![0u8; dual.n_vars()];
        for (&v, &s) in self.a_vars.iter().zip(x_a) {
            x[v] = s % dual.q;
        }
        self.complete(&mut x)?;
        Ok(self.b_vars.iter().map(|&v| x[v]).collect())
    }

    /// Fills the determined block of a flat assignment in place.
    #[inline]
    pub fn complete(&self, x: &mut [u8]) -> Result<()> {
        self.completion.complete(x)
    }

    pub fn free_parametrization(&self, dual: &DualGraph) -> Result<FreeParametrization> {
        FreeParametrization::new(dual.q, dual.n_vars(), &self.a_vars, &self.residual_terms(), &self.completion)
    }
}

/// Builds a preset on `dual`: the geometric pattern, repaired into a
/// spanning tree of determined bonds.
pub fn build_preset(dual: &DualGraph, preset: Preset) -> Result<PartitionScheme> {
    match preset {
        Preset::Custom(a) => PartitionScheme::custom(dual, a),
        p => {
            let b = spanning_bonds(dual, &candidate_bonds(dual, &p));
            PartitionScheme::from_bond_split(dual, p, &b)
        }
    }
}
