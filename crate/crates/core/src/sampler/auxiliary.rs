use serde::{Deserialize, Serialize};

use crate::dual::DualGraph;
use crate::error::{Error, Result};
use crate::gf::PartitionScheme;
use crate::rng::SimRng;
use crate::sampler::draw::{draw_y_alg1, draw_z, SymbolLaw};
use crate::stats::log_add_exp;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuxKind {
    /// Ising; every field dual sampled, odd-sum draws rejected.
    Q1,
    /// Ising; one field dual determined, no rejections.
    Q2,
    /// Potts counterpart of `Q2`.
    PottsQ,
}

/// Normalizer used with [`AuxKind::Q1`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Q1Normalizer {
    /// Sum of the product law over field-dual vectors with zero sum, the
    /// law actually sampled after rejection.
    #[default]
    Restricted,
    /// Sum over all sampled assignments, ignoring the rejection step.
    Unrestricted,
}

/// Product law over the sampled block, proportional to its factor tables.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxiliaryDistribution {
    pub kind: AuxKind,
    pub normalizer: Q1Normalizer,
    pub q: u8,
    pub bond_vars: Vec<usize>,
    pub bond_laws: Vec<SymbolLaw>,
    pub field_vars: Vec<usize>,
    pub field_laws: Vec<SymbolLaw>,
    /// Whether field duals are redrawn until their sum is zero.
    pub rejects: bool,
    pub log_zq: f64,
}

impl AuxiliaryDistribution {
    pub fn new(dual: &DualGraph, scheme: &PartitionScheme, kind: AuxKind) -> Result<Self> {
        Self::with_normalizer(dual, scheme, kind, Q1Normalizer::Restricted)
    }

    pub fn with_normalizer(
        dual: &DualGraph,
        scheme: &PartitionScheme,
        kind: AuxKind,
        normalizer: Q1Normalizer,
    ) -> Result<Self> {
        match (kind, dual.family.is_ising()) {
            (AuxKind::Q1 | AuxKind::Q2, false) => {
                return Err(Error::Unsupported(format!("{kind:?} is defined for the Ising model")))
            }
            (AuxKind::PottsQ, true) => return Err(Error::Unsupported("PottsQ is defined for the Potts model".into())),
            _ => {}
        }
        if let Some(v) = dual.negative_entry() {
            return Err(Error::Unsupported(format!(
                "dual variable {v} has a negative factor entry (fields of mixed sign cannot be sampled)"
            )));
        }
        let rejects = !scheme.report.residuals.is_empty();
        match kind {
            AuxKind::Q1 if rejects && !scheme.residual_is_field_sum(dual) => {
                return Err(Error::Partition("the sampled block has residual conditions other than the field-dual sum".into()));
            }
            AuxKind::Q2 | AuxKind::PottsQ if rejects => {
                return Err(Error::Partition(
                    "this sampler needs a partition without residual conditions (exclude one field dual)".into(),
                ));
            }
            _ => {}
        }

        let mut out = Self {
            kind,
            normalizer,
            q: dual.q,
            bond_vars: Vec::new(),
            bond_laws: Vec::new(),
            field_vars: Vec::new(),
            field_laws: Vec::new(),
            rejects,
            log_zq: 0.0,
        };
        let mut log_bonds = 0.0;
        let mut log_sums = 0.0;
        let mut log_diffs = 0.0;
        for &v in &scheme.a_vars {
            let t = &dual.tables[v];
            let law = SymbolLaw::from_table(t)?;
            let total: f64 = t.iter().sum();
            if dual.is_field_var(v) {
                out.field_vars.push(v);
                out.field_laws.push(law);
                log_sums += total.ln();
                log_diffs += (t[0] - t[1]).ln();
            } else {
                out.bond_vars.push(v);
                out.bond_laws.push(law);
                log_bonds += total.ln();
            }
        }
        let lq = (dual.q as f64).ln();
        out.log_zq = log_bonds
            + if rejects && normalizer == Q1Normalizer::Restricted {
                log_add_exp(log_sums, ((dual.q - 1) as f64).ln() + log_diffs) - lq
            } else {
                log_sums
            };
        Ok(out)
    }

    /// Writes a draw of the sampled block into the flat assignment `x`;
    /// returns the number of rejected field-dual vectors.
    #[inline]
    pub fn draw(&self, rng: &mut SimRng, x: &mut [u8], scratch: &mut Vec<u8>) -> Result<u64> {
        scratch.resize(self.bond_vars.len().max(self.field_vars.len()), 0);
        draw_z(&self.bond_laws, rng, &mut scratch[..self.bond_vars.len()]);
        for (&v, &s) in self.bond_vars.iter().zip(scratch.iter()) {
            x[v] = s;
        }
        let nf = self.field_vars.len();
        let rejected = if self.rejects {
            draw_y_alg1(&self.field_laws, self.q, rng, &mut scratch[..nf])?
        } else {
            draw_z(&self.field_laws, rng, &mut scratch[..nf]);
            0
        };
        for (&v, &s) in self.field_vars.iter().zip(scratch.iter()) {
            x[v] = s;
        }
        Ok(rejected)
    }

    /// `log Ψ(x_A)`, the unnormalized auxiliary weight of the sampled block.
    pub fn log_psi(&self, dual: &DualGraph, x: &[u8]) -> f64 {
        self.bond_vars.iter().chain(&self.field_vars).map(|&v| dual.log_tables[v][x[v] as usize]).sum()
    }
}
