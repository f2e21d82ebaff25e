//! Per-variable draws for the auxiliary distributions.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Rejection loops give up after this many consecutive rejections.
pub const MAX_REJECTIONS: u64 = 1_000_000;

/// Law of one dual symbol proportional to its factor table, for tables
/// whose nonzero symbols all share one value: zero with probability
/// `p_zero`, otherwise uniform on `{1, .., q-1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymbolLaw {
    pub q: u8,
    pub p_zero: f64,
}

impl SymbolLaw {
    pub fn from_table(table: &[f64]) -> Result<Self> {
        let q = table.len();
        if !(2..=255).contains(&q) {
            return Err(Error::Unsupported(format!("table of {q} symbols")));
        }
        if table.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::Unsupported(format!("factor table {table:?} has a negative or non-finite entry")));
        }
        let rest = table[1];
        if table[2..].iter().any(|&v| (v - rest).abs() > 1e-12 * rest.abs().max(1e-300)) {
            return Err(Error::Unsupported("nonzero symbols of a factor table differ".into()));
        }
        let total: f64 = table.iter().sum();
        Ok(Self { q: q as u8, p_zero: table[0] / total })
    }

    #[inline]
    pub fn draw(&self, rng: &mut SimRng) -> u8 {
        if rng.random::<f64>() < self.p_zero {
            0
        } else if self.q == 2 {
            1
        } else {
            rng.random_range(1..self.q)
        }
    }
}

/// Threshold `P(symbol = 0)` of an Ising bond dual: `(1 + e^{-2J}) / 2`.
pub fn ising_bond_threshold(j: f64) -> f64 {
    0.5 * (1.0 + (-2.0 * j).exp())
}

/// Threshold of an Ising field dual for a canonical (nonpositive) field:
/// `(1 + e^{2H}) / 2`.
pub fn ising_field_threshold(h: f64) -> f64 {
    0.5 * (1.0 + (2.0 * h).exp())
}

/// Threshold of a Potts dual with coupling or field `t`: `(1 + (q-1) e^{-t}) / q`.
pub fn potts_threshold(q: u8, t: f64) -> f64 {
    (1.0 + (q as f64 - 1.0) * (-t).exp()) / q as f64
}

/// Independent draws for every law.
pub fn draw_z(laws: &[SymbolLaw], rng: &mut SimRng, out: &mut [u8]) {
    for (o, l) in out.iter_mut().zip(laws) {
        *o = l.draw(rng);
    }
}

/// Independent draws redrawn as a whole until their sum is `0 mod q`.
/// Returns the number of rejected vectors.
pub fn draw_y_alg1(laws: &[SymbolLaw], q: u8, rng: &mut SimRng, out: &mut [u8]) -> Result<u64> {
    let mut rejected = 0;
    loop {
        draw_z(laws, rng, out);
        if out.iter().map(|&v| v as u32).sum::<u32>() % q as u32 == 0 {
            return Ok(rejected);
        }
        rejected += 1;
        if rejected >= MAX_REJECTIONS {
            return Err(Error::RejectionLimit(rejected));
        }
    }
}

/// Independent draws for all but the last entry of `out`, which closes the
/// sum to `0 mod q`. `laws` has one entry fewer than `out`.
pub fn draw_y_alg2(laws: &[SymbolLaw], q: u8, rng: &mut SimRng, out: &mut [u8]) {
    let (last, head) = out.split_last_mut().expect("at least one field dual");
    draw_z(laws, rng, head);
    let s = head.iter().map(|&v| v as u32).sum::<u32>() % q as u32;
    *last = ((q as u32 - s) % q as u32) as u8;
}
