//! Row reduction over `Z_q` with unit pivots.
//!
//! `Z_2` rows are packed into machine words; other moduli use one byte per
//! entry. Both backends produce the same reduced form.

use crate::error::{Error, Result};
use crate::gf::zq::Zq;

/// Reduced row-echelon form restricted to the pivot columns: every pivot
/// entry is 1 and every other row is zero in each pivot column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduced {
    pub q: u8,
    pub n_cols: usize,
    pub rows: Vec<Vec<u8>>,
    /// `(row, column)` of each pivot, in the order they were chosen.
    pub pivots: Vec<(usize, usize)>,
}

impl Reduced {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Rows that received no pivot.
    pub fn free_rows(&self) -> Vec<usize> {
        let mut used = vec![false; self.rows.len()];
        for &(r, _) in &self.pivots {
            used[r] = true;
        }
        (0..self.rows.len()).filter(|&r| !used[r]).collect()
    }
}

/// Reduces `rows` pivoting on `pivot_order` columns in that order. A
/// column with no unit entry left among unpivoted rows is skipped, unless
/// it still has a nonzero (non-unit) entry, which only composite moduli can
/// produce and which is reported as unsupported.
pub fn reduce(q: u8, n_cols: usize, rows: Vec<Vec<u8>>, pivot_order: &[usize]) -> Result<Reduced> {
    if q == 2 {
        Ok(reduce_bits(n_cols, rows, pivot_order))
    } else {
        reduce_bytes(q, n_cols, rows, pivot_order)
    }
}

pub fn reduce_bytes(q: u8, n_cols: usize, mut rows: Vec<Vec<u8>>, pivot_order: &[usize]) -> Result<Reduced> {
    let z = Zq::new(q);
    let mut pivoted = vec![false; rows.len()];
    let mut pivots = Vec::new();
    for &c in pivot_order {
        let pick = (0..rows.len()).find(|&r| !pivoted[r] && z.is_unit(rows[r][c]));
        let Some(p) = pick else {
            if (0..rows.len()).any(|r| !pivoted[r] && rows[r][c] != 0) {
                return Err(Error::Unsupported(format!("column {c} has only non-unit entries over Z_{q}")));
            }
            continue;
        };
        let inv = z.inv(rows[p][c]).expect("unit pivot");
        if inv != 1 {
            for v in rows[p].iter_mut() {
                *v = z.mul(*v, inv);
            }
        }
        let prow = rows[p].clone();
        let support: Vec<usize> = (0..n_cols).filter(|&k| prow[k] != 0).collect();
        for (r, row) in rows.iter_mut().enumerate() {
            let f = row[c];
            if r == p || f == 0 {
                continue;
            }
            for &k in &support {
                row[k] = z.sub(row[k], z.mul(f, prow[k]));
            }
        }
        pivoted[p] = true;
        pivots.push((p, c));
    }
    Ok(Reduced { q, n_cols, rows, pivots })
}

pub fn reduce_bits(n_cols: usize, rows: Vec<Vec<u8>>, pivot_order: &[usize]) -> Reduced {
    let words = n_cols.div_ceil(64);
    let mut bits: Vec<Vec<u64>> = rows
        .iter()
        .map(|row| {
            let mut w = vec![0u64; words];
            for (k, &v) in row.iter().enumerate() {
                if v & 1 == 1 {
                    w[k / 64] |= 1 << (k % 64);
                }
            }
            w
        })
        .collect();
    let get = |w: &[u64], c: usize| (w[c / 64] >> (c % 64)) & 1 == 1;
    let mut pivoted = vec![false; bits.len()];
    let mut pivots = Vec::new();
    for &c in pivot_order {
        let Some(p) = (0..bits.len()).find(|&r| !pivoted[r] && get(&bits[r], c)) else { continue };
        let prow = bits[p].clone();
        for (r, row) in bits.iter_mut().enumerate() {
            if r != p && get(row, c) {
                for (a, b) in row.iter_mut().zip(&prow) {
                    *a ^= b;
                }
            }
        }
        pivoted[p] = true;
        pivots.push((p, c));
    }
    let rows = bits.iter().map(|w| (0..n_cols).map(|k| get(w, k) as u8).collect()).collect();
    Reduced { q: 2, n_cols, rows, pivots }
}
