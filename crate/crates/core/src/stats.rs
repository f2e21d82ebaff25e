//! Log-domain streaming statistics and estimate traces.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::ChainSeed;

/// `log(exp(a) + exp(b))` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Streaming mean and spread of positive quantities supplied as logarithms.
///
/// Holds `sum exp(v - shift)` and `sum exp(2 (v - shift))` with `shift` the
/// running maximum, so values anywhere in `[-1e6, 1e6]` never overflow.
/// `-inf` (a zero-weight sample) is accepted and counts towards `n`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LogAccumulator {
    count: u64,
    shift: f64,
    sum: f64,
    sum_sq: f64,
}

impl LogAccumulator {
    pub fn new() -> Self {
        Self { count: 0, shift: f64::NEG_INFINITY, sum: 0.0, sum_sq: 0.0 }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn push(&mut self, log_value: f64) -> Result<()> {
        if log_value.is_nan() || log_value == f64::INFINITY {
            return Err(Error::Numeric(format!("cannot accumulate log value {log_value}")));
        }
        self.count += 1;
        if log_value == f64::NEG_INFINITY {
            return Ok(());
        }
        if log_value > self.shift {
            self.rescale(log_value);
        }
        let d = log_value - self.shift;
        self.sum += d.exp();
        self.sum_sq += (2.0 * d).exp();
        Ok(())
    }

    fn rescale(&mut self, new_shift: f64) {
        if self.shift != f64::NEG_INFINITY {
            let d = self.shift - new_shift;
            self.sum *= d.exp();
            self.sum_sq *= (2.0 * d).exp();
        }
        self.shift = new_shift;
    }

    /// Combines two accumulators as if their streams had been concatenated.
    pub fn merge(&mut self, other: &LogAccumulator) {
        if other.count == 0 {
            return;
        }
        if other.shift > self.shift {
            self.rescale(other.shift);
        }
        if other.shift != f64::NEG_INFINITY {
            let d = other.shift - self.shift;
            self.sum += other.sum * d.exp();
            self.sum_sq += other.sum_sq * (2.0 * d).exp();
        }
        self.count += other.count;
    }

    /// `log((1/n) sum exp(v_i))`.
    pub fn log_mean(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::EmptyAccumulator);
        }
        if self.sum == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.shift + self.sum.ln() - (self.count as f64).ln())
    }

    /// Standard error of `log_mean` by the delta method: the sample standard
    /// deviation of `exp(v)` over `sqrt(n)` times its mean. `NaN` for `n = 1`.
    pub fn std_err(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::EmptyAccumulator);
        }
        if self.count == 1 || self.sum == 0.0 {
            return Ok(if self.count == 1 { f64::NAN } else { 0.0 });
        }
        let n = self.count as f64;
        // sum_sq * n / sum^2 - 1 is the squared coefficient of variation (biased form).
        let ratio = self.sum_sq * n / (self.sum * self.sum) - 1.0;
        Ok((ratio.max(0.0) / (n - 1.0)).sqrt())
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

/// Welford mean/variance of plain reals.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningMoments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }
}

/// Whether the estimator averages the quantity itself or its reciprocal
/// (in which case `log Z` is minus the log running mean).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorForm {
    Direct,
    Reciprocal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub sample: u64,
    pub log_running_mean: f64,
    pub std_err: f64,
    pub free_energy_per_site: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub sampler: String,
    pub seed: ChainSeed,
    pub samples: u64,
    pub n_sites: usize,
    pub form: EstimatorForm,
    /// Added to `±log_running_mean` to obtain `log Z`.
    pub log_offset: f64,
    /// Draws of the sampled block rejected for failing the parity condition.
    pub rejections: u64,
    /// Markov-chain estimators report an SE that ignores autocorrelation.
    pub iid_assumption_se: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateTrace {
    pub meta: TraceMeta,
    pub rows: Vec<TraceRow>,
    pub acc: LogAccumulator,
}

pub const CSV_HEADER: &str = "sample,log_running_mean,std_err,free_energy_per_site";

/// Most rows written for a long run.
pub const MAX_ROWS: usize = 2000;

/// Sample indices at which a trace row is emitted: every sample up to 10^4,
/// geometrically spaced (at most [`MAX_ROWS`]) beyond. The last sample is
/// always included.
pub fn emission_schedule(total: u64) -> Vec<u64> {
    if total <= 10_000 {
        return (1..=total).collect();
    }
    let mut out = Vec::with_capacity(MAX_ROWS);
    let ln_total = (total as f64).ln();
    for i in 0..MAX_ROWS {
        let s = (ln_total * i as f64 / (MAX_ROWS - 1) as f64).exp().round() as u64;
        let s = s.clamp(1, total);
        if out.last() != Some(&s) {
            out.push(s);
        }
    }
    if out.last() != Some(&total) {
        out.push(total);
    }
    out
}

impl EstimateTrace {
    pub fn log_z(&self) -> Result<f64> {
        let lm = self.acc.log_mean()?;
        Ok(match self.meta.form {
            EstimatorForm::Direct => lm + self.meta.log_offset,
            EstimatorForm::Reciprocal => -lm + self.meta.log_offset,
        })
    }

    pub fn std_err(&self) -> Result<f64> {
        self.acc.std_err()
    }

    pub fn free_energy_per_site(&self) -> Result<f64> {
        Ok(self.log_z()? / self.meta.n_sites as f64)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{}", r.sample, r.log_running_mean, r.std_err, r.free_energy_per_site)?;
        }
        Ok(())
    }
}

/// `(log Z, SE)` of several traces of one estimator, their samples merged.
pub fn pooled_estimate(traces: &[EstimateTrace]) -> Result<(f64, f64)> {
    let first = traces.first().ok_or(Error::EmptyAccumulator)?;
    let mut acc = LogAccumulator::new();
    for t in traces {
        if t.meta.form != first.meta.form || t.meta.log_offset != first.meta.log_offset {
            return Err(Error::Config("pooled traces come from different estimators".into()));
        }
        acc.merge(&t.acc);
    }
    let pooled = EstimateTrace { meta: first.meta.clone(), rows: Vec::new(), acc };
    Ok((pooled.log_z()?, pooled.std_err()?))
}

/// Accumulates per-sample log values and records trace rows on schedule.
pub struct TraceBuilder {
    meta: TraceMeta,
    acc: LogAccumulator,
    rows: Vec<TraceRow>,
    schedule: Vec<u64>,
    next: usize,
}

impl TraceBuilder {
    pub fn new(meta: TraceMeta) -> Self {
        let schedule = emission_schedule(meta.samples);
        Self { meta, acc: LogAccumulator::new(), rows: Vec::with_capacity(schedule.len()), schedule, next: 0 }
    }

    pub fn push(&mut self, log_value: f64) -> Result<()> {
        self.acc.push(log_value)?;
        let n = self.acc.count();
        if self.schedule.get(self.next) == Some(&n) {
            self.next += 1;
            let lm = self.acc.log_mean()?;
            let log_z = match self.meta.form {
                EstimatorForm::Direct => lm + self.meta.log_offset,
                EstimatorForm::Reciprocal => -lm + self.meta.log_offset,
            };
            self.rows.push(TraceRow {
                sample: n,
                log_running_mean: lm,
                std_err: self.acc.std_err()?,
                free_energy_per_site: log_z / self.meta.n_sites as f64,
            });
        }
        Ok(())
    }

    pub fn add_rejections(&mut self, r: u64) {
        self.meta.rejections += r;
    }

    pub fn finish(self) -> EstimateTrace {
        EstimateTrace { meta: self.meta, rows: self.rows, acc: self.acc }
    }
}
