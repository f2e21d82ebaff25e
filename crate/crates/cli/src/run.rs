//! Subcommand implementations and their output files.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dualis_core::ais::{ais_estimate, AnnealingLadder};
use dualis_core::dual::{duality_constant, dualize, tanh_tables, DualGraph, TableForm, VarRole};
use dualis_core::gf::{strongest_field_site, validate_partition, PartitionReport};
use dualis_core::primal::{enumerate_z, method1_uniform_estimate, method2_reciprocal_estimate, PrimalSampler};
use dualis_core::sampler::{dual_gibbs_estimate, is_estimate_with, uniform_dual_estimate, AuxKind, AuxiliaryDistribution};
use dualis_core::stats::pooled_estimate;
use dualis_core::{Boundary, ChainSeed, EstimateTrace, Family};
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::Serialize;

use crate::config::{ExperimentConfig, SamplerId};
use crate::error::CliError;
use crate::instance::{build_instance, scheme_for, Instance};

pub const THREADS_ENV: &str = "DUALIS_THREADS";
pub const DEFAULT_OUTPUT: &str = "dualis-out";

/// Pool for chain parallelism; `DUALIS_THREADS` wins over the flag, and 0
/// means one thread per core.
pub fn thread_pool(flag: Option<usize>) -> Result<ThreadPool, CliError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| CliError::Config {
            origin: Some(THREADS_ENV.into()),
            message: format!("expected a thread count, got {v:?}"),
        })?,
        Err(_) => flag.unwrap_or(0),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config { origin: None, message: e.to_string() })
}

#[derive(Clone, Debug)]
pub struct ChainResult {
    pub trace: EstimateTrace,
    pub level_variance: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct SamplerRun {
    pub sampler: SamplerId,
    pub chains: Vec<ChainResult>,
    pub partition: Option<PartitionReport>,
    pub duality_constant: f64,
    pub edge_count: usize,
    pub seconds: f64,
}

/// Runs chains `0..chains` in parallel; results keep chain order.
fn run_chains<F>(pool: &ThreadPool, seed: u64, chains: u64, f: F) -> Result<Vec<ChainResult>, CliError>
where
    F: Fn(ChainSeed) -> dualis_core::Result<ChainResult> + Sync,
{
    let out: Vec<_> = pool.install(|| (0..chains).into_par_iter().map(|c| f(ChainSeed::new(seed, c))).collect());
    out.into_iter().map(|r| r.map_err(CliError::from)).collect()
}

fn plain(trace: EstimateTrace) -> ChainResult {
    ChainResult { trace, level_variance: None }
}

pub fn run_sampler(
    cfg: &ExperimentConfig,
    inst: &Instance,
    sampler: SamplerId,
    pool: &ThreadPool,
) -> Result<SamplerRun, CliError> {
    let start = Instant::now();
    let raw = dualize(&inst.spec, &inst.params)?;
    let dual = if cfg.tanh { tanh_tables(&raw)? } else { raw.clone() };
    let (l, spec, params) = (cfg.samples, &inst.spec, &inst.params);
    let mut partition = None;
    let chains = match sampler {
        SamplerId::PrimalUniform => run_chains(pool, cfg.seed, cfg.chains, |c| method1_uniform_estimate(spec, params, l, c).map(plain))?,
        SamplerId::PrimalGibbs | SamplerId::PrimalSw => {
            let kind = if sampler == SamplerId::PrimalGibbs { PrimalSampler::Gibbs } else { PrimalSampler::SwendsenWang };
            run_chains(pool, cfg.seed, cfg.chains, |c| {
                method2_reciprocal_estimate(spec, params, kind, l, cfg.burn_in, c).map(plain)
            })?
        }
        SamplerId::Ais => {
            let scheme = scheme_for(cfg, inst, &raw, sampler)?;
            partition = Some(scheme.report.clone());
            let ladder = match &cfg.ladder {
                Some(a) => AnnealingLadder::new(a.clone(), cfg.sweeps_per_level)?,
                None => {
                    let min_b = params
                        .couplings
                        .iter()
                        .zip(&inst.bonds_in_b)
                        .filter(|(_, &b)| b)
                        .map(|(&j, _)| j)
                        .fold(f64::INFINITY, f64::min);
                    AnnealingLadder::default_for(min_b, cfg.sweeps_per_level)?
                }
            };
            let ladder = match cfg.variance_limit {
                Some(v) => ladder.with_variance_limit(v),
                None => ladder,
            };
            run_chains(pool, cfg.seed, cfg.chains, |c| {
                ais_estimate(spec, params, &scheme, &ladder, l, c)
                    .map(|o| ChainResult { trace: o.trace, level_variance: Some(o.level_variance) })
            })?
        }
        _ => {
            let scheme = scheme_for(cfg, inst, &dual, sampler)?;
            partition = Some(scheme.report.clone());
            let aux_kind = match sampler {
                SamplerId::Is1 => Some(AuxKind::Q1),
                SamplerId::Is2 => Some(AuxKind::Q2),
                SamplerId::Potts => Some(AuxKind::PottsQ),
                _ => None,
            };
            match aux_kind {
                Some(kind) => {
                    let aux = AuxiliaryDistribution::with_normalizer(&dual, &scheme, kind, cfg.q1_normalizer)?;
                    run_chains(pool, cfg.seed, cfg.chains, |c| is_estimate_with(&dual, &scheme, &aux, l, c).map(plain))?
                }
                None if sampler == SamplerId::DualUniform => {
                    run_chains(pool, cfg.seed, cfg.chains, |c| uniform_dual_estimate(&dual, &scheme, l, c).map(plain))?
                }
                None => run_chains(pool, cfg.seed, cfg.chains, |c| {
                    dual_gibbs_estimate(&dual, &scheme, l, cfg.burn_in, c).map(plain)
                })?,
            }
        }
    };
    Ok(SamplerRun {
        sampler,
        chains,
        partition,
        duality_constant: duality_constant(&raw),
        edge_count: raw.edge_count(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Partition report without the residual terms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionBrief {
    pub ok: bool,
    pub sampled: usize,
    pub determined: usize,
    pub rank: usize,
    pub residuals: Vec<String>,
}

impl From<&PartitionReport> for PartitionBrief {
    fn from(r: &PartitionReport) -> Self {
        Self {
            ok: r.ok,
            sampled: r.a_count,
            determined: r.b_count,
            rank: r.rank,
            residuals: r.residuals.iter().map(|x| x.description.clone()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainSummary {
    pub chain: u64,
    pub log_z: f64,
    pub std_err: f64,
    pub free_energy_per_site: f64,
    pub rejections: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level_variance: Option<Vec<f64>>,
}

/// Deterministic run summary; wall-clock time lives in `timing.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub preset: Option<String>,
    pub sampler: String,
    pub rows: usize,
    pub cols: usize,
    pub boundary: Boundary,
    pub model: Family,
    pub n_sites: usize,
    pub seed: u64,
    pub samples: u64,
    pub chains: u64,
    pub log_z: f64,
    pub std_err: f64,
    pub free_energy_per_site: f64,
    pub free_energy_std_err: f64,
    /// Set for Markov-chain samplers: the SE ignores autocorrelation.
    pub iid_assumption_se: bool,
    pub rejections: u64,
    /// Accepted over proposed field-dual vectors (rejecting sampler only).
    pub acceptance_rate: Option<f64>,
    pub bonds_a: usize,
    pub bonds_b: usize,
    pub edge_count: usize,
    pub duality_constant: f64,
    pub partition: Option<PartitionBrief>,
    pub chain_results: Vec<ChainSummary>,
}

pub fn summarize(cfg: &ExperimentConfig, inst: &Instance, run: &SamplerRun) -> Result<Summary, CliError> {
    let traces: Vec<EstimateTrace> = run.chains.iter().map(|c| c.trace.clone()).collect();
    let (log_z, std_err) = pooled_estimate(&traces)?;
    let n = inst.spec.n_sites();
    let rejections: u64 = traces.iter().map(|t| t.meta.rejections).sum();
    let accepted = cfg.samples * cfg.chains;
    let chain_results = run
        .chains
        .iter()
        .map(|c| {
            Ok(ChainSummary {
                chain: c.trace.meta.seed.chain,
                log_z: c.trace.log_z()?,
                std_err: c.trace.std_err()?,
                free_energy_per_site: c.trace.free_energy_per_site()?,
                rejections: c.trace.meta.rejections,
                level_variance: c.level_variance.clone(),
            })
        })
        .collect::<dualis_core::Result<Vec<_>>>()?;
    Ok(Summary {
        preset: cfg.preset.clone(),
        sampler: run.sampler.to_string(),
        rows: cfg.rows,
        cols: cfg.cols,
        boundary: cfg.boundary,
        model: cfg.family,
        n_sites: n,
        seed: cfg.seed,
        samples: cfg.samples,
        chains: cfg.chains,
        log_z,
        std_err,
        free_energy_per_site: log_z / n as f64,
        free_energy_std_err: std_err / n as f64,
        iid_assumption_se: traces.iter().any(|t| t.meta.iid_assumption_se),
        rejections,
        acceptance_rate: (run.sampler == SamplerId::Is1)
            .then(|| accepted as f64 / (accepted + rejections) as f64),
        bonds_a: inst.bonds_a(),
        bonds_b: inst.bonds_b(),
        edge_count: run.edge_count,
        duality_constant: run.duality_constant,
        partition: run.partition.as_ref().map(PartitionBrief::from),
        chain_results,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    fs::write(path, s).map_err(|e| CliError::io(path, e))
}

fn write_run(dir: &Path, summary: &Summary, run: &SamplerRun) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for c in &run.chains {
        let path = dir.join(format!("chain_{:03}.csv", c.trace.meta.seed.chain));
        let f = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        c.trace.write_csv(BufWriter::new(f)).map_err(|e| CliError::io(&path, e))?;
    }
    write_json(&dir.join("summary.json"), summary)
}

#[derive(Clone, Debug, Serialize)]
struct Timing {
    sampler: String,
    seconds: f64,
}

fn output_dir(cfg: &ExperimentConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf).or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}

/// `estimate`: one sampler, one trace per chain, `summary.json`, `timing.json`.
pub fn estimate(cfg: &ExperimentConfig, output: Option<&Path>, pool: &ThreadPool) -> Result<Summary, CliError> {
    let dir = output_dir(cfg, output);
    let inst = build_instance(cfg)?;
    let run = run_sampler(cfg, &inst, cfg.samplers[0], pool)?;
    let summary = summarize(cfg, &inst, &run)?;
    write_run(&dir, &summary, &run)?;
    write_json(&dir.join("timing.json"), &[Timing { sampler: summary.sampler.clone(), seconds: run.seconds }])?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareEntry {
    pub sampler: String,
    pub directory: String,
    pub log_z: f64,
    pub std_err: f64,
    pub free_energy_per_site: f64,
    pub free_energy_std_err: f64,
    pub iid_assumption_se: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareReport {
    pub preset: Option<String>,
    pub seed: u64,
    pub samples: u64,
    pub chains: u64,
    pub entries: Vec<CompareEntry>,
    #[serde(skip)]
    pub summaries: Vec<Summary>,
}

/// `compare`: every listed sampler on the same instance, each in its own
/// subdirectory, plus `compare.json`.
pub fn compare(cfg: &ExperimentConfig, output: Option<&Path>, pool: &ThreadPool) -> Result<CompareReport, CliError> {
    let dir = output_dir(cfg, output);
    let inst = build_instance(cfg)?;
    let mut report =
        CompareReport { preset: cfg.preset.clone(), seed: cfg.seed, samples: cfg.samples, chains: cfg.chains, entries: vec![], summaries: vec![] };
    let mut timing = Vec::new();
    for (i, &s) in cfg.samplers.iter().enumerate() {
        let run = run_sampler(cfg, &inst, s, pool)?;
        let summary = summarize(cfg, &inst, &run)?;
        let sub = format!("{i:02}-{}", s.to_string().replace(':', "-"));
        write_run(&dir.join(&sub), &summary, &run)?;
        report.entries.push(CompareEntry {
            sampler: summary.sampler.clone(),
            directory: sub,
            log_z: summary.log_z,
            std_err: summary.std_err,
            free_energy_per_site: summary.free_energy_per_site,
            free_energy_std_err: summary.free_energy_std_err,
            iid_assumption_se: summary.iid_assumption_se,
        });
        timing.push(Timing { sampler: summary.sampler.clone(), seconds: run.seconds });
        report.summaries.push(summary);
    }
    write_json(&dir.join("compare.json"), &report)?;
    write_json(&dir.join("timing.json"), &timing)?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub rows: usize,
    pub cols: usize,
    pub boundary: Boundary,
    pub model: Family,
    pub n_sites: usize,
    pub states: u64,
    pub log_z: f64,
    pub free_energy_per_site: f64,
}

/// `oracle`: exact `log Z` by enumeration.
pub fn oracle(cfg: &ExperimentConfig) -> Result<OracleReport, CliError> {
    let inst = build_instance(cfg)?;
    let r = enumerate_z(&inst.spec, &inst.params)?;
    Ok(OracleReport {
        rows: cfg.rows,
        cols: cfg.cols,
        boundary: cfg.boundary,
        model: cfg.family,
        n_sites: r.n_sites,
        states: r.states,
        log_z: r.log_z,
        free_energy_per_site: r.free_energy_per_site,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DualVariable {
    pub index: usize,
    pub role: VarRole,
    pub table: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DualReport {
    pub model: Family,
    pub form: TableForm,
    pub n_sites: usize,
    pub n_bond_vars: usize,
    pub n_field_vars: usize,
    pub edge_count: usize,
    pub duality_constant: f64,
    pub log_scale: f64,
    /// Fields after sign canonicalization.
    pub fields: Vec<f64>,
    pub variables: Vec<DualVariable>,
    /// Per site: `(variable, coefficient)` of its modular check.
    pub site_checks: Vec<Vec<(usize, u8)>>,
}

/// `dual inspect`: factor tables and constants of the dual graph.
pub fn dual_inspect(cfg: &ExperimentConfig, tanh: bool) -> Result<DualReport, CliError> {
    let inst = build_instance(cfg)?;
    let raw = dualize(&inst.spec, &inst.params)?;
    let d: DualGraph = if tanh || cfg.tanh { tanh_tables(&raw)? } else { raw.clone() };
    Ok(DualReport {
        model: d.family,
        form: d.form,
        n_sites: d.n_sites,
        n_bond_vars: d.n_bond_vars,
        n_field_vars: d.n_field_vars,
        edge_count: d.edge_count(),
        duality_constant: duality_constant(&raw),
        log_scale: d.log_scale,
        fields: d.fields.clone(),
        variables: (0..d.n_vars()).map(|v| DualVariable { index: v, role: d.role(v), table: d.tables[v].clone() }).collect(),
        site_checks: d.site_rows.clone(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionValidation {
    pub bonds_a: usize,
    pub bonds_b: usize,
    /// Every field dual sampled (rejection on the field-dual sum).
    pub all_fields_sampled: PartitionReport,
    /// One field dual, at the strongest field, moved to the determined block.
    pub one_field_determined: PartitionReport,
    pub determined_field_site: Option<usize>,
}

impl PartitionValidation {
    pub fn ok(&self) -> bool {
        self.all_fields_sampled.ok && self.one_field_determined.ok
    }
}

/// `partition validate`: reports for the configured bond split with and
/// without one determined field dual.
pub fn partition_validate(cfg: &ExperimentConfig) -> Result<PartitionValidation, CliError> {
    let inst = build_instance(cfg)?;
    let d = dualize(&inst.spec, &inst.params)?;
    let bonds: Vec<usize> = (0..d.n_bond_vars).filter(|&b| !inst.bonds_in_b[b]).collect();
    let fields: Vec<usize> = (0..d.n_field_vars).map(|m| d.n_bond_vars + m).collect();
    let all: Vec<usize> = bonds.iter().chain(&fields).copied().collect();
    let skip = d.has_field_vars().then(|| strongest_field_site(&d));
    let one: Vec<usize> =
        bonds.iter().copied().chain(fields.iter().copied().filter(|&v| Some(v - d.n_bond_vars) != skip)).collect();
    Ok(PartitionValidation {
        bonds_a: inst.bonds_a(),
        bonds_b: inst.bonds_b(),
        all_fields_sampled: validate_partition(&d, &all),
        one_field_determined: validate_partition(&d, &one),
        determined_field_site: skip,
    })
}
