//! Experiment configuration: a flat TOML file of documented keys, layered
//! over an optional named preset and command-line overrides.
//!
//! Keys:
//!
//! | key | meaning |
//! |---|---|
//! | `preset` | base preset whose keys this file overrides |
//! | `rows`, `cols` | lattice size |
//! | `boundary` | `"free"` or `"periodic"` |
//! | `family` | `"ising"` or `"potts"` |
//! | `q` | Potts alphabet size |
//! | `J` | coupling of every bond |
//! | `J_A`, `J_B` | couplings of sampled / determined bonds (use both, or `J`) |
//! | `H` | site fields (default 0) |
//! | `seed` | experiment seed (required) |
//! | `domain` | `"dual"` (default) or `"primal"` |
//! | `algorithm` | dual: `is1`, `is2`, `potts`, `uniform`, `gibbs`, `ais`; primal: `uniform`, `gibbs`, `sw` |
//! | `samplers` | list of `"domain:algorithm"` for `compare` |
//! | `samples` | samples per chain |
//! | `chains` | independent chains (default 1) |
//! | `burn_in` | sweeps discarded by Markov-chain samplers (default 1000) |
//! | `ladder` | annealing exponents, starting at 1 |
//! | `sweeps_per_level` | dual Gibbs sweeps per annealing level (default 10) |
//! | `variance_limit` | largest tolerated per-level log-weight variance (default 50) |
//! | `partition` | bond split: `"comb"` (default) or `"checker"` |
//! | `tanh` | use normalized Ising tables (default false) |
//! | `q1_normalizer` | `"restricted"` (default) or `"unrestricted"` |
//! | `output` | output directory |
//!
//! Parameter values (`J`, `J_A`, `J_B`, `H`) are a number, a string
//! `"U[lo, hi]"` for i.i.d. uniform draws, or an explicit list.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use dualis_core::sampler::Q1Normalizer;
use dualis_core::{Boundary, Family, ParamDistribution};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::presets;

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    List(Vec<f64>),
    Text(String),
}

impl ParamValue {
    pub fn to_distribution(&self) -> Result<ParamDistribution, String> {
        match self {
            ParamValue::Number(v) => Ok(ParamDistribution::Constant(*v)),
            ParamValue::List(v) => Ok(ParamDistribution::Explicit(v.clone())),
            ParamValue::Text(s) => parse_uniform(s),
        }
    }
}

fn parse_uniform(s: &str) -> Result<ParamDistribution, String> {
    let bad = || format!("expected \"U[lo, hi]\", got {s:?}");
    let inner = s.trim().strip_prefix("U[").and_then(|r| r.strip_suffix(']')).ok_or_else(bad)?;
    let (lo, hi) = inner.split_once(',').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let d = ParamDistribution::UniformRange(lo, hi);
    d.validate(1).map_err(|e| e.to_string())?;
    Ok(d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Ising,
    Potts,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Dual,
    Primal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionName {
    #[default]
    Comb,
    Checker,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SamplerId {
    Is1,
    Is2,
    Potts,
    DualUniform,
    DualGibbs,
    Ais,
    PrimalUniform,
    PrimalGibbs,
    PrimalSw,
}

impl SamplerId {
    pub const ALL: [SamplerId; 9] = [
        SamplerId::Is1,
        SamplerId::Is2,
        SamplerId::Potts,
        SamplerId::DualUniform,
        SamplerId::DualGibbs,
        SamplerId::Ais,
        SamplerId::PrimalUniform,
        SamplerId::PrimalGibbs,
        SamplerId::PrimalSw,
    ];

    pub fn domain(self) -> Domain {
        match self {
            SamplerId::PrimalUniform | SamplerId::PrimalGibbs | SamplerId::PrimalSw => Domain::Primal,
            _ => Domain::Dual,
        }
    }

    pub fn algorithm(self) -> &'static str {
        match self {
            SamplerId::Is1 => "is1",
            SamplerId::Is2 => "is2",
            SamplerId::Potts => "potts",
            SamplerId::DualUniform | SamplerId::PrimalUniform => "uniform",
            SamplerId::DualGibbs | SamplerId::PrimalGibbs => "gibbs",
            SamplerId::Ais => "ais",
            SamplerId::PrimalSw => "sw",
        }
    }

    pub fn from_parts(domain: Domain, algorithm: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.domain() == domain && s.algorithm() == algorithm)
    }

    /// Parses `"domain:algorithm"`.
    pub fn parse(s: &str) -> Option<Self> {
        let (d, a) = s.split_once(':')?;
        let d = match d {
            "dual" => Domain::Dual,
            "primal" => Domain::Primal,
            _ => return None,
        };
        Self::from_parts(d, a)
    }

    /// Whether the sampler is a Markov chain (its SE ignores autocorrelation).
    pub fn is_chain(self) -> bool {
        matches!(self, SamplerId::DualGibbs | SamplerId::PrimalGibbs | SamplerId::PrimalSw)
    }
}

impl fmt::Display for SamplerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match self.domain() {
            Domain::Dual => "dual",
            Domain::Primal => "primal",
        };
        write!(f, "{d}:{}", self.algorithm())
    }
}

/// One layer of configuration keys, all optional.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub preset: Option<String>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub boundary: Option<Boundary>,
    pub family: Option<FamilyName>,
    pub q: Option<u8>,
    #[serde(rename = "J")]
    pub j: Option<ParamValue>,
    #[serde(rename = "J_A")]
    pub j_a: Option<ParamValue>,
    #[serde(rename = "J_B")]
    pub j_b: Option<ParamValue>,
    #[serde(rename = "H")]
    pub h: Option<ParamValue>,
    pub seed: Option<u64>,
    pub domain: Option<Domain>,
    pub algorithm: Option<String>,
    pub samplers: Option<Vec<String>>,
    pub samples: Option<u64>,
    pub chains: Option<u64>,
    pub burn_in: Option<u64>,
    pub ladder: Option<Vec<f64>>,
    pub sweeps_per_level: Option<u64>,
    pub variance_limit: Option<f64>,
    pub partition: Option<PartitionName>,
    pub tanh: Option<bool>,
    pub q1_normalizer: Option<Q1Normalizer>,
    pub output: Option<String>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident, $origins:ident, $origin_of:ident; $($field:ident => $key:literal),* $(,)?) => {
        $(
            if $top.$field.is_some() {
                $base.$field = $top.$field.clone();
                $origins.insert($key, $origin_of($key));
            }
        )*
    };
}

/// A layer plus where each of its keys came from.
#[derive(Clone, Debug, Default)]
pub struct Layered {
    pub keys: ConfigLayer,
    /// Key name to a human-readable location (`file:line`, `preset fig6`, ...).
    pub origins: BTreeMap<&'static str, String>,
}

impl Layered {
    pub fn overlay(&mut self, top: &ConfigLayer, origin_of: impl Fn(&str) -> String) {
        let base = &mut self.keys;
        let origins = &mut self.origins;
        overlay_fields!(base, top, origins, origin_of;
            preset => "preset", rows => "rows", cols => "cols", boundary => "boundary", family => "family",
            q => "q", j => "J", j_a => "J_A", j_b => "J_B", h => "H", seed => "seed", domain => "domain",
            algorithm => "algorithm", samplers => "samplers", samples => "samples", chains => "chains",
            burn_in => "burn_in", ladder => "ladder", sweeps_per_level => "sweeps_per_level",
            variance_limit => "variance_limit", partition => "partition", tanh => "tanh",
            q1_normalizer => "q1_normalizer", output => "output",
        );
    }

    fn err(&self, key: &str, message: impl Into<String>) -> CliError {
        CliError::Config { origin: self.origins.get(key).cloned(), message: message.into() }
    }
}

/// Line of the first assignment to `key` in TOML `text`, 1-based.
pub fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

/// Parses one TOML layer; syntax and type errors carry line and column.
pub fn parse_layer(text: &str, source: &str) -> Result<ConfigLayer, CliError> {
    toml::from_str(text).map_err(|e| {
        let origin = match e.span() {
            Some(span) => {
                let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                let col = span.start - text[..span.start.min(text.len())].rfind('\n').map_or(0, |p| p + 1) + 1;
                format!("{source}:{line}:{col}")
            }
            None => source.to_string(),
        };
        CliError::Config { origin: Some(origin), message: e.message().to_string() }
    })
}

/// Where configuration comes from, lowest priority first.
#[derive(Clone, Debug, Default)]
pub struct Sources {
    pub preset: Option<String>,
    pub file: Option<PathBuf>,
    /// `key=value` pairs in TOML syntax.
    pub sets: Vec<String>,
    /// Typed overrides from dedicated command-line flags.
    pub flags: ConfigLayer,
}

pub fn load(sources: &Sources) -> Result<Layered, CliError> {
    let mut file_layer = None;
    if let Some(path) = &sources.file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config { origin: Some(path.display().to_string()), message: e.to_string() })?;
        let layer = parse_layer(&text, &path.display().to_string())?;
        file_layer = Some((path.clone(), text, layer));
    }
    let preset_name = sources
        .preset
        .clone()
        .or_else(|| file_layer.as_ref().and_then(|(_, _, l)| l.preset.clone()));

    let mut out = Layered::default();
    if let Some(name) = &preset_name {
        let text = presets::text(name).ok_or_else(|| CliError::Config {
            origin: file_layer
                .as_ref()
                .and_then(|(p, t, _)| key_line(t, "preset").map(|n| format!("{}:{n}", p.display()))),
            message: format!("unknown preset {name:?} (known: {})", presets::NAMES.join(", ")),
        })?;
        let layer = parse_layer(text, &format!("preset {name}"))?;
        out.overlay(&layer, |_| format!("preset {name}"));
        out.keys.preset = Some(name.clone());
    }
    if let Some((path, text, layer)) = &file_layer {
        out.overlay(layer, |k| match key_line(text, k) {
            Some(n) => format!("{}:{n}", path.display()),
            None => path.display().to_string(),
        });
        out.keys.preset = preset_name.clone();
    }
    for (i, s) in sources.sets.iter().enumerate() {
        let layer = parse_layer(s, &format!("--set #{}", i + 1))?;
        out.overlay(&layer, |_| format!("--set {s}"));
    }
    out.overlay(&sources.flags, |k| format!("command-line flag for `{k}`"));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Couplings {
    /// One distribution for every bond.
    All(ParamDistribution),
    /// Separate distributions for sampled and determined bonds.
    Split { sampled: ParamDistribution, determined: ParamDistribution },
}

/// A validated experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub preset: Option<String>,
    pub rows: usize,
    pub cols: usize,
    pub boundary: Boundary,
    pub family: Family,
    pub couplings: Couplings,
    pub fields: ParamDistribution,
    pub seed: u64,
    /// `estimate` runs the first; `compare` runs all.
    pub samplers: Vec<SamplerId>,
    pub samples: u64,
    pub chains: u64,
    pub burn_in: u64,
    pub ladder: Option<Vec<f64>>,
    pub sweeps_per_level: u64,
    pub variance_limit: Option<f64>,
    pub partition: PartitionName,
    pub tanh: bool,
    pub q1_normalizer: Q1Normalizer,
    pub output: Option<PathBuf>,
}

pub const DEFAULT_BURN_IN: u64 = dualis_core::primal::DEFAULT_BURN_IN;
pub const DEFAULT_SWEEPS_PER_LEVEL: u64 = 10;
pub const DEFAULT_VARIANCE_LIMIT: f64 = 50.0;

/// What a subcommand needs from the configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    /// Model only (`oracle`, `dual inspect`, `partition validate`).
    Model,
    /// One sampler (`estimate`).
    Estimate,
    /// A list of samplers (`compare`).
    Compare,
}

impl Layered {
    pub fn validate(&self, purpose: Purpose) -> Result<ExperimentConfig, CliError> {
        let k = &self.keys;
        let missing = |key: &str| CliError::Config { origin: None, message: format!("missing required key `{key}`") };
        let rows = k.rows.ok_or_else(|| missing("rows"))?;
        let cols = k.cols.ok_or_else(|| missing("cols"))?;
        if rows == 0 {
            return Err(self.err("rows", "`rows` must be positive"));
        }
        if cols == 0 {
            return Err(self.err("cols", "`cols` must be positive"));
        }
        let boundary = k.boundary.ok_or_else(|| missing("boundary"))?;
        let family = match (k.family.ok_or_else(|| missing("family"))?, k.q) {
            (FamilyName::Ising, None | Some(2)) => Family::Ising,
            (FamilyName::Ising, Some(q)) => return Err(self.err("q", format!("the Ising model has q = 2, got {q}"))),
            (FamilyName::Potts, Some(q)) if q >= 2 => Family::Potts { q },
            (FamilyName::Potts, Some(q)) => return Err(self.err("q", format!("`q` must be at least 2, got {q}"))),
            (FamilyName::Potts, None) => return Err(missing("q")),
        };
        let dist = |key: &str, v: &ParamValue| v.to_distribution().map_err(|m| self.err(key, m));
        let coupling = |key: &str, v: &ParamValue| {
            let d = dist(key, v)?;
            let low = match &d {
                ParamDistribution::Constant(c) => *c,
                ParamDistribution::UniformRange(lo, _) => *lo,
                ParamDistribution::Explicit(v) => v.iter().cloned().fold(f64::INFINITY, f64::min),
            };
            if low < 0.0 {
                return Err(self.err(key, format!("couplings must be nonnegative (ferromagnetic), got {low}")));
            }
            Ok(d)
        };
        let couplings = match (&k.j, &k.j_a, &k.j_b) {
            (Some(j), None, None) => Couplings::All(coupling("J", j)?),
            (None, Some(a), Some(b)) => Couplings::Split { sampled: coupling("J_A", a)?, determined: coupling("J_B", b)? },
            (Some(_), _, _) => return Err(self.err("J", "`J` cannot be combined with `J_A` or `J_B`")),
            (None, Some(_), None) => return Err(self.err("J_A", "`J_A` needs `J_B`")),
            (None, None, Some(_)) => return Err(self.err("J_B", "`J_B` needs `J_A`")),
            (None, None, None) => return Err(missing("J")),
        };
        let fields = match &k.h {
            Some(h) => dist("H", h)?,
            None => ParamDistribution::Constant(0.0),
        };
        let seed = k.seed.ok_or_else(|| missing("seed"))?;

        let samplers = match purpose {
            Purpose::Model => Vec::new(),
            Purpose::Estimate => {
                let domain = k.domain.unwrap_or(Domain::Dual);
                let alg = k.algorithm.as_deref().ok_or_else(|| missing("algorithm"))?;
                let id = SamplerId::from_parts(domain, alg).ok_or_else(|| {
                    let known: Vec<&str> =
                        SamplerId::ALL.iter().filter(|s| s.domain() == domain).map(|s| s.algorithm()).collect();
                    self.err("algorithm", format!("unknown algorithm {alg:?} for this domain (known: {})", known.join(", ")))
                })?;
                vec![id]
            }
            Purpose::Compare => {
                let list = k.samplers.as_ref().ok_or_else(|| missing("samplers"))?;
                if list.is_empty() {
                    return Err(self.err("samplers", "`samplers` is empty"));
                }
                list.iter()
                    .map(|s| {
                        SamplerId::parse(s).ok_or_else(|| {
                            self.err("samplers", format!("unknown sampler {s:?} (expected \"dual:is2\", \"primal:sw\", ...)"))
                        })
                    })
                    .collect::<Result<_, _>>()?
            }
        };
        let samples = match purpose {
            Purpose::Model => k.samples.unwrap_or(0),
            _ => match k.samples.ok_or_else(|| missing("samples"))? {
                0 => return Err(self.err("samples", "`samples` must be positive")),
                n => n,
            },
        };
        let chains = k.chains.unwrap_or(1);
        if chains == 0 {
            return Err(self.err("chains", "`chains` must be positive"));
        }
        if let Some(l) = &k.ladder {
            dualis_core::ais::AnnealingLadder::new(l.clone(), 0).map_err(|e| self.err("ladder", e.to_string()))?;
        }
        let variance_limit = k.variance_limit.or(Some(DEFAULT_VARIANCE_LIMIT));
        if let Some(v) = variance_limit {
            if !(v > 0.0) {
                return Err(self.err("variance_limit", "`variance_limit` must be positive"));
            }
        }
        let tanh = k.tanh.unwrap_or(false);
        if tanh && !family.is_ising() {
            return Err(self.err("tanh", "normalized tables exist for the Ising model only"));
        }
        Ok(ExperimentConfig {
            preset: k.preset.clone(),
            rows,
            cols,
            boundary,
            family,
            couplings,
            fields,
            seed,
            samplers,
            samples,
            chains,
            burn_in: k.burn_in.unwrap_or(DEFAULT_BURN_IN),
            ladder: k.ladder.clone(),
            sweeps_per_level: k.sweeps_per_level.unwrap_or(DEFAULT_SWEEPS_PER_LEVEL),
            variance_limit,
            partition: k.partition.unwrap_or_default(),
            tanh,
            q1_normalizer: k.q1_normalizer.unwrap_or_default(),
            output: k.output.as_ref().map(PathBuf::from),
        })
    }
}

/// Loads and validates in one step.
pub fn resolve(sources: &Sources, purpose: Purpose) -> Result<ExperimentConfig, CliError> {
    load(sources)?.validate(purpose)
}

/// Convenience for a single file.
pub fn from_file(path: &Path, purpose: Purpose) -> Result<ExperimentConfig, CliError> {
    resolve(&Sources { file: Some(path.to_path_buf()), ..Default::default() }, purpose)
}
