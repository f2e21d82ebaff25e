use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dualis_cli::config::{resolve, ConfigLayer, Domain, Purpose, Sources};
use dualis_cli::error::{CliError, EXIT_NUMERIC};
use dualis_cli::{presets, run};

#[derive(Parser)]
#[command(name = "dualis", version, about = "Partition functions of 2D Ising and Potts models by dual-domain sampling")]
struct Cli {
    /// Worker threads for chain parallelism (0: one per core). DUALIS_THREADS overrides.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Source {
    /// Configuration file (flat TOML keys).
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Built-in preset used as the base configuration.
    #[arg(long, short)]
    preset: Option<String>,
    /// Override one key, in TOML syntax (repeatable): --set samples=1000
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    #[arg(long, value_parser = ["dual", "primal"])]
    domain: Option<String>,
    /// Dual: is1, is2, potts, uniform, gibbs, ais. Primal: uniform, gibbs, sw.
    #[arg(long)]
    algorithm: Option<String>,
    /// Alias of --algorithm.
    #[arg(long, conflicts_with = "algorithm")]
    sampler: Option<String>,
    /// Annealing exponents, comma separated, starting at 1.
    #[arg(long, value_delimiter = ',')]
    ladder: Option<Vec<f64>>,
    #[arg(long)]
    sweeps_per_level: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    chains: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one estimator and write traces and a summary.
    Estimate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run every sampler in `samplers` on the same instance.
    Compare {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Exact log Z by enumeration, as JSON.
    Oracle {
        #[command(flatten)]
        source: Source,
    },
    /// Dual graph tools.
    Dual {
        #[command(subcommand)]
        command: DualCommand,
    },
    /// Partition tools.
    Partition {
        #[command(subcommand)]
        command: PartitionCommand,
    },
    /// List presets, or print one.
    Presets {
        #[arg(long)]
        show: Option<String>,
    },
}

#[derive(Subcommand)]
enum DualCommand {
    /// Factor tables and duality constant as JSON.
    Inspect {
        #[command(flatten)]
        source: Source,
        /// Normalized Ising tables.
        #[arg(long)]
        tanh: bool,
    },
}

#[derive(Subcommand)]
enum PartitionCommand {
    /// Rank and residual conditions of the configured split, as JSON.
    Validate {
        #[command(flatten)]
        source: Source,
    },
}

fn sources(s: Source, flags: ConfigLayer) -> Sources {
    Sources { preset: s.preset, file: s.config, sets: s.set, flags }
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn main_inner(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Estimate { source, overrides: o, output } => {
            let flags = ConfigLayer {
                domain: o.domain.map(|d| if d == "primal" { Domain::Primal } else { Domain::Dual }),
                algorithm: o.algorithm.or(o.sampler),
                ladder: o.ladder,
                sweeps_per_level: o.sweeps_per_level,
                samples: o.samples,
                chains: o.chains,
                seed: o.seed,
                ..Default::default()
            };
            let cfg = resolve(&sources(source, flags), Purpose::Estimate)?;
            let pool = run::thread_pool(cli.threads)?;
            let s = run::estimate(&cfg, output.as_deref(), &pool)?;
            println!(
                "{}: free energy per site {:.6} (se {:.2e}), log Z {:.6}",
                s.sampler, s.free_energy_per_site, s.free_energy_std_err, s.log_z
            );
        }
        Command::Compare { source, samples, seed, output } => {
            let flags = ConfigLayer { samples, seed, ..Default::default() };
            let cfg = resolve(&sources(source, flags), Purpose::Compare)?;
            let pool = run::thread_pool(cli.threads)?;
            let r = run::compare(&cfg, output.as_deref(), &pool)?;
            for e in &r.entries {
                println!(
                    "{}: free energy per site {:.6} (se {:.2e})",
                    e.sampler, e.free_energy_per_site, e.free_energy_std_err
                );
            }
        }
        Command::Oracle { source } => {
            let cfg = resolve(&sources(source, ConfigLayer::default()), Purpose::Model)?;
            print_json(&run::oracle(&cfg)?);
        }
        Command::Dual { command: DualCommand::Inspect { source, tanh } } => {
            let cfg = resolve(&sources(source, ConfigLayer::default()), Purpose::Model)?;
            print_json(&run::dual_inspect(&cfg, tanh)?);
        }
        Command::Partition { command: PartitionCommand::Validate { source } } => {
            let cfg = resolve(&sources(source, ConfigLayer::default()), Purpose::Model)?;
            let v = run::partition_validate(&cfg)?;
            print_json(&v);
            if !v.ok() {
                return Ok(EXIT_NUMERIC);
            }
        }
        Command::Presets { show } => match show {
            Some(name) => match presets::text(&name) {
                Some(t) => print!("{}", t.trim_start()),
                None => {
                    return Err(CliError::Config { origin: None, message: format!("unknown preset {name:?}") });
                }
            },
            None => {
                for n in presets::NAMES {
                    println!("{n}");
                }
            }
        },
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("dualis: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
