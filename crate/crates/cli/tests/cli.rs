use std::path::Path;
use std::process::{Command, Output};

use dualis_cli::config::{resolve, Purpose, Sources};
use dualis_cli::instance::build_instance;
use dualis_cli::{EXIT_CONFIG, EXIT_NUMERIC};

fn dualis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualis")).args(args).env_remove("DUALIS_THREADS").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn estimate_writes_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let out = dualis(&["estimate", "-p", "fig13", "--set", "samples=2000", "--chains", "2", "-o", o]);
    assert!(out.status.success(), "{}", stderr(&out));
    for f in ["chain_000.csv", "chain_001.csv", "summary.json", "timing.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("chain_000.csv")).unwrap();
    assert!(csv.lines().count() > 2);
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["sampler"], "dual:gibbs");
    assert_eq!(s["chains"], 2);
    assert_eq!(s["chain_results"].as_array().unwrap().len(), 2);
    assert!((s["free_energy_per_site"].as_f64().unwrap() - 1.53048).abs() < 0.05);
}

#[test]
fn flags_override_file_and_preset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "preset = \"fig10\"\nsamples = 500\nchains = 1\nalgorithm = \"uniform\"\n").unwrap();
    let o = dir.path().join("out");
    let out = dualis(&["estimate", "-c", cfg.to_str().unwrap(), "--set", "seed=9", "--samples", "300", "-o", o.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let s = json(&o.join("summary.json"));
    assert_eq!(s["samples"], 300);
    assert_eq!(s["seed"], 9);
    assert_eq!(s["sampler"], "primal:uniform");
}

#[test]
fn config_errors_point_at_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "preset = \"fig13\"\nsamples = 100\nbogus = 3\n").unwrap();
    let out = dualis(&["estimate", "-c", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(stderr(&out).contains("bad.toml:3"), "{}", stderr(&out));

    std::fs::write(&cfg, "preset = \"fig13\"\n\nchains = 0\n").unwrap();
    let out = dualis(&["estimate", "-c", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(stderr(&out).contains("bad.toml:3"), "{}", stderr(&out));

    let out = dualis(&["estimate", "-p", "fig13", "--set", "J = -1"]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG), "{}", stderr(&out));
    assert!(stderr(&out).contains("--set J = -1"), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_with_config_code() {
    for args in [
        vec!["estimate", "-c", "/nonexistent/run.toml"],
        vec!["estimate", "-p", "fig99"],
        vec!["estimate", "-p", "fig13", "--algorithm", "is7"],
        vec!["oracle", "-p", "fig6"],
    ] {
        let out = dualis(&args);
        assert_eq!(out.status.code(), Some(EXIT_CONFIG), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn numeric_failures_exit_with_numeric_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dualis(&["estimate", "-p", "fig13", "--set", "J=0", "--set", "samples=10", "-o", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(EXIT_NUMERIC), "{}", stderr(&out));
}

#[test]
fn duplicate_samplers_give_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let out = dualis(&[
        "compare",
        "-p",
        "fig8",
        "--set",
        "rows=6",
        "--set",
        "cols=6",
        "--set",
        "chains=2",
        "--set",
        "samplers=[\"dual:is2\", \"dual:is2\"]",
        "--samples",
        "500",
        "-o",
        o,
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    for f in ["summary.json", "chain_000.csv", "chain_001.csv"] {
        let a = std::fs::read(dir.path().join("00-dual-is2").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("01-dual-is2").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let c = json(&dir.path().join("compare.json"));
    assert_eq!(c["entries"].as_array().unwrap().len(), 2);
}

#[test]
fn thread_variable_overrides_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_dualis"))
        .args(["--threads", "2", "estimate", "-p", "fig13", "--set", "samples=10", "-o", o])
        .env("DUALIS_THREADS", "none")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(stderr(&out).contains("DUALIS_THREADS"));
}

#[test]
fn inspection_commands() {
    let out = dualis(&["presets"]);
    assert!(out.status.success());
    let listed = String::from_utf8_lossy(&out.stdout).into_owned();
    for name in dualis_cli::presets::NAMES {
        assert!(listed.contains(name));
    }
    let out = dualis(&["presets", "--show", "fig6"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("J_B = \"U[1.15, 1.25]\""));

    let out = dualis(&["partition", "validate", "-p", "fig6"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["bonds_a"].as_u64().unwrap() + v["bonds_b"].as_u64().unwrap(), 1800);
    assert_eq!(v["bonds_b"], 899);

    let out = dualis(&["dual", "inspect", "-p", "fig13", "--tanh"]);
    assert!(out.status.success(), "{}", stderr(&out));
}

/// At these couplings nearly all weight sits on the aligned ground state, so
/// the per-site estimate must lie close to the ground-state bound.
#[test]
fn strong_potts_preset_sits_on_the_ground_state_bound() {
    let src = Sources { preset: Some("fig8-potts".into()), ..Default::default() };
    let cfg = resolve(&src, Purpose::Estimate).unwrap();
    let inst = build_instance(&cfg).unwrap();
    let n = inst.spec.n_sites() as f64;
    let ground = (inst.params.couplings.iter().sum::<f64>() + inst.params.fields.iter().sum::<f64>()) / n;

    let dir = tempfile::tempdir().unwrap();
    let out = dualis(&["estimate", "-p", "fig8-potts", "--set", "samples=20000", "--set", "chains=1", "-o", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let f = json(&dir.path().join("summary.json"))["free_energy_per_site"].as_f64().unwrap();
    assert!((f - ground).abs() < 0.002, "estimate {f}, ground-state bound {ground}");
}
