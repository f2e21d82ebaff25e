use dualis_core::ais::{ais_estimate, level_params, AnnealingLadder};
use dualis_core::dual::dualize;
use dualis_core::gf::{build_preset, PartitionScheme, Preset};
use dualis_core::lattice::{build_lattice, Boundary, Family, LatticeSpec, ModelParams};
use dualis_core::primal::enumerate_z;
use dualis_core::rng::ChainSeed;
use dualis_core::sampler::{is_estimate, AuxKind};
use dualis_core::Error;

/// Instance whose sampled bonds get `j_a` and determined bonds `j_b`.
fn split_instance(
    r: usize,
    c: usize,
    fam: Family,
    j_a: f64,
    j_b: f64,
    h: f64,
) -> (LatticeSpec, ModelParams, PartitionScheme) {
    let l = build_lattice(r, c, Boundary::Free).unwrap();
    let placeholder = ModelParams::uniform(&l, fam, 1.0, h);
    let s = build_preset(&dualize(&l, &placeholder).unwrap(), Preset::Alg2Style).unwrap();
    let js = (0..l.n_bonds()).map(|b| if s.in_a[b] { j_a } else { j_b }).collect();
    let p = ModelParams::new(fam, js, vec![h; l.n_sites()]);
    let s = s.rebind(&dualize(&l, &p).unwrap()).unwrap();
    (l, p, s)
}

#[test]
fn ising_matches_enumeration() {
    let (l, p, s) = split_instance(3, 3, Family::Ising, 0.3, 0.9, -0.4);
    let exact = enumerate_z(&l, &p).unwrap().log_z;
    let ladder = AnnealingLadder::new(vec![1.0, 1.5, 2.25, 3.4], 10).unwrap();
    let out = ais_estimate(&l, &p, &s, &ladder, 4000, ChainSeed::new(5, 0)).unwrap();
    let est = out.trace.log_z().unwrap();
    let se = out.trace.std_err().unwrap();
    assert!((est - exact).abs() < 4.0 * se, "{est} vs {exact} (se {se})");
    assert_eq!(out.level_variance.len(), 4);
}

#[test]
fn potts_matches_enumeration() {
    let (l, p, s) = split_instance(2, 3, Family::Potts { q: 3 }, 0.4, 1.3, 0.5);
    let exact = enumerate_z(&l, &p).unwrap().log_z;
    let ladder = AnnealingLadder::default_for(1.3, 5).unwrap();
    let out = ais_estimate(&l, &p, &s, &ladder, 4000, ChainSeed::new(6, 0)).unwrap();
    let est = out.trace.log_z().unwrap();
    let se = out.trace.std_err().unwrap();
    assert!((est - exact).abs() < 4.0 * se, "{est} vs {exact} (se {se})");
}

#[test]
fn flat_ladder_is_plain_importance_sampling() {
    let (l, p, s) = split_instance(3, 3, Family::Ising, 0.3, 0.9, -0.4);
    let ladder = AnnealingLadder::new(vec![1.0, 1.0], 0).unwrap();
    let ais = ais_estimate(&l, &p, &s, &ladder, 500, ChainSeed::new(9, 2)).unwrap();
    let d = dualize(&l, &p).unwrap();
    let is = is_estimate(&d, &s, AuxKind::Q2, 500, ChainSeed::new(9, 2)).unwrap();
    assert!((ais.trace.log_z().unwrap() - is.log_z().unwrap()).abs() < 1e-12);
}

#[test]
fn level_params_raise_only_determined_bonds() {
    let (_, p, s) = split_instance(3, 3, Family::Ising, 0.3, 0.9, -0.4);
    let ladder = AnnealingLadder::new(vec![1.0, 2.0], 1).unwrap();
    let lv = level_params(&p, &s, &ladder);
    assert_eq!(lv[0], p);
    for (b, (&j0, &j1)) in p.couplings.iter().zip(&lv[1].couplings).enumerate() {
        let want = if s.in_a[b] { j0 } else { j0 * j0 };
        assert!((j1 - want).abs() < 1e-15);
    }
    assert_eq!(lv[1].fields, p.fields);
}

#[test]
fn variance_limit_reports_level() {
    let (l, p, s) = split_instance(3, 3, Family::Ising, 0.3, 0.9, -0.4);
    let ladder = AnnealingLadder::new(vec![1.0, 3.0], 2).unwrap().with_variance_limit(1e-6);
    match ais_estimate(&l, &p, &s, &ladder, 200, ChainSeed::new(1, 0)) {
        Err(Error::LadderTooShort { variance, limit, .. }) => assert!(variance > limit),
        other => panic!("expected LadderTooShort, got {other:?}"),
    }
}

#[test]
fn zero_coupling_with_sweeps_is_refused() {
    let (l, p, s) = split_instance(2, 2, Family::Ising, 0.0, 1.5, -0.2);
    let ladder = AnnealingLadder::new(vec![1.0, 2.0], 1).unwrap();
    assert!(matches!(ais_estimate(&l, &p, &s, &ladder, 10, ChainSeed::new(1, 0)), Err(Error::ZeroWeightSupport)));
}

#[test]
fn zero_sweeps_stays_unbiased() {
    let (l, p, s) = split_instance(3, 3, Family::Ising, 0.3, 0.9, -0.4);
    let exact = enumerate_z(&l, &p).unwrap().log_z;
    let ladder = AnnealingLadder::new(vec![1.0, 1.5, 2.25, 3.4], 0).unwrap();
    let out = ais_estimate(&l, &p, &s, &ladder, 20_000, ChainSeed::new(12, 0)).unwrap();
    let est = out.trace.log_z().unwrap();
    let se = out.trace.std_err().unwrap();
    assert!((est - exact).abs() < 3.0 * se, "{est} vs {exact} (se {se})");
}

#[test]
fn doubling_levels_is_consistent() {
    let (l, p, s) = split_instance(3, 3, Family::Ising, 0.3, 1.2, -0.4);
    let coarse = AnnealingLadder::default_for(1.2, 5).unwrap();
    let v = coarse.levels() as i32;
    let top = *coarse.exponents.last().unwrap();
    let fine = AnnealingLadder::new((0..=2 * v).map(|k| top.powf(k as f64 / (2 * v) as f64)).collect(), 5).unwrap();
    let a = ais_estimate(&l, &p, &s, &coarse, 4000, ChainSeed::new(13, 0)).unwrap().trace;
    let b = ais_estimate(&l, &p, &s, &fine, 4000, ChainSeed::new(13, 1)).unwrap().trace;
    let (x, y) = (a.log_z().unwrap(), b.log_z().unwrap());
    let se = a.std_err().unwrap().hypot(b.std_err().unwrap());
    assert!((x - y).abs() < 3.0 * se, "{x} vs {y} (se {se})");
}
