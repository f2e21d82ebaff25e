use dualis_core::dual::{duality_constant, dualize, tanh_tables, DualGraph};
use dualis_core::gf::{build_preset, PartitionScheme, Preset};
use dualis_core::lattice::{build_lattice, Boundary, Family, LatticeSpec, ModelParams};
use dualis_core::primal::enumerate_z;
use dualis_core::rng::chain_rng;
use dualis_core::sampler::{
    draw_potts, dual_gibbs_estimate, field_sum_violation, is_estimate, is_estimate_with, uniform_dual_estimate, AuxKind,
    AuxiliaryDistribution, ConfigSampler, DualGibbsChain, Q1Normalizer,
};
use dualis_core::stats::{log_sum_exp, EstimateTrace};

fn within(trace: &EstimateTrace, exact: f64, k: f64) {
    let est = trace.log_z().unwrap();
    let se = trace.std_err().unwrap();
    assert!((est - exact).abs() < k * se + 1e-12, "{}: estimate {est} exact {exact} se {se}", trace.meta.sampler);
}

/// Sum of the auxiliary weight over every admissible sampled assignment.
fn brute_log_zq(dual: &DualGraph, s: &PartitionScheme, aux: &AuxiliaryDistribution) -> f64 {
    let q = dual.q as usize;
    let mut terms = Vec::new();
    for code in 0..q.pow(s.a_vars.len() as u32) {
        let mut x = vec![0u8; dual.n_vars()];
        for (i, &v) in s.a_vars.iter().enumerate() {
            x[v] = ((code / q.pow(i as u32)) % q) as u8;
        }
        if s.complete(&mut x).is_ok() {
            terms.push(aux.log_psi(dual, &x));
        }
    }
    log_sum_exp(&terms)
}

fn instance(r: usize, c: usize, bc: Boundary, fam: Family, j: f64, h: f64) -> (LatticeSpec, ModelParams) {
    let l = build_lattice(r, c, bc).unwrap();
    let js: Vec<f64> = (0..l.n_bonds()).map(|b| j * (1.0 + 0.1 * (b % 3) as f64)).collect();
    let hs: Vec<f64> = (0..l.n_sites()).map(|m| h * (1.0 - 0.15 * (m % 4) as f64)).collect();
    (l, ModelParams::new(fam, js, hs))
}

#[test]
fn q1_normalizer_is_the_even_restricted_sum() {
    for (r, c) in [(2, 2), (2, 3), (3, 3)] {
        let (l, p) = instance(r, c, Boundary::Free, Family::Ising, 0.4, -0.6);
        let d = dualize(&l, &p).unwrap();
        let s = build_preset(&d, Preset::Alg1Style).unwrap();
        let aux = AuxiliaryDistribution::new(&d, &s, AuxKind::Q1).unwrap();
        let brute = brute_log_zq(&d, &s, &aux);
        assert!((aux.log_zq - brute).abs() < 1e-10, "{} vs {}", aux.log_zq, brute);

        let nb_a = s.report.bonds_a;
        let j_sum: f64 = p.couplings.iter().enumerate().filter(|(b, _)| s.in_a[*b]).map(|(_, j)| j).sum();
        let h_sum: f64 = p.fields.iter().map(|h| -h.abs()).sum();
        let closed = (l.n_sites() + 2 * nb_a) as f64 * 2f64.ln() + j_sum + h_sum.cosh().ln();
        assert!((aux.log_zq - closed).abs() < 1e-10);

        let un = AuxiliaryDistribution::with_normalizer(&d, &s, AuxKind::Q1, Q1Normalizer::Unrestricted).unwrap();
        let ratio = un.log_zq - aux.log_zq;
        assert!((ratio - (2.0 / (1.0 + (2.0 * h_sum).exp())).ln()).abs() < 1e-10);
    }
}

#[test]
fn q2_normalizer_closed_form() {
    let (l, p) = instance(3, 3, Boundary::Free, Family::Ising, 0.4, 0.6);
    let d = dualize(&l, &p).unwrap();
    let s = build_preset(&d, Preset::Alg2Style).unwrap();
    let aux = AuxiliaryDistribution::new(&d, &s, AuxKind::Q2).unwrap();
    let ex = s.excluded_field_var.unwrap();
    let mut closed = 0.0;
    for b in 0..l.n_bonds() {
        if s.in_a[b] {
            closed += (4.0f64).ln() + p.couplings[b];
        }
    }
    for m in 0..l.n_sites() {
        if m != ex {
            closed += 2f64.ln() + p.fields[m].abs();
        }
    }
    assert!((aux.log_zq - closed).abs() < 1e-10);
    assert!((aux.log_zq - brute_log_zq(&d, &s, &aux)).abs() < 1e-10);
}

#[test]
fn alg1_and_alg2_match_enumeration() {
    let (l, p) = instance(2, 2, Boundary::Free, Family::Ising, 0.5, -0.3);
    let exact = enumerate_z(&l, &p).unwrap().log_z;
    let d = dualize(&l, &p).unwrap();
    let s1 = build_preset(&d, Preset::Alg1Style).unwrap();
    let s2 = build_preset(&d, Preset::Alg2Style).unwrap();
    let t1 = is_estimate(&d, &s1, AuxKind::Q1, 100_000, 1).unwrap();
    let t2 = is_estimate(&d, &s2, AuxKind::Q2, 100_000, 2).unwrap();
    within(&t1, exact, 3.0);
    within(&t2, exact, 3.0);
    assert!(t1.meta.rejections > 0);
    assert_eq!(t2.meta.rejections, 0);

    let (l, p) = instance(3, 3, Boundary::Periodic, Family::Ising, 0.6, 0.2);
    let exact = enumerate_z(&l, &p).unwrap().log_z;
    let d = tanh_tables(&dualize(&l, &p).unwrap()).unwrap();
    let s2 = build_preset(&d, Preset::Checker { exclude_field: true }).unwrap();
    within(&is_estimate(&d, &s2, AuxKind::Q2, 100_000, 3).unwrap(), exact, 3.0);
}

#[test]
fn unrestricted_normalizer_is_biased_by_the_acceptance_factor() {
    let (l, p) = instance(2, 2, Boundary::Free, Family::Ising, 0.5, -0.3);
    let exact = enumerate_z(&l, &p).unwrap().log_z;
    let d = dualize(&l, &p).unwrap();
    let s = build_preset(&d, Preset::Alg1Style).unwrap();
    let aux = AuxiliaryDistribution::with_normalizer(&d, &s, AuxKind::Q1, Q1Normalizer::Unrestricted).unwrap();
    let t = is_estimate_with(&d, &s, &aux, 100_000, 4).unwrap();
    let h_sum: f64 = p.fields.iter().map(|h| -h.abs()).sum();
    let bias = (2.0 / (1.0 + (2.0 * h_sum).exp())).ln();
    within(&t, exact + bias, 3.0);
}

#[test]
fn potts_sampler_matches_enumeration() {
    for (q, bc) in [(3u8, Boundary::Free), (3, Boundary::Periodic), (4, Boundary::Free)] {
        let (l, p) = instance(2, 3, bc, Family::Potts { q }, 0.8, 0.5);
        let exact = enumerate_z(&l, &p).unwrap().log_z;
        let d = dualize(&l, &p).unwrap();
        let s = build_preset(&d, Preset::Alg2Style).unwrap();
        within(&is_estimate(&d, &s, AuxKind::PottsQ, 100_000, 5).unwrap(), exact, 3.0);
        let mut rng = chain_rng(9, 0);
        for _ in 0..1000 {
            let (y, _) = draw_potts(&d, &s, &mut rng).unwrap();
            assert_eq!(y.iter().map(|&v| v as u32).sum::<u32>() % q as u32, 0);
        }
    }
}

#[test]
fn samplers_refuse_mismatched_partitions() {
    let (l, p) = instance(2, 2, Boundary::Free, Family::Ising, 0.5, -0.3);
    let d = dualize(&l, &p).unwrap();
    let s1 = build_preset(&d, Preset::Alg1Style).unwrap();
    assert!(AuxiliaryDistribution::new(&d, &s1, AuxKind::Q2).is_err());
    assert!(AuxiliaryDistribution::new(&d, &s1, AuxKind::PottsQ).is_err());
    let mixed = ModelParams::new(Family::Ising, vec![0.5; 4], vec![0.3, -0.2, 0.1, 0.1]);
    let d = dualize(&l, &mixed).unwrap();
    let s2 = build_preset(&d, Preset::Alg2Style).unwrap();
    assert!(AuxiliaryDistribution::new(&d, &s2, AuxKind::Q2).is_err());
}

#[test]
fn uniform_dual_matches_enumeration() {
    for (fam, h, preset) in [
        (Family::Ising, 0.0, Preset::Alg1Style),
        (Family::Ising, -0.4, Preset::Alg1Style),
        (Family::Ising, 0.4, Preset::Alg2Style),
        (Family::Potts { q: 3 }, 0.3, Preset::Alg1Style),
    ] {
        let (l, p) = instance(2, 2, Boundary::Periodic, fam, 0.5, h);
        let exact = enumerate_z(&l, &p).unwrap().log_z;
        let d = dualize(&l, &p).unwrap();
        let s = build_preset(&d, preset).unwrap();
        within(&uniform_dual_estimate(&d, &s, 100_000, 6).unwrap(), exact, 3.0);
    }
}

/// Weak Potts couplings make the uniform weights heavy tailed, so the
/// expectation is checked by summing over every free assignment instead.
#[test]
fn uniform_dual_expectation_is_exact() {
    let (l, p) = instance(2, 3, Boundary::Periodic, Family::Potts { q: 3 }, 0.2, 0.15);
    let exact = enumerate_z(&l, &p).unwrap().log_z;
    let d = dualize(&l, &p).unwrap();
    let s = build_preset(&d, Preset::Alg2Style).unwrap();
    let fp = s.free_parametrization(&d).unwrap();
    let dim = fp.dimension();
    let mut x = vec![0u8; d.n_vars()];
    let mut xf = vec![0u8; dim];
    let mut terms = Vec::new();
    for code in 0..3usize.pow(dim as u32) {
        for (i, v) in xf.iter_mut().enumerate() {
            *v = ((code / 3usize.pow(i as u32)) % 3) as u8;
        }
        fp.assemble(&xf, &mut x, &s.completion).unwrap();
        terms.push(d.log_product(&x) + d.log_scale);
    }
    assert_eq!(dim, 12);
    assert!((log_sum_exp(&terms) - duality_constant(&d) - exact).abs() < 1e-10);
}

#[test]
fn degenerate_empty_lattice_is_exact() {
    let l = build_lattice(1, 1, Boundary::Free).unwrap();
    let p = ModelParams::uniform(&l, Family::Ising, 0.0, 0.0);
    let d = dualize(&l, &p).unwrap();
    let s = PartitionScheme::custom(&d, vec![]).unwrap();
    let t = is_estimate(&d, &s, AuxKind::Q2, 10, 0).unwrap();
    assert_eq!(t.log_z().unwrap(), 2f64.ln());
    assert_eq!(t.std_err().unwrap(), 0.0);
    assert_eq!(duality_constant(&d), -(2f64.ln()));
}

#[test]
fn dual_gibbs_stationary_law() {
    let (l, p) = instance(2, 2, Boundary::Periodic, Family::Ising, 0.5, -0.2);
    let d = dualize(&l, &p).unwrap();
    let s = build_preset(&d, Preset::Alg1Style).unwrap();
    let fp = s.free_parametrization(&d).unwrap();
    let dim = fp.dimension();
    let mut weights = Vec::new();
    let mut x = vec![0u8; d.n_vars()];
    for code in 0..(1usize << dim) {
        let xf: Vec<u8> = (0..dim).map(|i| ((code >> i) & 1) as u8).collect();
        fp.assemble(&xf, &mut x, &s.completion).unwrap();
        weights.push(d.log_product(&x));
    }
    let lz = log_sum_exp(&weights);
    let probs: Vec<f64> = weights.iter().map(|w| (w - lz).exp()).collect();

    let mut chain = DualGibbsChain::new(&d, chain_rng(7, 0));
    let mut counts = vec![0u64; 1 << dim];
    let n = 200_000;
    for _ in 0..n {
        chain.sweep(&d, &fp);
        let code: usize = fp.free.iter().enumerate().map(|(i, &v)| (chain.x[v] as usize) << i).sum();
        counts[code] += 1;
    }
    for (c, p) in counts.iter().zip(&probs) {
        let se = (p * (1.0 - p) / n as f64).sqrt() * 3.0;
        assert!((*c as f64 / n as f64 - p).abs() < 4.0 * se + 1e-4, "{c} {p}");
    }

    let exact = enumerate_z(&l, &p).unwrap().log_z;
    let t = dual_gibbs_estimate(&d, &s, 100_000, 100, 8).unwrap();
    assert!((t.log_z().unwrap() - exact).abs() < 0.02);
}

#[test]
fn dual_gibbs_needs_positive_tables() {
    let (l, p) = instance(2, 2, Boundary::Periodic, Family::Ising, 0.5, 0.0);
    let mut p = p;
    p.fields[0] = 0.3;
    let d = dualize(&l, &p).unwrap();
    let s = build_preset(&d, Preset::Alg1Style).unwrap();
    assert!(dual_gibbs_estimate(&d, &s, 10, 0, 0).is_err());
}

#[test]
fn completed_configs_satisfy_field_constraints() {
    let cases = [
        (Family::Ising, Preset::Alg1Style, AuxKind::Q1),
        (Family::Ising, Preset::Alg2Style, AuxKind::Q2),
        (Family::Potts { q: 3 }, Preset::Alg2Style, AuxKind::PottsQ),
        (Family::Potts { q: 4 }, Preset::Checker { exclude_field: true }, AuxKind::PottsQ),
    ];
    for (fam, preset, kind) in cases {
        let (l, p) = instance(4, 4, Boundary::Periodic, fam, 0.7, 0.5);
        let d = dualize(&l, &p).unwrap();
        let s = build_preset(&d, preset).unwrap();
        let aux = AuxiliaryDistribution::new(&d, &s, kind).unwrap();
        let mut cs = ConfigSampler::new(&d, &s, &aux);
        let mut rng = chain_rng(11, 0);
        let mut x = vec![0u8; d.n_vars()];
        for _ in 0..20_000 {
            cs.draw(&mut rng, &mut x).unwrap();
            assert!(!field_sum_violation(&d, &x));
            assert!(d.eval_flat(&x).unwrap().is_valid());
        }
    }
}
