use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::expr::*;
use super::*;
use crate::prob::{ChannelSpec, InputDist};

fn dims() -> AlphabetDims {
    AlphabetDims::new(2, 2, 2).unwrap()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn random_instance(seed: u64) -> (JointPmf, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = dims();
    let mut w = Vec::new();
    for _ in 0..4 {
        w.extend(random_vec(&mut rng, 2));
    }
    let q: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..0.0)).collect();
    let ch = ChannelSpec::new(d, w, q.clone()).unwrap();
    let input = InputDist::new(d, random_vec(&mut rng, 4)).unwrap();
    (JointPmf::from_input_channel(&input, &ch).unwrap(), q)
}

fn opts() -> SolverOptions {
    SolverOptions::default().with_starts(4)
}

#[test]
fn constant_metric_product_pmf_gives_zero() {
    let d = dims();
    let ch = ChannelSpec::new(d, vec![0.9, 0.1, 0.2, 0.8, 0.6, 0.4, 0.3, 0.7], vec![0.0; 8]).unwrap();
    let input = InputDist::product(d, &[0.3, 0.7], &[0.6, 0.4]).unwrap();
    let p = JointPmf::from_input_channel(&input, &ch).unwrap();
    let set = FeasibleSet::new(SetKind::L1, p, vec![0.0; 8]).unwrap();
    let r = minimize(&Objective::MutualInfo(I_X1_YX2), &set, &opts()).unwrap();
    assert!(r.is_ok());
    assert!(r.value.abs() < 1e-7, "{}", r.value);
    assert!(set.contains(&r.argmin, 1e-9));
}

#[test]
fn matched_metric_keeps_reference_value() {
    let d = dims();
    let w = vec![0.9, 0.1, 0.3, 0.7, 0.6, 0.4, 0.2, 0.8];
    let ch = ChannelSpec::matched(d, w, -60.0).unwrap();
    let input = InputDist::new(d, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    let p = JointPmf::from_input_channel(&input, &ch).unwrap();
    let set = FeasibleSet::new(SetKind::L2, p.clone(), ch.q.clone()).unwrap();
    let r = minimize(&Objective::MutualInfo(I_X2_Y_GIVEN_X1), &set, &opts()).unwrap();
    let target = I_X2_Y_GIVEN_X1.eval(&p);
    assert!(r.is_ok());
    assert!((r.value - target).abs() < 1e-6, "{} vs {}", r.value, target);
}

#[test]
fn value_never_exceeds_reference_and_matches_literal() {
    for seed in 0..6 {
        let (p, q) = random_instance(seed);
        for (kind, obj) in [
            (SetKind::L0, Objective::SupUser1 { r2: 0.1 }),
            (SetKind::L1, Objective::MutualInfo(I_X1_YX2)),
            (SetKind::L2, Objective::MutualInfo(I_X2_Y_GIVEN_X1)),
            (SetKind::L0, Objective::BinUser2 { r1: 0.05 }),
        ] {
            let set = FeasibleSet::new(kind, p.clone(), q.clone()).unwrap();
            let r = minimize(&obj, &set, &opts()).unwrap();
            assert!(r.value <= obj.eval(&p) + 1e-9);
            assert!((r.value - obj.eval(&r.argmin)).abs() <= 1e-9);
            assert!(set.contains(&r.argmin, 1e-9), "{kind:?} {}", set.violation(&r.argmin));
            assert!(r.certificate_gap < 1e-6, "{kind:?} gap {}", r.certificate_gap);
        }
    }
}

#[test]
fn l0_is_a_relaxation_of_l1_and_l2() {
    for seed in 10..14 {
        let (p, q) = random_instance(seed);
        let obj = Objective::MutualInfo(I_X12_Y);
        let v = |k| minimize(&obj, &FeasibleSet::new(k, p.clone(), q.clone()).unwrap(), &opts()).unwrap().value;
        let l0 = v(SetKind::L0);
        assert!(l0 <= v(SetKind::L1) + 1e-8);
        assert!(l0 <= v(SetKind::L2) + 1e-8);
    }
}

#[test]
fn solver_agrees_with_grid_on_composite_objective() {
    let (p, q) = random_instance(3);
    let set = FeasibleSet::new(SetKind::L0, p, q).unwrap();
    let obj = Objective::SupUser1 { r2: 0.02 };
    let r = minimize(&obj, &set, &opts()).unwrap();
    let g = grid_oracle(
        &obj,
        &set,
        &GridOptions { resolution: 1.0 / 200.0, zoom_levels: 2, ..Default::default() },
    )
    .unwrap();
    assert!(r.value <= g.value + 1e-9);
    assert!(g.value - r.value <= 2e-3, "solver {} grid {}", r.value, g.value);
    assert!(g.value - r.value <= g.error_bound);
}

#[test]
fn grid_constant_objective() {
    let (p, q) = random_instance(4);
    let set = FeasibleSet::new(SetKind::K, p, q).unwrap();
    let g = grid_oracle(&Objective::Constant(0.7), &set, &GridOptions { resolution: 0.05, ..Default::default() })
        .unwrap();
    assert_eq!(g.value, 0.7);
    assert_eq!(g.dim, 4);
}

#[test]
fn infeasible_caps_are_reported() {
    // X1 = Y deterministically with X1 independent of X2: every L0 member
    // with the metric forcing the identity keeps I(X1;Y) = H(X1).
    let d = AlphabetDims::new(2, 1, 2).unwrap();
    let ch = ChannelSpec::matched(d, vec![1.0, 0.0, 0.0, 1.0], -60.0).unwrap();
    let input = InputDist::new(d, vec![0.5, 0.5]).unwrap();
    let p = JointPmf::from_input_channel(&input, &ch).unwrap();
    let set = FeasibleSet::new(SetKind::L0Sup { r1: 0.2 }, p, ch.q.clone()).unwrap();
    let r = minimize(&Objective::MutualInfo(I_X12_Y), &set, &opts()).unwrap();
    assert_eq!(r.status, OptStatus::Infeasible);
    assert_eq!(r.value, f64::INFINITY);
    let g = grid_oracle(&Objective::MutualInfo(I_X12_Y), &set, &GridOptions { resolution: 0.01, ..Default::default() })
        .unwrap();
    assert_eq!(g.status, OptStatus::Infeasible);
}

#[test]
fn deterministic_across_exec_policies() {
    let (p, q) = random_instance(8);
    let set = FeasibleSet::new(SetKind::L0, p, q).unwrap();
    let obj = Objective::BinUser2 { r1: 0.1 };
    let a = minimize(&obj, &set, &opts().with_exec(Exec::Sequential)).unwrap();
    let b = minimize(&obj, &set, &opts().with_exec(Exec::Parallel)).unwrap();
    let c = minimize(&obj, &set, &opts().with_exec(Exec::Parallel)).unwrap();
    assert_eq!(a, b);
    assert_eq!(b, c);
}

#[test]
fn projection_examples() {
    let (p, q) = random_instance(5);
    let set = FeasibleSet::new(SetKind::L2, p.clone(), q.clone()).unwrap();
    let same = project_to_set(&p, &set).unwrap();
    assert_eq!(same.pmf, p);
    let twice = project_to_set(&same.pmf, &set).unwrap();
    assert_eq!(twice.pmf, same.pmf);

    let (f, _) = random_instance(77);
    let kset = FeasibleSet::new(SetKind::K, p.clone(), q.clone()).unwrap();
    let g = project_to_set(&f, &kset).unwrap().pmf;
    let a = g.marginal(Axes::X1X2);
    let b = p.marginal(Axes::X1X2);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-15);
    }
    // Conditionals of f are kept.
    for c in 0..8 {
        let i = c / 2;
        let fc = f.probs()[c] / f.marginal(Axes::X1X2)[i];
        let gc = g.probs()[c] / a[i];
        assert!((fc - gc).abs() < 1e-12);
    }

    let r = project_to_set(&f, &set).unwrap();
    assert_eq!(r.status, OptStatus::Converged);
    assert!(set.contains(&r.pmf, 1e-9), "{}", set.violation(&r.pmf));
    let r2 = project_to_set(&r.pmf, &set).unwrap();
    assert_eq!(r2.pmf, r.pmf);
}

#[test]
fn nested_zero_above_threshold_and_monotone() {
    let (p, q) = random_instance(6);
    let set = FeasibleSet::new(SetKind::L2, p.clone(), q.clone()).unwrap();
    let r2p = minimize(&Objective::MutualInfo(I_X2_Y_GIVEN_X1), &set, &opts()).unwrap().value;
    let e = |r2: f64| {
        minimize_nested(&p, &q, InnerSet::L2, &Objective::ExpUser2 { r2 }, &opts()).unwrap()
    };
    let above = e(r2p + 1e-3);
    assert!(above.value.abs() < 1e-7, "{}", above.value);
    let mut last = f64::INFINITY;
    for k in 0..6 {
        let r = e(k as f64 * r2p / 5.0);
        assert!(r.is_ok());
        assert!(r.value <= last + 1e-8);
        last = r.value;
    }
}

#[test]
fn nested_matches_grid_on_noiseless_channel() {
    let d = dims();
    // Y = X1 xor X2, matched metric.
    let w = vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0];
    let ch = ChannelSpec::matched(d, w, -40.0).unwrap();
    let input = InputDist::new(d, vec![0.25; 4]).unwrap();
    let p = JointPmf::from_input_channel(&input, &ch).unwrap();
    let obj = Objective::ExpUser2 { r2: 0.0 };
    let r = minimize_nested(&p, &ch.q, InnerSet::L2, &obj, &opts()).unwrap();
    assert!(r.value > 0.1, "{}", r.value);
    let g = grid_oracle_nested(
        &p,
        &ch.q,
        InnerSet::L2,
        &obj,
        &GridOptions { resolution: 0.05, max_dim: 8, zoom_levels: 3, max_points: 200_000, ..Default::default() },
    )
    .unwrap();
    assert!(r.value <= g.value + 1e-9, "{} {}", r.value, g.value);
    assert!(g.value - r.value <= 2e-3, "solver {} grid {}", r.value, g.value);
}

#[test]
fn random_starts_satisfy_the_equalities() {
    let (p, q) = random_instance(9);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for kind in [SetKind::L0, SetKind::L1, SetKind::D0 { r1: 0.1, r2: 0.1 }] {
        let set = FeasibleSet::new(kind, p.clone(), q.clone()).unwrap();
        let prog = single_program(&set, Objective::MutualInfo(I_X12_Y).tree(), None).unwrap();
        for _ in 0..5 {
            let v = prog.random_start(&mut rng).unwrap();
            assert!(prog.equality_residual(&v) < 1e-12);
            assert!(v.iter().all(|&x| x > 0.0));
        }
    }
}
