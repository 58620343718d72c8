use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::prob::{ChannelSpec, InputDist};

const H2_01: f64 = 0.4689955935892812;

/// Y = (X1, X2 xor Z), Z ~ Bern(p), metric -(x1^y1 + x2^y2)/2.
pub(crate) fn parallel_channel(p: f64) -> ChannelSpec {
    let d = crate::prob::AlphabetDims::new(2, 2, 4).unwrap();
    let mut w = vec![0.0; 16];
    let mut q = vec![0.0; 16];
    for x1 in 0..2 {
        for x2 in 0..2 {
            for y1 in 0..2 {
                for y2 in 0..2 {
                    let c = d.index(x1, x2, y1 * 2 + y2);
                    w[c] = if y1 != x1 { 0.0 } else if y2 == x2 { 1.0 - p } else { p };
                    q[c] = -0.5 * (((x1 ^ y1) + (x2 ^ y2)) as f64);
                }
            }
        }
    }
    ChannelSpec::new(d, w, q).unwrap()
}

fn normalized(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn random_channel(seed: u64, matched: bool) -> ChannelSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = crate::prob::AlphabetDims::new(2, 2, 2).unwrap();
    let mut w = Vec::new();
    for _ in 0..4 {
        w.extend(normalized(&mut rng, 2));
    }
    if matched {
        ChannelSpec::matched(d, w, -60.0).unwrap()
    } else {
        let q = (0..8).map(|_| rng.random_range(-2.0..0.0)).collect();
        ChannelSpec::new(d, w, q).unwrap()
    }
}

fn random_input(seed: u64, product: bool) -> InputDist {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
    let d = crate::prob::AlphabetDims::new(2, 2, 2).unwrap();
    if product {
        InputDist::product(d, &normalized(&mut rng, 2), &normalized(&mut rng, 2)).unwrap()
    } else {
        InputDist::new(d, normalized(&mut rng, 4)).unwrap()
    }
}

fn curve(kind: RegionKind, ch: &ChannelSpec, input: &InputDist, grid: &[f64]) -> RegionCurve {
    let p = JointPmf::from_input_channel(input, ch).unwrap();
    region_curve(kind, &p, &ch.q, grid, &RegionOptions::default()).unwrap()
}

/// Pointwise agreement; a missing sample matches a value within `tol`.
fn agree(a: &RegionCurve, b: &RegionCurve, tol: f64) {
    for (x, y) in a.samples.iter().zip(&b.samples) {
        let ok = match (x.max_r2, y.max_r2) {
            (Some(u), Some(v)) => (u - v).abs() <= tol,
            (None, None) => true,
            (Some(u), None) | (None, Some(u)) => u <= tol,
        };
        assert!(ok, "{:?} vs {:?} at R1 = {}: {:?} {:?}", a.kind, b.kind, x.r1, x.max_r2, y.max_r2);
    }
}

fn nonincreasing(c: &RegionCurve) {
    let mut last = f64::INFINITY;
    let mut gone = false;
    for s in &c.samples {
        match s.max_r2 {
            Some(v) => {
                assert!(!gone, "{:?} reappears at {}", c.kind, s.r1);
                assert!(v <= last + 1e-4, "{:?} increases at {}", c.kind, s.r1);
                last = v;
            }
            None => gone = true,
        }
    }
}

#[test]
fn parallel_channel_reference_values() {
    let ch = parallel_channel(0.1);
    let u = InputDist::uniform(ch.dims);
    let grid = linspace(2.0, 9);
    let lm = curve(RegionKind::Lm, &ch, &u, &grid);
    assert!((lm.extent - 1.0).abs() < 1e-4);
    for s in lm.samples.iter().filter(|s| s.r1 <= 1.0) {
        assert!((s.max_r2.unwrap() - (1.0 - H2_01)).abs() < 2e-4);
    }
    let bs = curve(RegionKind::BinStar, &ch, &u, &grid);
    assert!((bs.extent - (2.0 - H2_01)).abs() < 1e-4, "{}", bs.extent);
    assert!((bs.max_sum_rate() - (2.0 - H2_01)).abs() < 1e-4);
    let sup = curve(RegionKind::Sup, &ch, &u, &[0.0, 1.0]);
    assert!((sup.samples[1].max_r2.unwrap() - 0.4272060857680875).abs() < 2e-4);
    assert!(!lm.degraded && !bs.degraded && !sup.degraded);
}

#[test]
fn matched_metric_reduces_to_the_classical_region() {
    for seed in 0..2 {
        let ch = random_channel(seed, true);
        let input = random_input(seed, false);
        let grid = linspace(2.0, 11);
        let m = curve(RegionKind::Matched, &ch, &input, &grid);
        agree(&curve(RegionKind::Sup, &ch, &input, &grid), &m, 5e-3);
        agree(&curve(RegionKind::BinStar, &ch, &input, &grid), &m, 5e-3);
    }
}

#[test]
fn alternative_representations_agree() {
    for seed in 0..2 {
        let ch = random_channel(seed + 20, false);
        let input = random_input(seed + 20, false);
        let grid = linspace(2.0, 9);
        let c = |k| curve(k, &ch, &input, &grid);
        agree(&c(RegionKind::Sup), &c(RegionKind::SupTilde), 5e-3);
        agree(&c(RegionKind::Bin), &c(RegionKind::BinTilde), 5e-3);
    }
}

#[test]
fn inclusions_and_monotonicity() {
    for seed in 0..3 {
        let ch = random_channel(seed + 40, false);
        let input = random_input(seed + 40, true);
        let grid = linspace(2.0, 9);
        let c = |k| curve(k, &ch, &input, &grid);
        let lm = c(RegionKind::Lm);
        let bin = c(RegionKind::Bin);
        let bs = c(RegionKind::BinStar);
        let sup = c(RegionKind::Sup);
        for cv in [&lm, &bin, &bs, &sup] {
            nonincreasing(cv);
        }
        for s in lm.samples.iter().chain(&bin.samples) {
            if let Some(v) = s.max_r2 {
                assert!(bs.contains(s.r1, v, 2e-4), "seed {seed} at {}", s.r1);
            }
        }
        let p = JointPmf::from_input_channel(&input, &ch).unwrap();
        let so = SolverOptions::default();
        let pr = Primitives::new(&p, &ch.q, &so);
        let mut dg = false;
        let cond = pr.r2_prime(&mut dg).unwrap()
            >= p.mi(crate::prob::Axes::X2, crate::prob::Axes::Y, crate::prob::Axes::NONE)
                - p.mi(crate::prob::Axes::X1, crate::prob::Axes::X2, crate::prob::Axes::NONE);
        if cond {
            for s in &sup.samples {
                if let Some(v) = s.max_r2 {
                    assert!(bin.contains(s.r1, v, 2e-4), "seed {seed} at {}", s.r1);
                }
            }
        }
    }
}

#[test]
fn rejects_bad_inputs() {
    let ch = random_channel(1, false);
    let p = JointPmf::from_input_channel(&random_input(1, false), &ch).unwrap();
    let o = RegionOptions::default();
    assert!(region_curve(RegionKind::Lm, &p, &ch.q, &[0.0, 1.0], &o).is_err());
    assert!(region_curve(RegionKind::Sup, &p, &ch.q, &[], &o).is_err());
    assert!(region_curve(RegionKind::Sup, &p, &ch.q, &[0.5, 0.2], &o).is_err());
    assert!(rate_primitives(&p, &ch.q, -1.0, 0.0, &o.solver).is_err());
}

#[test]
fn envelope_is_concave_and_closed() {
    let env = upper_envelope(&[(0.0, 1.0), (0.5, 0.9), (1.0, 0.2), (0.6, 0.3), (1.2, 0.0)]);
    assert_eq!(env.first(), Some(&(0.0, 1.0)));
    assert_eq!(env.last(), Some(&(1.2, 0.0)));
    for w in env.windows(3) {
        let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
        let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
        assert!(s2 < s1 + 1e-12);
    }
    assert!(!env.contains(&(0.6, 0.3)));
}

#[test]
fn hull_dominates_each_anchor() {
    let ch = parallel_channel(0.1);
    let grid = linspace(2.0, 9);
    let fam = InputFamily::Dirichlet { count: 3, seed: 4 };
    let opts = HullOptions { refine: 1, refine_draws: 1, ..Default::default() };
    let h = hull_over_inputs(RegionKind::BinStar, &ch, &fam, &grid, &opts).unwrap();
    assert_eq!(h.anchors.len(), 4);
    assert!(h.max_sum_rate() >= 2.0 - H2_01 - 1e-4);
    for a in &h.anchors {
        let c = curve(RegionKind::BinStar, &ch, a, &grid);
        for s in &c.samples {
            if let Some(v) = s.max_r2 {
                assert!(h.contains(s.r1, v, 1e-9));
            }
        }
    }
    let seq = HullOptions { region: RegionOptions { solver: SolverOptions::default().with_starts(2).with_exec(crate::Exec::Sequential), ..Default::default() }, ..opts };
    assert_eq!(hull_over_inputs(RegionKind::BinStar, &ch, &fam, &grid, &seq).unwrap(), h);
}

#[test]
fn single_user_bounds() {
    // Splitting the 4-ary input of the parallel channel.
    let ch = parallel_channel(0.1);
    let su = SingleUserChannel::new(4, 4, ch.w.clone(), ch.q.clone()).unwrap();
    let phi = PhiMap::pairing(2, 2);
    assert_eq!(induced_channel(&su, &phi).unwrap(), ch);
    let b = single_user_bound(&su, &phi, &InputDist::uniform(ch.dims), &SolverOptions::default()).unwrap();
    assert!(b.value >= 2.0 - H2_01 - 1e-6, "{b:?}");

    // With a trivial second input both bounds reduce to the same quantity.
    let base = random_channel(3, false);
    let su = SingleUserChannel::new(4, 2, base.w.clone(), base.q.clone()).unwrap();
    let phi = PhiMap::new(4, 1, vec![0, 1, 2, 3]).unwrap();
    let p1 = [0.1, 0.2, 0.3, 0.4];
    let input = InputDist::product(crate::prob::AlphabetDims::new(4, 1, 2).unwrap(), &p1, &[1.0]).unwrap();
    let a = single_user_bound(&su, &phi, &input, &SolverOptions::default()).unwrap();
    let l = lapidoth_su_bound(&su, &phi, &p1, &[1.0], 9, &RegionOptions::default()).unwrap();
    assert!((a.value - l.value).abs() < 1e-4, "{a:?} {l:?}");
    assert!(PhiMap::new(2, 2, vec![0, 1]).is_err());
    assert!(induced_channel(&su, &PhiMap::new(1, 1, vec![7]).unwrap()).is_err());
}
