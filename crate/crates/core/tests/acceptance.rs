//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test --test acceptance -- 2 5`.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cogmac::exponents::{exponent_e1_bin, exponent_e1_sup, exponent_e0b, exponent_e2};
use cogmac::io::r1_limit;
use cogmac::opt::{grid_oracle_nested, GridOptions, InnerSet, Objective, SolverOptions};
use cogmac::prob::{AlphabetDims, Axes, ChannelSpec, InputDist, JointPmf};
use cogmac::regions::{
    hull_over_inputs, linspace, rate_primitives, region_curve, HullOptions, InputFamily, RegionCurve, RegionKind, RegionOptions,
};
use cogmac::sim::{exact_pe1_sup, exact_pe2_sup, simulate, EnsembleConfig, EnsembleScheme, SimOptions, EXACT_CAP};

type Check = Result<String, String>;

const H2_01: f64 = 0.4689955935892812;

fn h2(p: f64) -> f64 {
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

fn normalized(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Random 2x2x2 channel; the metric is `log2 W` or uniform on `[-2, 0]`.
fn channel(seed: u64, matched: bool) -> ChannelSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = AlphabetDims::new(2, 2, 2).unwrap();
    let w: Vec<f64> = (0..4).flat_map(|_| normalized(&mut rng, 2)).collect();
    if matched {
        ChannelSpec::matched(d, w, -40.0).unwrap()
    } else {
        let q = (0..8).map(|_| rng.random_range(-2.0..0.0)).collect();
        ChannelSpec::new(d, w, q).unwrap()
    }
}

fn input(seed: u64, product: bool) -> InputDist {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    let d = AlphabetDims::new(2, 2, 2).unwrap();
    if product {
        InputDist::product(d, &normalized(&mut rng, 2), &normalized(&mut rng, 2)).unwrap()
    } else {
        InputDist::new(d, normalized(&mut rng, 4)).unwrap()
    }
}

fn parallel_channel(p: f64) -> ChannelSpec {
    let d = AlphabetDims::new(2, 2, 4).unwrap();
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

fn curve(kind: RegionKind, ch: &ChannelSpec, inp: &InputDist, grid: &[f64]) -> RegionCurve {
    let p = JointPmf::from_input_channel(inp, ch).unwrap();
    region_curve(kind, &p, &ch.q, grid, &RegionOptions::default()).unwrap()
}

/// 11 points covering `[0, extent]` of `kind` plus one point beyond it.
fn grid_for(kind: RegionKind, ch: &ChannelSpec, inp: &InputDist) -> Vec<f64> {
    let e = curve(kind, ch, inp, &[0.0]).extent.max(0.05);
    let mut g = linspace(e, 11);
    g.push(1.1 * e);
    g
}

/// Largest disagreement between two sampled boundaries and where it
/// occurs; a missing sample counts as `0` rate.
fn max_gap(a: &RegionCurve, b: &RegionCurve) -> (f64, f64) {
    a.samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| ((x.max_r2.unwrap_or(0.0) - y.max_r2.unwrap_or(0.0)).abs(), x.r1))
        .fold((0.0, f64::NAN), |acc, v| if v.0 > acc.0 { v } else { acc })
}

fn criterion_1() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let ch = channel(1000 + seed, true);
        let inp = input(1000 + seed, false);
        let grid = grid_for(RegionKind::Matched, &ch, &inp);
        let m = curve(RegionKind::Matched, &ch, &inp, &grid);
        for k in [RegionKind::Sup, RegionKind::BinStar] {
            worst = worst.max(max_gap(&curve(k, &ch, &inp, &grid), &m).0);
        }
    }
    let msg = format!("max boundary gap {worst:.2e} over 10 channels, 12 points each");
    if worst <= 5e-3 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_2() -> Check {
    let ch = parallel_channel(0.1);
    let u = InputDist::uniform(ch.dims);
    let corner = 1.0 - h2(0.1);
    let lm = curve(RegionKind::Lm, &ch, &u, &[0.0, 1.0]);
    let lm_r2 = lm.samples[1].max_r2.unwrap_or(f64::NAN);
    let lm_ok = (lm.extent - 1.0).abs() <= 5e-3 && (lm_r2 - corner).abs() <= 5e-3;

    let grid = linspace(2.0, 17);
    let hull = hull_over_inputs(RegionKind::BinStar, &ch, &InputFamily::Dirichlet { count: 8, seed: 1 }, &grid, &HullOptions::default())
        .map_err(|e| e.to_string())?;
    let sum = hull.max_sum_rate();
    let hull_ok = (sum - (1.0 + corner)).abs() <= 5e-3 && hull.contains(1.0, corner, 5e-3) && hull.contains(0.0, corner, 5e-3);

    let sup = curve(RegionKind::Sup, &ch, &u, &[0.0, 1.0]).samples[1].max_r2.unwrap_or(f64::NAN);
    let sup_ok = (sup - 0.42710).abs() <= 5e-3 && corner - sup >= 0.09;
    let msg = format!(
        "LM corner ({:.5}, {lm_r2:.5}); hull sum rate {sum:.5}; sup R2 at R1=1 {sup:.5} (gap {:.5}); h2(0.1) = {H2_01:.6}",
        lm.extent,
        corner - sup
    );
    if lm_ok && hull_ok && sup_ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_3() -> Check {
    let mut worst = (0.0, f64::NAN, 0, "");
    for seed in 0..10 {
        let ch = channel(2000 + seed, false);
        let inp = input(2000 + seed, false);
        for (a, b) in [(RegionKind::Sup, RegionKind::SupTilde), (RegionKind::Bin, RegionKind::BinTilde)] {
            let grid = grid_for(a, &ch, &inp);
            let (g, r1) = max_gap(&curve(a, &ch, &inp, &grid), &curve(b, &ch, &inp, &grid));
            if g > worst.0 {
                worst = (g, r1, seed, a.name());
            }
        }
    }
    let msg = format!("max gap {:.2e} over 10 instances (seed {}, {} at R1 = {:.4})", worst.0, worst.2, worst.3, worst.1);
    let worst = worst.0;
    if worst <= 5e-3 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_4() -> Check {
    let mut lm_bad = Vec::new();
    let mut sup_bad = Vec::new();
    let (mut lm_pts, mut sup_pts, mut qualifying, mut below) = (0, 0, 0, 0);
    for seed in 0..20 {
        let ch = channel(3000 + seed, false);
        let prod = input(3000 + seed, true);
        let grid = grid_for(RegionKind::Lm, &ch, &prod);
        let lm = curve(RegionKind::Lm, &ch, &prod, &grid);
        let hull = hull_over_inputs(RegionKind::Bin, &ch, &InputFamily::List { inputs: vec![prod.clone()] }, &grid, &HullOptions::default())
            .map_err(|e| e.to_string())?;
        for s in &lm.samples {
            if let Some(v) = s.max_r2 {
                lm_pts += 1;
                if !hull.contains(s.r1, v, 5e-3) {
                    lm_bad.push(format!("seed {seed} ({:.4}, {v:.4})", s.r1));
                }
            }
        }

        let inp = input(3000 + seed, false);
        let p = JointPmf::from_input_channel(&inp, &ch).unwrap();
        let prim = rate_primitives(&p, &ch.q, 0.0, 0.0, &SolverOptions::default()).map_err(|e| e.to_string())?;
        let t = p.mutual_info(Axes::X2, Axes::Y, Axes::NONE).unwrap() - p.mutual_info(Axes::X1, Axes::X2, Axes::NONE).unwrap();
        if prim.r2_prime < t {
            continue;
        }
        qualifying += 1;
        let grid = grid_for(RegionKind::Sup, &ch, &inp);
        let sup = curve(RegionKind::Sup, &ch, &inp, &grid);
        let bin = curve(RegionKind::Bin, &ch, &inp, &grid);
        for s in &sup.samples {
            if let Some(v) = s.max_r2 {
                sup_pts += 1;
                if !bin.contains(s.r1, v, 5e-3) {
                    if v < t {
                        below += 1;
                    }
                    sup_bad.push(format!(
                        "seed {seed} ({:.4}, {v:.4}) outside bin (R1' {:.4}, I(X2;Y)-I(X1;X2) {t:.4})",
                        s.r1, prim.r1_prime
                    ));
                }
            }
        }
    }
    let msg = format!(
        "LM in bin hull: {} violations in {lm_pts} points; sup in bin: {} violations in {sup_pts} points over {qualifying}/20 qualifying instances, {below} of them with R2 below I(X2;Y)-I(X1;X2)",
        lm_bad.len(),
        sup_bad.len()
    );
    if lm_bad.is_empty() && sup_bad.is_empty() && qualifying > 0 {
        Ok(msg)
    } else {
        Err(format!("{msg}: {}", lm_bad.iter().chain(&sup_bad).cloned().collect::<Vec<_>>().join("; ")))
    }
}

fn criterion_5() -> Check {
    let g = GridOptions { resolution: 0.25, max_dim: 8, zoom_levels: 3, max_points: 500_000, ..Default::default() };
    let so = SolverOptions::default();
    let mut worst_excess = f64::NEG_INFINITY;
    let mut max_gap: f64 = 0.0;
    let mut worst = String::new();
    let mut count = 0;
    let mut failures = Vec::new();
    for seed in 0..20u64 {
        let ch = channel(4000 + seed, false);
        let p = JointPmf::from_input_channel(&input(4000 + seed, false), &ch).unwrap();
        let prim = rate_primitives(&p, &ch.q, 0.0, 0.0, &so).map_err(|e| e.to_string())?;
        let i12 = p.mutual_info(Axes::X1, Axes::X2, Axes::NONE).unwrap();
        for k in 0..5 {
            let f = 0.2 * k as f64;
            let (r1, r2) = (f * prim.r1_prime.max(0.0), f * prim.r2_prime.max(0.0));
            let cases = [
                (InnerSet::L2, Objective::ExpUser2 { r2 }, exponent_e2(&p, &ch.q, r2, &so)),
                (InnerSet::L0, Objective::ExpSupUser1 { r1, r2 }, exponent_e1_sup(&p, &ch.q, r1, r2, &so)),
                (InnerSet::L1, Objective::ExpBinUser1 { r1 }, exponent_e1_bin(&p, &ch.q, r1, &so)),
                (InnerSet::L0, Objective::ExpBinJoint { r1, r2, i12 }, exponent_e0b(&p, &ch.q, r1, r2, &so)),
            ];
            for (inner, obj, c) in cases {
                let c = c.map_err(|e| e.to_string())?;
                let gr = grid_oracle_nested(&p, &ch.q, inner, &obj, &g).map_err(|e| e.to_string())?;
                let diff = (c.value - gr.value).abs();
                count += 1;
                if diff > max_gap {
                    max_gap = diff;
                    worst = format!("seed {seed} point {k} {obj:?}");
                }
                worst_excess = worst_excess.max(diff - gr.error_bound);
                if diff > gr.error_bound + 1e-6 || c.value > gr.value + 1e-6 {
                    failures.push(format!("seed {seed} point {k} {inner:?}: solver {} grid {}", c.value, gr.value));
                }
            }
        }
    }
    let msg = format!("{count} comparisons, max |solver - grid| {max_gap:.2e} ({worst}), max excess over bound {worst_excess:.2e}");
    if failures.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; {}", failures.join("; ")))
    }
}

// Full enumeration of the superposition ensemble for criterion 6.

fn sequences(k: usize, n: usize) -> Vec<Vec<usize>> {
    (0..k.pow(n as u32))
        .map(|mut c| {
            (0..n)
                .map(|_| {
                    let v = c % k;
                    c /= k;
                    v
                })
                .collect()
        })
        .collect()
}

fn ge(a: f64, t: f64) -> bool {
    a >= t - 1e-9 * (1.0 + t.abs())
}

fn brute_force(ch: &ChannelSpec, c12: &[u32], m1: usize, m2: usize) -> (f64, f64) {
    let d = ch.dims;
    let n = c12.iter().sum::<u32>() as usize;
    let mut n1 = vec![0u32; d.k1];
    for (i, &c) in c12.iter().enumerate() {
        n1[i / d.k2] += c;
    }
    let hist = |s: &[usize], k: usize| {
        let mut h = vec![0u32; k];
        for &v in s {
            h[v] += 1;
        }
        h
    };
    let t1: Vec<Vec<usize>> = sequences(d.k1, n).into_iter().filter(|s| hist(s, d.k1) == n1).collect();
    let cond = |x1: &[usize]| -> Vec<Vec<usize>> {
        sequences(d.k2, n)
            .into_iter()
            .filter(|s| {
                let joint: Vec<usize> = (0..n).map(|i| x1[i] * d.k2 + s[i]).collect();
                hist(&joint, c12.len()) == c12
            })
            .collect()
    };
    let ys = sequences(d.ky, n);
    let metric = |a: &[usize], b: &[usize], y: &[usize]| -> f64 { (0..n).map(|i| ch.q[d.index(a[i], b[i], y[i])]).sum() };

    // Mixed-radix counter over all codebooks.
    let (mut pe1, mut pe2) = (0.0, 0.0);
    let mut x1_idx = vec![0usize; m1];
    'outer: loop {
        let x1s: Vec<&Vec<usize>> = x1_idx.iter().map(|&i| &t1[i]).collect();
        let conds: Vec<Vec<Vec<usize>>> = x1s.iter().map(|x| cond(x)).collect();
        let mut p_book = (1.0 / t1.len() as f64).powi(m1 as i32);
        for c in &conds {
            p_book /= (c.len() as f64).powi(m2 as i32);
        }
        let mut x2_idx = vec![0usize; m1 * m2];
        loop {
            let x2 = |i: usize, j: usize| &conds[i][x2_idx[i * m2 + j]];
            for y in &ys {
                let py: f64 = (0..n).map(|k| ch.w[d.index(x1s[0][k], x2(0, 0)[k], y[k])]).product();
                if py == 0.0 {
                    continue;
                }
                let t = metric(x1s[0], x2(0, 0), y);
                if (1..m2).any(|j| ge(metric(x1s[0], x2(0, j), y), t)) {
                    pe2 += p_book * py;
                }
                if (1..m1).any(|i| (0..m2).any(|j| ge(metric(x1s[i], x2(i, j), y), t))) {
                    pe1 += p_book * py;
                }
            }
            let mut k = 0;
            while k < x2_idx.len() {
                x2_idx[k] += 1;
                if x2_idx[k] < conds[k / m2].len() {
                    break;
                }
                x2_idx[k] = 0;
                k += 1;
            }
            if k == x2_idx.len() {
                break;
            }
        }
        let mut k = 0;
        while k < m1 {
            x1_idx[k] += 1;
            if x1_idx[k] < t1.len() {
                continue 'outer;
            }
            x1_idx[k] = 0;
            k += 1;
        }
        return (pe1, pe2);
    }
}

fn tied_channel(seed: u64) -> ChannelSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = AlphabetDims::new(2, 2, 2).unwrap();
    let w: Vec<f64> = (0..4).flat_map(|_| normalized(&mut rng, 2)).collect();
    let q = (0..8).map(|_| rng.random_range(-2i32..=0) as f64).collect();
    ChannelSpec::new(d, w, q).unwrap()
}

fn criterion_6() -> Check {
    let cases: [(&[u32], usize, usize); 6] = [
        (&[1, 1, 1, 1], 2, 2),
        (&[2, 0, 1, 1], 2, 2),
        (&[1, 1, 0, 1], 2, 2),
        (&[1, 1, 1, 1], 1, 2),
        (&[1, 0, 1, 1], 2, 1),
        (&[0, 2, 1, 0], 2, 2),
    ];
    let mut worst: f64 = 0.0;
    let mut enumerated = 0;
    for (i, (c12, m1, m2)) in cases.iter().enumerate() {
        for ch in [channel(5000 + i as u64, false), tied_channel(5100 + i as u64)] {
            let (b1, b2) = brute_force(&ch, c12, *m1, *m2);
            let e1 = exact_pe1_sup(&ch, c12, *m1 as f64, *m2 as f64, EXACT_CAP).map_err(|e| e.to_string())?;
            let e2 = exact_pe2_sup(&ch, c12, *m2 as f64, EXACT_CAP).map_err(|e| e.to_string())?;
            worst = worst.max((e1 - b1).abs()).max((e2 - b2).abs());
            enumerated += 1;
        }
    }

    let mut covered = 0;
    let configs = 40;
    for k in 0..configs {
        let seed = 5200 + k as u64;
        let ch = if k % 4 == 3 { tied_channel(seed) } else { channel(seed, false) };
        let n = 4 + (k % 3) as u32;
        let (r1, r2) = [(0.25, 0.25), (0.5, 0.25), (0.25, 0.5), (0.5, 0.5)][k / 10];
        let cfg = EnsembleConfig { scheme: EnsembleScheme::Superposition, n, r1, r2, gamma: None, input: input(seed, false), seed };
        let rep = simulate(&cfg, &ch, 2000, &SimOptions::default()).map_err(|e| e.to_string())?;
        let (est, exact) = if k % 2 == 0 {
            (&rep.err1, exact_pe1_sup(&ch, &rep.type_counts, rep.m1, rep.m2, EXACT_CAP))
        } else {
            (&rep.e2_event, exact_pe2_sup(&ch, &rep.type_counts, rep.m2, EXACT_CAP))
        };
        let exact = exact.map_err(|e| e.to_string())?;
        if est.ci.0 <= exact && exact <= est.ci.1 {
            covered += 1;
        }
    }
    let msg = format!(
        "{enumerated} enumerations, max |exact - brute force| {worst:.1e}; Wilson coverage {covered}/{configs}"
    );
    if worst <= 1e-12 && covered as f64 >= 0.9 * configs as f64 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_7() -> Check {
    // Trivial first user: the exponent is that of the cloud code.
    let d = AlphabetDims::new(1, 2, 2).unwrap();
    let w = vec![0.97, 0.03, 0.1, 0.9];
    let q = vec![0.0, -1.0, -1.0, 0.0];
    let ch = ChannelSpec::new(d, w, q).unwrap();
    let inp = InputDist::new(d, vec![0.5, 0.5]).unwrap();
    let r2 = 0.5;
    let p = JointPmf::from_input_channel(&inp, &ch).unwrap();
    let e2 = exponent_e2(&p, &ch.q, r2, &SolverOptions::default()).map_err(|e| e.to_string())?.value;
    let mut gaps = Vec::new();
    let mut slopes = Vec::new();
    for n in [6u32, 8, 10, 12, 14] {
        let c12 = vec![n / 2, n / 2];
        let m2 = (2f64.powf(n as f64 * r2)).ceil();
        let pe = exact_pe2_sup(&ch, &c12, m2, EXACT_CAP).map_err(|e| e.to_string())?;
        let s = -pe.log2() / n as f64;
        slopes.push(s);
        gaps.push((s - e2).abs());
    }
    let monotone = gaps.windows(2).all(|g| g[1] <= g[0] + 1e-12);
    let n = 14.0;
    let bound = (d.cells() as f64) * (n + 1.0f64).log2() / n + 5e-2;
    let msg = format!(
        "E2 = {e2:.4}; slopes {}; gap at n=14 {:.4} (bound {bound:.3})",
        slopes.iter().map(|s| format!("{s:.4}")).collect::<Vec<_>>().join(", "),
        gaps[4]
    );
    if monotone && gaps[4] <= bound && e2 > 0.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_8() -> Check {
    let ch = parallel_channel(0.1);
    let d = ch.dims;
    let inp = InputDist::new(d, vec![30.0 / 32.0, 0.0, 2.0 / 32.0, 0.0]).unwrap();
    let p = JointPmf::from_input_channel(&inp, &ch).unwrap();
    let opts = RegionOptions::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for (scheme, kind) in [(EnsembleScheme::Superposition, RegionKind::Sup), (EnsembleScheme::Binning, RegionKind::Bin)] {
        let lim = r1_limit(kind, &p, &ch.q, 0.0, &opts).map_err(|e| e.to_string())?;
        let r1 = 1.1 * lim;
        let cfg = EnsembleConfig { scheme, n: 32, r1, r2: 0.0, gamma: None, input: inp.clone(), seed: 8 };
        let rep = simulate(&cfg, &ch, 2000, &SimOptions::default()).map_err(|e| e.to_string())?;
        ok &= rep.total.rate >= 0.9;
        parts.push(format!("{}: R1 {r1:.4} (limit {lim:.4}) error frequency {:.4}", kind.name(), rep.total.rate));
    }
    let msg = parts.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn cli(args: &[&str], threads: &str) -> Result<(Vec<u8>, i32), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cogmac"))
        .args(args)
        .env("COGMAC_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.stdout, out.status.code().unwrap_or(-1)))
}

fn criterion_9() -> Check {
    let dir: PathBuf = std::env::temp_dir().join(format!("cogmac-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let (par, mat, su) = (data("parallel.json"), data("parallel_matched.json"), data("single_user.json"));
    let runs: Vec<Vec<&str>> = vec![
        vec!["region", "--problem", &par, "--kind", "sup", "--dist", "sweep", "3", "--grid", "5", "--out", "csv", "--seed", "4"],
        vec!["region", "--problem", &mat, "--kind", "bin-star", "--grid", "9"],
        vec!["exponent", "--problem", &par, "--R1", "0.3", "--R2", "0.2", "--scheme", "bin"],
        vec!["simulate", "--problem", &par, "--scheme", "bin", "--n", "8", "--R1", "0.25", "--R2", "0.25", "--trials", "300", "--exact", "--seed", "9"],
        vec!["su-bound", "--problem", &su, "--dist", "sweep", "2", "--points", "5"],
    ];
    let mut identical = 0;
    let mut failures = Vec::new();
    for (i, args) in runs.iter().enumerate() {
        let (a, ca) = cli(args, "1")?;
        let (b, cb) = cli(args, "4")?;
        let mut seq_args = args.clone();
        seq_args.push("--sequential");
        let (c, _) = cli(&seq_args, "4")?;
        if ca == 1 || a.is_empty() {
            failures.push(format!("run {i} failed with exit {ca}"));
            continue;
        }
        let file = dir.join(format!("run{i}.out"));
        std::fs::write(&file, &a).map_err(|e| e.to_string())?;
        let f = file.to_string_lossy().to_string();
        let (d, _) = cli(&["rerun", &f], "3")?;
        let (_, check) = cli(&["rerun", &f, "--check"], "2")?;
        if a == b && a == c && a == d && ca == cb && check != 1 {
            identical += 1;
        } else {
            failures.push(format!("run {i} differs"));
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    let msg = format!("{identical}/{} commands byte-identical across 1 and 4 threads, sequential mode and rerun", runs.len());
    if failures.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; {}", failures.join("; ")))
    }
}

type Criterion = (u32, &'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "matched-case region equality", criterion_1),
        (2, "parallel-channel reference values", criterion_2),
        (3, "representation equivalence", criterion_3),
        (4, "region containments", criterion_4),
        (5, "exponents vs grid oracle", criterion_5),
        (6, "exact ensemble oracles", criterion_6),
        (7, "exponent slope convergence", criterion_7),
        (8, "empirical converse", criterion_8),
        (9, "rerun determinism", criterion_9),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let r = f();
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(m) => println!("criterion {id} ({name}): PASS [{secs:.1}s] {m}"),
            Err(m) => {
                failed += 1;
                println!("criterion {id} ({name}): FAIL [{secs:.1}s] {m}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
