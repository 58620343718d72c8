//! Convex hulls of regions over families of input distributions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::{interpolate, region_curve, RegionCurve, RegionKind, RegionOptions, Sample};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::prob::{AlphabetDims, ChannelSpec, InputDist, JointPmf};

/// Input distributions the hull ranges over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InputFamily {
    List { inputs: Vec<InputDist> },
    /// The uniform input followed by `count - 1` Dirichlet(1) draws. For the
    /// non-cognitive region the draws are products of two independent
    /// Dirichlet marginals.
    Dirichlet { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullOptions {
    pub region: RegionOptions,
    /// Number of best anchors to perturb after the first pass.
    pub refine: usize,
    /// Perturbations per refined anchor.
    pub refine_draws: usize,
    /// Mixing weight of each perturbation.
    pub refine_weight: f64,
    pub seed: u64,
}

impl InputFamily {
    /// The members of the family; `product` restricts draws to product
    /// inputs.
    pub fn inputs(&self, dims: AlphabetDims, product: bool) -> Result<Vec<InputDist>> {
        match self {
            InputFamily::List { inputs } if !inputs.is_empty() => Ok(inputs.clone()),
            InputFamily::Dirichlet { count, seed } if *count > 0 => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut v = vec![InputDist::uniform(dims)];
                for _ in 1..*count {
                    v.push(draw(&mut rng, dims, product)?);
                }
                Ok(v)
            }
            _ => Err(Error::InvalidArgument("empty input family".into())),
        }
    }
}

impl Default for HullOptions {
    fn default() -> Self {
        Self { region: RegionOptions::default(), refine: 3, refine_draws: 4, refine_weight: 0.1, seed: 0 }
    }
}

fn dirichlet<R: rand::Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect::<Vec<f64>>();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x: f64| (x / s).max(1e-9)).collect()
}

fn draw(rng: &mut ChaCha8Rng, dims: AlphabetDims, product: bool) -> Result<InputDist> {
    if product {
        let a = dirichlet(rng, dims.k1);
        let b = dirichlet(rng, dims.k2);
        InputDist::product(dims, &a, &b)
    } else {
        InputDist::renormalize(dims, dirichlet(rng, dims.k1 * dims.k2))
    }
}

fn mix(a: &InputDist, b: &InputDist, w: f64, product: bool) -> Result<InputDist> {
    if product {
        let m = |x: Vec<f64>, y: Vec<f64>| x.iter().zip(&y).map(|(p, q)| (1.0 - w) * p + w * q).collect::<Vec<_>>();
        InputDist::product(a.dims, &m(a.p1(), b.p1()), &m(a.p2(), b.p2()))
    } else {
        let v = a.p12.iter().zip(&b.p12).map(|(p, q)| (1.0 - w) * p + w * q).collect();
        InputDist::renormalize(a.dims, v)
    }
}

/// Upper concave envelope of a set of rate pairs, closed downward: the
/// result runs from `(0, max r2)` to `(max r1, 0)` and is nonincreasing.
pub fn upper_envelope(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(3 * points.len());
    for &(x, y) in points {
        if x.is_finite() && y.is_finite() && x >= 0.0 && y >= 0.0 {
            pts.push((x, y));
            pts.push((0.0, y));
            pts.push((x, 0.0));
        }
    }
    if pts.is_empty() {
        return vec![];
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        if let Some(last) = hull.last() {
            if (p.0 - last.0).abs() <= 1e-15 {
                continue;
            }
        }
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

fn area(c: &RegionCurve) -> f64 {
    c.points().windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum()
}

/// Hull of `kind` over the family, sampled on `grid`.
pub fn hull_over_inputs(
    kind: RegionKind,
    channel: &ChannelSpec,
    family: &InputFamily,
    grid: &[f64],
    opts: &HullOptions,
) -> Result<RegionCurve> {
    let dims = channel.dims;
    let product = kind == RegionKind::Lm;
    let mut anchors = family.inputs(dims, product)?;
    for a in &anchors {
        if a.dims != dims {
            return Err(Error::Dims("input distribution does not match the channel".into()));
        }
    }

    let exec = opts.region.solver.exec;
    let mut inner = opts.region.clone();
    inner.solver.exec = Exec::Sequential;
    let run = |list: &[InputDist]| -> Result<Vec<RegionCurve>> {
        exec.map_slice(list, |a| {
            let p = JointPmf::from_input_channel(a, channel)?;
            region_curve(kind, &p, &channel.q, grid, &inner)
        })
        .into_iter()
        .collect()
    };
    let mut curves = run(&anchors)?;

    if opts.refine > 0 && opts.refine_draws > 0 {
        let mut order: Vec<usize> = (0..curves.len()).collect();
        order.sort_by(|&a, &b| area(&curves[b]).total_cmp(&area(&curves[a])).then(a.cmp(&b)));
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
        let mut extra = Vec::new();
        for &i in order.iter().take(opts.refine) {
            for _ in 0..opts.refine_draws {
                let d = draw(&mut rng, dims, product)?;
                extra.push(mix(&anchors[i], &d, opts.refine_weight, product)?);
            }
        }
        curves.extend(run(&extra)?);
        anchors.extend(extra);
    }

    let all: Vec<(f64, f64)> = curves.iter().flat_map(|c| c.points()).collect();
    let env = upper_envelope(&all);
    let extent = curves.iter().map(|c| c.extent).fold(f64::NEG_INFINITY, f64::max);
    let per_curve: Vec<Vec<(f64, f64)>> = curves.iter().map(|c| c.points()).collect();
    let samples = grid
        .iter()
        .map(|&r1| {
            let max_r2 = if r1 <= extent + 1e-12 { interpolate(&env, r1).map(|v| v.max(0.0)) } else { None };
            let anchor = per_curve
                .iter()
                .enumerate()
                .filter(|(i, _)| r1 <= curves[*i].extent + 1e-12)
                .filter_map(|(i, pts)| interpolate(pts, r1).map(|v| (i, v)))
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
                .map(|(i, _)| i);
            let degraded = anchor.map(|i| curves[i].degraded).unwrap_or(false);
            Sample { r1, max_r2, degraded, anchor }
        })
        .collect::<Vec<_>>();
    let degraded = curves.iter().any(|c| c.degraded);
    Ok(RegionCurve { kind, samples, extent, anchors, degraded })
}
