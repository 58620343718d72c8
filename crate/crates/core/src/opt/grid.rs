//! Brute-force grid search over the null-space parameterization.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::program::Program;
use super::{nested_program, single_program, FeasibleSet, InnerSet, Objective, OptStatus};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::prob::JointPmf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    /// Grid step in the (orthonormal) free coordinates.
    pub resolution: f64,
    pub max_points: u64,
    pub max_dim: usize,
    /// Rounds of local refinement around the incumbent.
    pub zoom_levels: usize,
    pub exec: Exec,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { resolution: 1.0 / 200.0, max_points: 10_000_000, max_dim: 4, zoom_levels: 0, exec: Exec::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub value: f64,
    pub argmin: Option<JointPmf>,
    pub argmin_inner: Option<JointPmf>,
    /// Continuity modulus of the objective over one grid cell of the
    /// initial grid. It bounds `value - min` whenever some feasible grid
    /// point lies in the cell of a minimizer.
    pub error_bound: f64,
    pub dim: usize,
    pub points: u64,
    pub feasible_points: u64,
    pub status: OptStatus,
}

pub fn grid_oracle(obj: &Objective, set: &FeasibleSet, opts: &GridOptions) -> Result<GridResult> {
    let prog = single_program(set, obj.tree(), None)?;
    run(&prog, opts)
}

pub fn grid_oracle_nested(
    anchor: &JointPmf,
    metric: &[f64],
    inner: InnerSet,
    obj: &Objective,
    opts: &GridOptions,
) -> Result<GridResult> {
    let prog = nested_program(anchor, metric, inner, obj.tree())?;
    run(&prog, opts)
}

/// `max |H(p) - H(q)|` over `||p - q||_1 <= theta` on `m` symbols.
fn entropy_modulus(theta: f64, m: usize) -> f64 {
    let m = m.max(2) as f64;
    if theta <= 0.0 {
        0.0
    } else if theta <= 0.5 {
        -theta * (theta / m).log2()
    } else {
        m.log2()
    }
}

fn error_bound(prog: &Program, h: f64) -> f64 {
    let d = prog.dim();
    let theta: Vec<f64> = prog
        .blocks
        .iter()
        .map(|b| {
            (0..b.cells.len())
                .map(|i| (0..d).map(|j| prog.null[(b.offset + i, j)].abs()).sum::<f64>() * h)
                .sum()
        })
        .collect();
    let smooth = |f: &super::program::SmoothFn| -> f64 {
        let mut s = 0.0;
        for &(k, c) in &f.ops {
            let op = &prog.ops[k];
            s += c.abs() * entropy_modulus(theta[op.block], op.len);
        }
        if !f.linear.is_empty() {
            let lmax = f.linear.iter().map(|(_, c)| c.abs()).fold(0.0, f64::max);
            let tmax = theta.iter().cloned().fold(0.0, f64::max);
            s += lmax * tmax;
        }
        s
    };
    let pieces = prog.pieces.iter().map(smooth).fold(0.0, f64::max);
    smooth(&prog.f0) + pieces
}

/// Box of the free coordinates covering `0 <= v_i <= ub_i`.
fn bounding_box(prog: &Program) -> Vec<(f64, f64)> {
    (0..prog.dim())
        .map(|j| {
            let mut lo = 0.0;
            let mut hi = 0.0;
            for i in 0..prog.m {
                let n = prog.null[(i, j)];
                let a = n * (0.0 - prog.v0[i]);
                let b = n * (prog.ub[i] - prog.v0[i]);
                lo += a.min(b);
                hi += a.max(b);
            }
            (lo, hi)
        })
        .collect()
}

struct Best {
    value: f64,
    z: Option<DVector<f64>>,
    points: u64,
    feasible: u64,
}

fn scan(prog: &Program, lo: &[f64], counts: &[usize], h: f64, exec: Exec) -> Best {
    let d = counts.len();
    if d == 0 {
        let z = DVector::zeros(0);
        let (val, ok) = eval_point(prog, &z);
        return Best { value: if ok { val } else { f64::INFINITY }, z: ok.then_some(z), points: 1, feasible: ok as u64 };
    }
    let parts = exec.map_range(counts[0], |i0| {
        let mut best = Best { value: f64::INFINITY, z: None, points: 0, feasible: 0 };
        let mut idx = vec![0usize; d];
        idx[0] = i0;
        let mut z = DVector::zeros(d);
        loop {
            for j in 0..d {
                z[j] = lo[j] + idx[j] as f64 * h;
            }
            best.points += 1;
            let (val, ok) = eval_point(prog, &z);
            if ok {
                best.feasible += 1;
                if val < best.value {
                    best.value = val;
                    best.z = Some(z.clone());
                }
            }
            let mut j = d;
            loop {
                if j == 1 {
                    return best;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < counts[j] {
                    break;
                }
                idx[j] = 0;
            }
        }
    });
    let mut out = Best { value: f64::INFINITY, z: None, points: 0, feasible: 0 };
    for p in parts {
        out.points += p.points;
        out.feasible += p.feasible;
        if p.value < out.value {
            out.value = p.value;
            out.z = p.z;
        }
    }
    out
}

fn eval_point(prog: &Program, z: &DVector<f64>) -> (f64, bool) {
    let mut v = prog.to_v(z);
    for x in v.iter_mut() {
        if *x < -1e-12 {
            return (f64::INFINITY, false);
        }
        *x = x.max(0.0);
    }
    if prog.literal_violation(v.as_slice()) > 1e-12 {
        return (f64::INFINITY, false);
    }
    (prog.literal_value(v.as_slice()), true)
}

fn grid_counts(bx: &[(f64, f64)], h: f64) -> Vec<usize> {
    bx.iter().map(|(lo, hi)| ((hi - lo) / h).floor() as usize + 1).collect()
}

fn total(counts: &[usize]) -> u64 {
    counts.iter().fold(1u64, |a, &c| a.saturating_mul(c as u64))
}

fn run(prog: &Program, opts: &GridOptions) -> Result<GridResult> {
    let d = prog.dim();
    if d > opts.max_dim {
        return Err(Error::Resource(format!("free dimension {d} exceeds the grid cap {}", opts.max_dim)));
    }
    if !(opts.resolution > 0.0) {
        return Err(Error::InvalidArgument("grid resolution must be positive".into()));
    }
    let bx = bounding_box(prog);
    let h = opts.resolution;
    // Snap the lower corner so that z = 0 (the reference point v0) is a node.
    let bx: Vec<(f64, f64)> = bx.into_iter().map(|(lo, hi)| (-((-lo / h + 1e-9).floor()) * h, hi)).collect();
    let counts = grid_counts(&bx, h);
    if total(&counts) > opts.max_points {
        return Err(Error::Resource(format!(
            "grid of {} points exceeds the budget {}",
            total(&counts),
            opts.max_points
        )));
    }
    let lo: Vec<f64> = bx.iter().map(|b| b.0).collect();
    let mut best = scan(prog, &lo, &counts, h, opts.exec);
    let bound = error_bound(prog, h);

    let mut step = h;
    for _ in 0..opts.zoom_levels {
        let Some(zc) = best.z.clone() else { break };
        let per = ((opts.max_points as f64).powf(1.0 / d.max(1) as f64).floor() as usize).clamp(3, 41);
        let half = 2.0 * step;
        let sub: Vec<(f64, f64)> =
            (0..d).map(|j| ((zc[j] - half).max(bx[j].0), (zc[j] + half).min(bx[j].1))).collect();
        let new_step = 2.0 * half / (per - 1) as f64;
        let sub_counts = grid_counts(&sub, new_step);
        let sub_lo: Vec<f64> = sub.iter().map(|b| b.0).collect();
        let r = scan(prog, &sub_lo, &sub_counts, new_step, opts.exec);
        best.points += r.points;
        best.feasible += r.feasible;
        if r.value < best.value {
            best.value = r.value;
            best.z = r.z;
        }
        step = new_step;
    }

    let (argmin, argmin_inner) = match &best.z {
        Some(z) => {
            let v = prog.to_v(z).map(|x| x.max(0.0));
            let mut t = prog.tables(v.as_slice()).into_iter();
            (t.next(), t.next())
        }
        None => (None, None),
    };
    let status = if best.z.is_some() { OptStatus::Converged } else { OptStatus::Infeasible };
    Ok(GridResult {
        value: best.value,
        argmin,
        argmin_inner,
        error_bound: bound,
        dim: d,
        points: best.points,
        feasible_points: best.feasible,
        status,
    })
}
