//! Lower bounds on the mismatch capacity of a single-user channel obtained
//! by splitting its input into two virtual users.

use serde::{Deserialize, Serialize};

use super::{bisect, linspace, Primitives, RegionOptions};
use crate::error::{Error, Result};
use crate::opt::expr::*;
use crate::opt::{minimize, FeasibleSet, Objective, OptStatus, SetKind, SolverOptions};
use crate::prob::{AlphabetDims, ChannelSpec, InputDist, JointPmf};

/// Single-user channel `W(y|x)` with metric `q(x,y)`, both stored row-major
/// `[x][y]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleUserChannel {
    pub kx: usize,
    pub ky: usize,
    pub w: Vec<f64>,
    pub q: Vec<f64>,
}

impl SingleUserChannel {
    pub fn new(kx: usize, ky: usize, w: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        // Reuse the channel checks with a trivial second input.
        ChannelSpec::new(AlphabetDims::new(kx, 1, ky)?, w.clone(), q.clone())?;
        Ok(Self { kx, ky, w, q })
    }
}

/// Map `(x1, x2) -> x`, stored at index `x1 * k2 + x2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhiMap {
    pub k1: usize,
    pub k2: usize,
    pub map: Vec<usize>,
}

impl PhiMap {
    pub fn new(k1: usize, k2: usize, map: Vec<usize>) -> Result<Self> {
        if k1 == 0 || k2 == 0 || map.len() != k1 * k2 {
            return Err(Error::Dims(format!("map needs {} entries, got {}", k1 * k2, map.len())));
        }
        Ok(Self { k1, k2, map })
    }

    /// `x = x1 * k2 + x2`, a bijection onto `k1 * k2` letters.
    pub fn pairing(k1: usize, k2: usize) -> Self {
        Self { k1, k2, map: (0..k1 * k2).collect() }
    }
}

/// Two-user channel `W(y|phi(x1,x2))` with metric `q(phi(x1,x2), y)`.
pub fn induced_channel(su: &SingleUserChannel, phi: &PhiMap) -> Result<ChannelSpec> {
    if let Some(&x) = phi.map.iter().find(|&&x| x >= su.kx) {
        return Err(Error::Dims(format!("map sends to letter {x}, channel has {}", su.kx)));
    }
    let dims = AlphabetDims::new(phi.k1, phi.k2, su.ky)?;
    let mut w = Vec::with_capacity(dims.cells());
    let mut q = Vec::with_capacity(dims.cells());
    for &x in &phi.map {
        w.extend_from_slice(&su.w[x * su.ky..(x + 1) * su.ky]);
        q.extend_from_slice(&su.q[x * su.ky..(x + 1) * su.ky]);
    }
    ChannelSpec::new(dims, w, q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuBound {
    /// The larger of the two corner sums.
    pub value: f64,
    /// `R2' + R1''(R2')`: user 2 cognitive.
    pub cognitive_2: f64,
    /// `r1 + r2(r1)`: user 1 cognitive.
    pub cognitive_1: f64,
    pub degraded: bool,
}

/// Achievable rate of the single-user channel under input `P_{X1X2}` on the
/// induced alphabet.
pub fn single_user_bound(su: &SingleUserChannel, phi: &PhiMap, input: &InputDist, opts: &SolverOptions) -> Result<SuBound> {
    let ch = induced_channel(su, phi)?;
    let p = JointPmf::from_input_channel(input, &ch)?;
    let pr = Primitives::new(&p, &ch.q, opts);
    let mut dg = false;
    let r2p = pr.r2_prime(&mut dg)?;
    let c2 = r2p + pr.r1_pp(r2p, &mut dg)?;
    let r1 = pr.r1_rev(&mut dg)?;
    let c1 = r1 + pr.r2_rev(r1, &mut dg)?;
    Ok(SuBound { value: c2.max(c1), cognitive_2: c2, cognitive_1: c1, degraded: dg })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LapidothBound {
    /// Largest sampled sum rate.
    pub value: f64,
    pub r1: f64,
    pub r2: f64,
    pub degraded: bool,
}

/// Max sum rate of the non-cognitive multiple-access construction with
/// product input `p1 x p2`, sampled at `points` values of `R1`.
pub fn lapidoth_su_bound(
    su: &SingleUserChannel,
    phi: &PhiMap,
    p1: &[f64],
    p2: &[f64],
    points: usize,
    opts: &RegionOptions,
) -> Result<LapidothBound> {
    let ch = induced_channel(su, phi)?;
    let input = InputDist::product(ch.dims, p1, p2)?;
    let p = JointPmf::from_input_channel(&input, &ch)?;
    let mut dg = false;
    let solve = |kind: SetKind, obj: Objective, dg: &mut bool| -> Result<f64> {
        let set = FeasibleSet::new(kind, p.clone(), ch.q.clone())?;
        let r = minimize(&obj, &set, &opts.solver)?;
        if r.status == OptStatus::MaxIters || (r.status == OptStatus::Infeasible && set.caps().is_empty()) {
            *dg = true;
        }
        Ok(r.value)
    };
    let a = solve(SetKind::L1, Objective::MutualInfo(I_X1_Y_GIVEN_X2), &mut dg)?;
    let b = solve(SetKind::L2, Objective::MutualInfo(I_X2_Y_GIVEN_X1), &mut dg)?;
    let mut grid = linspace(a, points.max(2));
    grid.dedup();
    let rows: Vec<Result<(f64, f64, bool)>> = opts.solver.exec.map_slice(&grid, |&r1| {
        let mut d = false;
        let mut ok = |r2: f64| -> Result<bool> {
            Ok(r1 + r2 <= solve(SetKind::D0Product { r1, r2 }, Objective::MutualInfo(I_X12_Y), &mut d)?)
        };
        let r2 = if !ok(0.0)? {
            f64::NEG_INFINITY
        } else if ok(b)? {
            b
        } else {
            bisect(0.0, b, opts.bisect_tol, ok)?
        };
        Ok((r1, r2, d))
    });
    let mut best = LapidothBound { value: f64::NEG_INFINITY, r1: 0.0, r2: 0.0, degraded: dg };
    for row in rows {
        let (r1, r2, d) = row?;
        best.degraded |= d;
        if r2 >= 0.0 && r1 + r2 > best.value {
            best.value = r1 + r2;
            best.r1 = r1;
            best.r2 = r2;
        }
    }
    if !best.value.is_finite() {
        best.value = 0.0;
    }
    Ok(best)
}
