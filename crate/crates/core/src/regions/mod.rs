//! Rate regions for a fixed input distribution, hulls over input
//! distributions and single-user lower bounds.
//!
//! Every region is traced as `maxR2(R1)` on a grid of `R1` values. A sample
//! is `None` when no nonnegative `R2` is admissible at that `R1`.

mod hull;
mod single_user;

use serde::{Deserialize, Serialize};

pub use hull::{hull_over_inputs, upper_envelope, HullOptions, InputFamily};
pub use single_user::{induced_channel, lapidoth_su_bound, single_user_bound, LapidothBound, PhiMap, SingleUserChannel, SuBound};

use crate::error::{Error, Result};
use crate::opt::expr::*;
use crate::opt::{minimize, FeasibleSet, Objective, OptStatus, SetKind, SolverOptions};
use crate::prob::{Axes, InputDist, JointPmf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionKind {
    Lm,
    Sup,
    SupTilde,
    Bin,
    BinTilde,
    BinStar,
    Matched,
}

impl RegionKind {
    pub const ALL: [RegionKind; 7] = [
        RegionKind::Lm,
        RegionKind::Sup,
        RegionKind::SupTilde,
        RegionKind::Bin,
        RegionKind::BinTilde,
        RegionKind::BinStar,
        RegionKind::Matched,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RegionKind::Lm => "lm",
            RegionKind::Sup => "sup",
            RegionKind::SupTilde => "sup-tilde",
            RegionKind::Bin => "bin",
            RegionKind::BinTilde => "bin-tilde",
            RegionKind::BinStar => "bin-star",
            RegionKind::Matched => "matched",
        }
    }

    pub fn parse(s: &str) -> Option<RegionKind> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub r1: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub r1: f64,
    pub max_r2: Option<f64>,
    /// Some minimization behind this sample did not converge.
    pub degraded: bool,
    /// Anchor (index into the curve's anchors) attaining the sample.
    pub anchor: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCurve {
    pub kind: RegionKind,
    pub samples: Vec<Sample>,
    /// Largest `R1` with a nonnegative admissible `R2`.
    pub extent: f64,
    pub anchors: Vec<InputDist>,
    pub degraded: bool,
}

impl RegionCurve {
    /// `maxR2` at the sample closest to `r1`.
    pub fn at(&self, r1: f64) -> Option<f64> {
        self.samples
            .iter()
            .min_by(|a, b| (a.r1 - r1).abs().total_cmp(&(b.r1 - r1).abs()))
            .and_then(|s| s.max_r2)
    }

    /// Whether `(r1, r2)` lies under the piecewise-linear interpolation of the
    /// samples, within `tol`.
    pub fn contains(&self, r1: f64, r2: f64, tol: f64) -> bool {
        if r1 > self.extent + tol {
            return false;
        }
        let pts = self.points();
        match interpolate(&pts, r1) {
            Some(v) => r2 <= v + tol,
            None => r2 <= tol,
        }
    }

    /// Boundary points `(R1, maxR2)` including the extent point on the axis.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = self.samples.iter().filter_map(|s| s.max_r2.map(|v| (s.r1, v))).collect();
        if self.extent.is_finite() && pts.iter().all(|p| p.0 < self.extent) {
            pts.push((self.extent, 0.0));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts
    }

    /// Largest `R1 + maxR2` over the samples and the extent point.
    pub fn max_sum_rate(&self) -> f64 {
        self.points().iter().map(|(a, b)| a + b).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn interpolate(pts: &[(f64, f64)], x: f64) -> Option<f64> {
    let first = pts.first()?;
    if x < first.0 - 1e-12 {
        return Some(first.1);
    }
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if x >= a.0 - 1e-12 && x <= b.0 + 1e-12 {
            if b.0 - a.0 <= 0.0 {
                return Some(a.1.max(b.1));
            }
            let t = ((x - a.0) / (b.0 - a.0)).clamp(0.0, 1.0);
            return Some(a.1 + t * (b.1 - a.1));
        }
    }
    let last = pts.last()?;
    ((x - last.0).abs() <= 1e-12).then_some(last.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionOptions {
    pub solver: SolverOptions,
    /// Bisection tolerance in rate (bits).
    pub bisect_tol: f64,
}

impl Default for RegionOptions {
    fn default() -> Self {
        Self { solver: SolverOptions::default().with_starts(2), bisect_tol: 1e-4 }
    }
}

/// Evaluates the rate functions at one anchor `P`.
pub struct Primitives<'a> {
    pub p: &'a JointPmf,
    pub q: &'a [f64],
    pub opts: &'a SolverOptions,
}

impl<'a> Primitives<'a> {
    pub fn new(p: &'a JointPmf, q: &'a [f64], opts: &'a SolverOptions) -> Self {
        Self { p, q, opts }
    }

    fn solve(&self, kind: SetKind, obj: Objective, degraded: &mut bool) -> Result<f64> {
        let set = FeasibleSet::new(kind, self.p.clone(), self.q.to_vec())?;
        let r = minimize(&obj, &set, self.opts)?;
        let always_nonempty = set.caps().is_empty();
        if r.status == OptStatus::MaxIters || (r.status == OptStatus::Infeasible && always_nonempty) {
            *degraded = true;
        }
        Ok(r.value)
    }

    /// `min_{L1} I(X1;Y,X2)`.
    pub fn r1_prime(&self, dg: &mut bool) -> Result<f64> {
        self.solve(SetKind::L1, Objective::MutualInfo(I_X1_YX2), dg)
    }

    /// `min_{L2} I(X2;Y|X1)`.
    pub fn r2_prime(&self, dg: &mut bool) -> Result<f64> {
        self.solve(SetKind::L2, Objective::MutualInfo(I_X2_Y_GIVEN_X1), dg)
    }

    /// `min_{L0} I(X1;Y) + |I(X2;Y|X1) - r2|^+`.
    pub fn r1_pp(&self, r2: f64, dg: &mut bool) -> Result<f64> {
        self.solve(SetKind::L0, Objective::SupUser1 { r2 }, dg)
    }

    /// `min_{L0} I(X2;Y) - I(X1;X2) + |I(X1;Y,X2) - r1|^+`.
    pub fn r2_pp(&self, r1: f64, dg: &mut bool) -> Result<f64> {
        self.solve(SetKind::L0, Objective::BinUser2 { r1 }, dg)
    }

    /// `min_{L1} I(X1;Y|X2)` (user 1 cognitive).
    pub fn r1_rev(&self, dg: &mut bool) -> Result<f64> {
        self.solve(SetKind::L1, Objective::MutualInfo(I_X1_Y_GIVEN_X2), dg)
    }

    /// `min_{L0} I(X2;Y) + |I(X1;Y|X2) - r1|^+` (user 1 cognitive).
    pub fn r2_rev(&self, r1: f64, dg: &mut bool) -> Result<f64> {
        self.solve(SetKind::L0, Objective::ReversedUser2 { r1 }, dg)
    }

    /// `min I(X1,X2;Y)` over `L0` with `I(X1;Y) <= r1`; `+inf` if empty.
    pub fn psi_sup(&self, r1: f64, dg: &mut bool) -> Result<f64> {
        self.solve(SetKind::L0Sup { r1 }, Objective::MutualInfo(I_X12_Y), dg)
    }

    /// `min I(X1,X2;Y)` over `L0` with both binning caps; `+inf` if empty.
    pub fn psi_bin(&self, r1: f64, r2: f64, dg: &mut bool) -> Result<f64> {
        self.solve(SetKind::L0Bin { r1, r2 }, Objective::MutualInfo(I_X12_Y), dg)
    }

    pub fn lm_r1(&self, dg: &mut bool) -> Result<f64> {
        self.solve(SetKind::D1, Objective::LmUser1, dg)
    }

    pub fn lm_r2(&self, dg: &mut bool) -> Result<f64> {
        self.solve(SetKind::D2, Objective::LmUser2, dg)
    }

    pub fn lm_r0(&self, r1: f64, r2: f64, dg: &mut bool) -> Result<f64> {
        self.solve(SetKind::D0 { r1, r2 }, Objective::LmSum, dg)
    }
}

/// All rate functions at one `(P, R1, R2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePrimitives {
    pub r1_prime: f64,
    pub r2_prime: f64,
    pub r1_pp: f64,
    pub r2_pp: f64,
    pub r1_rev: f64,
    pub r2_rev: f64,
    pub degraded: bool,
}

pub fn rate_primitives(p: &JointPmf, q: &[f64], r1: f64, r2: f64, opts: &SolverOptions) -> Result<RatePrimitives> {
    if !(r1 >= 0.0 && r2 >= 0.0) {
        return Err(Error::InvalidArgument("rates must be nonnegative".into()));
    }
    let pr = Primitives::new(p, q, opts);
    let mut dg = false;
    Ok(RatePrimitives {
        r1_prime: pr.r1_prime(&mut dg)?,
        r2_prime: pr.r2_prime(&mut dg)?,
        r1_pp: pr.r1_pp(r2, &mut dg)?,
        r2_pp: pr.r2_pp(r1, &mut dg)?,
        r1_rev: pr.r1_rev(&mut dg)?,
        r2_rev: pr.r2_rev(r1, &mut dg)?,
        degraded: dg,
    })
}

/// Largest `x` in `[lo, hi]` with `pred(x)`, for `pred` true on an initial
/// segment; `pred(lo)` is assumed true.
pub(crate) fn bisect<F: FnMut(f64) -> Result<bool>>(mut lo: f64, mut hi: f64, tol: f64, mut pred: F) -> Result<f64> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Evenly spaced grid of `points` values on `[0, hi]`.
pub fn linspace(hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![0.0],
        n => (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Default `R1` range: `log2 k1` for the non-cognitive region and
/// `log2 (k1 k2)` otherwise.
pub fn default_r1_max(kind: RegionKind, p: &JointPmf) -> f64 {
    let d = p.dims();
    match kind {
        RegionKind::Lm => (d.k1 as f64).log2(),
        _ => ((d.k1 * d.k2) as f64).log2(),
    }
}

/// Slack on comparisons against computed rate functions.
const EDGE: f64 = 1e-9;

/// Quantities shared by all samples of one curve.
struct Shared {
    r1p: f64,
    r2p: f64,
    r1pp0: f64,
    r1pp_at_r2p: f64,
    lm1: f64,
    lm2: f64,
}

fn shared(kind: RegionKind, pr: &Primitives, dg: &mut bool) -> Result<Shared> {
    let mut s = Shared { r1p: 0.0, r2p: 0.0, r1pp0: 0.0, r1pp_at_r2p: 0.0, lm1: 0.0, lm2: 0.0 };
    match kind {
        RegionKind::Matched => {}
        RegionKind::Lm => {
            s.lm1 = pr.lm_r1(dg)?;
            s.lm2 = pr.lm_r2(dg)?;
        }
        _ => {
            s.r2p = pr.r2_prime(dg)?;
            if matches!(kind, RegionKind::Bin | RegionKind::BinTilde | RegionKind::BinStar) {
                s.r1p = pr.r1_prime(dg)?;
            }
            if matches!(kind, RegionKind::Sup | RegionKind::Bin | RegionKind::BinStar) {
                s.r1pp0 = pr.r1_pp(0.0, dg)?;
                s.r1pp_at_r2p = pr.r1_pp(s.r2p, dg)?;
            }
        }
    }
    Ok(s)
}

fn nonneg(v: f64) -> Option<f64> {
    (v >= 0.0).then_some(v)
}

/// `sup {R2 in [0, R2'] : r1 <= R1''(R2)}`, `None` if empty.
fn sup_branch(r1: f64, s: &Shared, pr: &Primitives, tol: f64, dg: &mut bool) -> Result<Option<f64>> {
    if r1 > s.r1pp0 + EDGE {
        return Ok(None);
    }
    if r1 <= s.r1pp_at_r2p + EDGE {
        return Ok(Some(s.r2p));
    }
    bisect(0.0, s.r2p, tol, |r2| Ok(r1 <= pr.r1_pp(r2, dg)?)).map(Some)
}

fn sample(kind: RegionKind, r1: f64, s: &Shared, pr: &Primitives, tol: f64, dg: &mut bool) -> Result<Option<f64>> {
    Ok(match kind {
        RegionKind::Matched => {
            let i2 = pr.p.mi(Axes::X2, Axes::Y, Axes::X1);
            let i0 = pr.p.mi(Axes::X1X2, Axes::Y, Axes::NONE);
            nonneg(i2.min(i0 - r1))
        }
        RegionKind::Sup => sup_branch(r1, s, pr, tol, dg)?,
        RegionKind::SupTilde => nonneg(s.r2p.min(pr.psi_sup(r1, dg)? - r1)),
        RegionKind::Bin => {
            if r1 > s.r1p + EDGE {
                None
            } else {
                let a = sup_branch(r1, s, pr, tol, dg)?.unwrap_or(f64::NEG_INFINITY);
                let b = pr.r2_pp(r1, dg)?;
                nonneg(s.r2p.min(a.max(b)))
            }
        }
        RegionKind::BinTilde => {
            if r1 > s.r1p + EDGE {
                None
            } else {
                let mut ok = |r2: f64| -> Result<bool> { Ok(r1 + r2 <= pr.psi_bin(r1, r2, dg)?) };
                if !ok(0.0)? {
                    None
                } else if ok(s.r2p)? {
                    Some(s.r2p)
                } else {
                    Some(bisect(0.0, s.r2p, tol, ok)?)
                }
            }
        }
        RegionKind::BinStar => {
            // Split r1 = a + b with (a, b + R2) in the binning region. The
            // best split is either the largest admissible a on the R2''
            // branch or the corner of the R1'' branch at R2'.
            let a1 = r1.min(s.r1p);
            let c1 = s.r2p.min(pr.r2_pp(a1, dg)?);
            let cand1 = if c1 >= 0.0 { c1 + a1 } else { f64::NEG_INFINITY };
            let a2 = r1.min(s.r1p).min(s.r1pp_at_r2p);
            let cand2 = if a2 >= 0.0 { s.r2p + a2 } else { f64::NEG_INFINITY };
            nonneg(cand1.max(cand2) - r1)
        }
        RegionKind::Lm => {
            if r1 > s.lm1 + EDGE {
                None
            } else {
                let mut ok = |r2: f64| -> Result<bool> { Ok(r1 + r2 <= pr.lm_r0(r1, r2, dg)?) };
                if !ok(0.0)? {
                    None
                } else if ok(s.lm2)? {
                    Some(s.lm2)
                } else {
                    Some(bisect(0.0, s.lm2, tol, ok)?)
                }
            }
        }
    })
}

fn extent(kind: RegionKind, s: &Shared, pr: &Primitives, hi: f64, tol: f64, dg: &mut bool) -> Result<f64> {
    Ok(match kind {
        RegionKind::Matched => pr.p.mi(Axes::X1X2, Axes::Y, Axes::NONE),
        RegionKind::Sup => s.r1pp0,
        RegionKind::SupTilde => {
            let mut ok = |r1: f64| -> Result<bool> { Ok(r1 <= pr.psi_sup(r1, dg)?) };
            if ok(hi)? {
                hi
            } else {
                bisect(0.0, hi, tol, ok)?
            }
        }
        RegionKind::Bin => {
            let r1p = s.r1p;
            let mut ok = |r1: f64| -> Result<bool> { Ok(pr.r2_pp(r1, dg)? >= 0.0) };
            let b = if !ok(0.0)? {
                f64::NEG_INFINITY
            } else if ok(r1p)? {
                r1p
            } else {
                bisect(0.0, r1p, tol, ok)?
            };
            r1p.min(s.r1pp0.max(b))
        }
        RegionKind::BinTilde => {
            let r1p = s.r1p;
            let mut ok = |r1: f64| -> Result<bool> { Ok(r1 <= pr.psi_bin(r1, 0.0, dg)?) };
            if ok(r1p)? {
                r1p
            } else {
                bisect(0.0, r1p, tol, ok)?
            }
        }
        RegionKind::BinStar => {
            let c1 = s.r2p.min(pr.r2_pp(s.r1p, dg)?);
            let cand1 = if c1 >= 0.0 { c1 + s.r1p } else { f64::NEG_INFINITY };
            let cand2 = s.r2p + s.r1p.min(s.r1pp_at_r2p);
            cand1.max(cand2)
        }
        RegionKind::Lm => {
            let lm1 = s.lm1;
            let mut ok = |r1: f64| -> Result<bool> { Ok(r1 <= pr.lm_r0(r1, 0.0, dg)?) };
            if ok(lm1)? {
                lm1
            } else {
                bisect(0.0, lm1, tol, ok)?
            }
        }
    })
}

/// Boundary of one region for a fixed anchor `P` on the given `R1` grid.
pub fn region_curve(kind: RegionKind, p: &JointPmf, q: &[f64], grid: &[f64], opts: &RegionOptions) -> Result<RegionCurve> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty R1 grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] < 0.0 {
        return Err(Error::InvalidArgument("R1 grid must be nonnegative and strictly increasing".into()));
    }
    if kind == RegionKind::Lm && p.mi(Axes::X1, Axes::X2, Axes::NONE) > 1e-12 {
        return Err(Error::InvalidArgument("the non-cognitive region needs a product input".into()));
    }
    let pr = Primitives::new(p, q, &opts.solver);
    let mut dg = false;
    let sh = shared(kind, &pr, &mut dg)?;
    let ext = extent(kind, &sh, &pr, default_r1_max(kind, p).max(*grid.last().unwrap()), opts.bisect_tol, &mut dg)?;
    let results: Vec<Result<Sample>> = opts.solver.exec.map_range(grid.len(), |i| {
        let r1 = grid[i];
        let mut d = false;
        let v = sample(kind, r1, &sh, &pr, opts.bisect_tol, &mut d)?;
        Ok(Sample { r1, max_r2: v, degraded: d, anchor: Some(0) })
    });
    let samples: Vec<Sample> = results.into_iter().collect::<Result<_>>()?;
    let degraded = dg || samples.iter().any(|s| s.degraded);
    Ok(RegionCurve { kind, samples, extent: ext, anchors: vec![p.input()], degraded })
}

#[cfg(test)]
mod tests;
