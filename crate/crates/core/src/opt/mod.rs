//! Minimization of information functionals over sets of joint pmfs.
//!
//! A [`FeasibleSet`] pins some marginals of a reference pmf, optionally
//! adds the metric inequality `E_f q >= E_ref q` and rate caps on mutual
//! informations. [`minimize`] runs a multistart log-barrier Newton method
//! on the affine parameterization of the pinned set; [`minimize_nested`]
//! does the same for the joint `(P', P~)` problems of the exponents.
//! [`grid_oracle`] evaluates the same problems by brute force.

mod barrier;
pub mod expr;
mod grid;
mod program;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use expr::{Lin, Mi, Objective, Tree};
pub use grid::{grid_oracle, grid_oracle_nested, GridOptions, GridResult};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::prob::{AlphabetDims, Axes, InputDist, JointPmf};
use program::{LiteralCons, Pin, PinTarget, Program, ProgramSpec};

/// Constraint set kinds. Rates are in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetKind {
    /// `f_{X1X2} = P_{X1X2}`.
    K,
    /// `K` plus the metric inequality.
    Gq,
    /// `Gq` plus `f_Y = P_Y`.
    L0,
    /// `Gq` plus `f_{X2Y} = P_{X2Y}`.
    L1,
    /// `Gq` plus `f_{X1Y} = P_{X1Y}`.
    L2,
    /// `L0` plus `I_f(X1;Y) <= r1`.
    L0Sup { r1: f64 },
    /// `L0` plus `I_f(X1;Y) <= r1` and `I_f(X2;Y) - I_P(X1;X2) <= r2`.
    L0Bin { r1: f64, r2: f64 },
    /// `f_{X1} = P_{X1}`, `f_{X2Y} = P_{X2Y}`, metric.
    D1,
    /// `f_{X2} = P_{X2}`, `f_{X1Y} = P_{X1Y}`, metric.
    D2,
    /// `f_{X1}, f_{X2}, f_Y` pinned, metric, `I_f(X1;Y) <= r1`,
    /// `I_f(X2;Y) <= r2`.
    D0 { r1: f64, r2: f64 },
    /// `D0` with the coupling restricted to `f_{X1X2} = P_{X1X2}`.
    D0Product { r1: f64, r2: f64 },
}

impl SetKind {
    pub fn pins(&self) -> Vec<Axes> {
        match self {
            SetKind::K | SetKind::Gq => vec![Axes::X1X2],
            SetKind::L0 | SetKind::L0Sup { .. } | SetKind::L0Bin { .. } | SetKind::D0Product { .. } => {
                vec![Axes::X1X2, Axes::Y]
            }
            SetKind::L1 => vec![Axes::X1X2, Axes::X2Y],
            SetKind::L2 => vec![Axes::X1X2, Axes::X1Y],
            SetKind::D1 => vec![Axes::X1, Axes::X2Y],
            SetKind::D2 => vec![Axes::X2, Axes::X1Y],
            SetKind::D0 { .. } => vec![Axes::X1, Axes::X2, Axes::Y],
        }
    }

    pub fn has_metric(&self) -> bool {
        !matches!(self, SetKind::K)
    }

    fn rates(&self) -> Vec<f64> {
        match *self {
            SetKind::L0Sup { r1 } => vec![r1],
            SetKind::L0Bin { r1, r2 } | SetKind::D0 { r1, r2 } | SetKind::D0Product { r1, r2 } => vec![r1, r2],
            _ => vec![],
        }
    }
}

/// A constraint set anchored at a reference pmf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSet {
    pub kind: SetKind,
    pub reference: JointPmf,
    pub metric: Vec<f64>,
}

impl FeasibleSet {
    pub fn new(kind: SetKind, reference: JointPmf, metric: Vec<f64>) -> Result<Self> {
        if metric.len() != reference.dims().cells() {
            return Err(Error::Dims("metric table does not match the reference".into()));
        }
        if metric.iter().any(|q| !q.is_finite()) {
            return Err(Error::InvalidChannel("metric entries must be finite".into()));
        }
        if kind.rates().iter().any(|r| !(*r >= 0.0)) {
            return Err(Error::InvalidArgument("rates must be nonnegative".into()));
        }
        Ok(Self { kind, reference, metric })
    }

    pub fn dims(&self) -> &AlphabetDims {
        self.reference.dims()
    }

    pub fn input_dist(&self) -> InputDist {
        self.reference.input()
    }

    pub fn metric_threshold(&self) -> f64 {
        self.reference.metric_expectation(&self.metric)
    }

    /// Rate caps `lin(f) <= cap`.
    pub fn caps(&self) -> Vec<(Lin, f64)> {
        match self.kind {
            SetKind::L0Sup { r1 } => vec![(Lin::mi(expr::I_X1_Y), r1)],
            SetKind::L0Bin { r1, r2 } => {
                let i12 = self.reference.mi(Axes::X1, Axes::X2, Axes::NONE);
                vec![(Lin::mi(expr::I_X1_Y), r1), (Lin::mi(expr::I_X2_Y), r2 + i12)]
            }
            SetKind::D0 { r1, r2 } | SetKind::D0Product { r1, r2 } => {
                vec![(Lin::mi(expr::I_X1_Y), r1), (Lin::mi(expr::I_X2_Y), r2)]
            }
            _ => vec![],
        }
    }

    /// Largest violation of any constraint of the set (absolute units).
    pub fn violation(&self, f: &JointPmf) -> f64 {
        let mut worst: f64 = 0.0;
        for axes in self.kind.pins() {
            let a = f.marginal(axes);
            let b = self.reference.marginal(axes);
            for (x, y) in a.iter().zip(&b) {
                worst = worst.max((x - y).abs());
            }
        }
        if self.kind.has_metric() {
            worst = worst.max(self.metric_threshold() - f.metric_expectation(&self.metric));
        }
        for (lin, cap) in self.caps() {
            worst = worst.max(lin.eval(f) - cap);
        }
        worst
    }

    pub fn contains(&self, f: &JointPmf, tol: f64) -> bool {
        f.dims() == self.dims() && self.violation(f) <= tol
    }
}

/// Sets an inner problem of [`minimize_nested`] may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerSet {
    K,
    Gq,
    L0,
    L1,
    L2,
}

impl InnerSet {
    fn coupled(&self) -> Option<Axes> {
        match self {
            InnerSet::K | InnerSet::Gq => None,
            InnerSet::L0 => Some(Axes::Y),
            InnerSet::L1 => Some(Axes::X2Y),
            InnerSet::L2 => Some(Axes::X1Y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptStatus {
    Converged,
    MaxIters,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub starts: usize,
    pub max_iters: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { starts: 16, max_iters: 10_000, tolerance: 1e-9, seed: 0, exec: Exec::default() }
    }
}

impl SolverOptions {
    pub fn with_starts(mut self, starts: usize) -> Self {
        self.starts = starts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub value: f64,
    /// Minimizer; `P'` for nested problems.
    pub argmin: JointPmf,
    /// `P~` for nested problems.
    pub argmin_inner: Option<JointPmf>,
    pub status: OptStatus,
    pub starts_used: usize,
    /// Second-best start value minus best (0 with one start).
    pub certificate_gap: f64,
    pub iterations: usize,
    pub violation: f64,
}

impl OptResult {
    pub fn is_ok(&self) -> bool {
        self.status == OptStatus::Converged
    }
}

pub(crate) const FEAS_TOL: f64 = 1e-9;

fn metric_scale(q: &[f64]) -> f64 {
    let lo = q.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo > 0.0 {
        hi - lo
    } else {
        1.0
    }
}

pub(crate) fn single_program(set: &FeasibleSet, tree: Tree, divergence_ref: Option<JointPmf>) -> Result<Program> {
    let dims = *set.dims();
    let pins: Vec<Pin> = set
        .kind
        .pins()
        .into_iter()
        .map(|axes| Pin { block: 0, axes, target: PinTarget::Const(set.reference.marginal(axes)) })
        .collect();
    let allowed: Vec<bool> = (0..dims.cells())
        .map(|c| {
            pins.iter().all(|p| match &p.target {
                PinTarget::Const(t) => t[dims.marginal_index(c, p.axes)] > 0.0,
                PinTarget::Block(_) => true,
            }) && divergence_ref.as_ref().is_none_or(|r| r.probs()[c] > 0.0)
        })
        .collect();
    let mut cons = Vec::new();
    if set.kind.has_metric() {
        cons.push(LiteralCons::Metric {
            block: 0,
            other: None,
            value: set.metric_threshold(),
            scale: metric_scale(&set.metric),
        });
    }
    for (lin, cap) in set.caps() {
        cons.push(LiteralCons::Cap { block: 0, lin, cap });
    }
    Program::build(ProgramSpec {
        blocks: vec![(dims, allowed)],
        pins,
        tree,
        tree_block: 0,
        divergence_ref,
        literal_cons: cons,
        metric: set.metric.clone(),
    })
}

pub(crate) fn nested_program(anchor: &JointPmf, metric: &[f64], inner: InnerSet, tree: Tree) -> Result<Program> {
    let dims = *anchor.dims();
    if metric.len() != dims.cells() {
        return Err(Error::Dims("metric table does not match the anchor".into()));
    }
    let p12 = anchor.marginal(Axes::X1X2);
    let outer_allowed: Vec<bool> = anchor.probs().iter().map(|&p| p > 0.0).collect();
    let mut pins = vec![
        Pin { block: 0, axes: Axes::X1X2, target: PinTarget::Const(p12.clone()) },
        Pin { block: 1, axes: Axes::X1X2, target: PinTarget::Const(p12.clone()) },
    ];
    let coupled = inner.coupled();
    let mut reach = vec![true; dims.cells()];
    if let Some(axes) = coupled {
        pins.push(Pin { block: 1, axes, target: PinTarget::Block(0) });
        let mut hit = vec![false; dims.marginal_len(axes)];
        for c in 0..dims.cells() {
            if outer_allowed[c] {
                hit[dims.marginal_index(c, axes)] = true;
            }
        }
        reach = (0..dims.cells()).map(|c| hit[dims.marginal_index(c, axes)]).collect();
    }
    let inner_allowed: Vec<bool> =
        (0..dims.cells()).map(|c| p12[dims.marginal_index(c, Axes::X1X2)] > 0.0 && reach[c]).collect();
    let mut cons = Vec::new();
    if inner != InnerSet::K {
        cons.push(LiteralCons::Metric { block: 1, other: Some(0), value: 0.0, scale: metric_scale(metric) });
    }
    Program::build(ProgramSpec {
        blocks: vec![(dims, outer_allowed), (dims, inner_allowed)],
        pins,
        tree,
        tree_block: 1,
        divergence_ref: Some(anchor.clone()),
        literal_cons: cons,
        metric: metric.to_vec(),
    })
}

#[derive(Clone)]
enum Start {
    Given(Vec<f64>),
    Product,
    Random(u64),
}

const BLEND: f64 = 1e-3;

struct StartOutcome {
    value: f64,
    violation: f64,
    v: DVector<f64>,
    iters: usize,
    hit_cap: bool,
}

fn run_starts(prog: &Program, starts: &[Start], opts: &SolverOptions) -> Result<OptResult> {
    let outcomes: Vec<Option<StartOutcome>> = opts.exec.map_range(starts.len(), |i| {
        let v = match &starts[i] {
            Start::Given(v) => prog.blend_with_interior(&DVector::from_vec(v.clone()), BLEND).ok()?,
            Start::Product => prog.product_start().ok()?,
            Start::Random(idx) => {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(*idx);
                prog.random_start(&mut rng).ok()?
            }
        };
        let o = barrier::solve(prog, &v, opts.max_iters, opts.tolerance)?;
        Some(StartOutcome { value: o.value, violation: o.violation, v: o.v, iters: o.iters, hit_cap: o.hit_cap })
    });
    let ok: Vec<(usize, &StartOutcome)> =
        outcomes.iter().enumerate().filter_map(|(i, o)| o.as_ref().map(|o| (i, o))).collect();
    if ok.is_empty() {
        return Err(Error::Infeasible("no start could be made strictly feasible".into()));
    }
    let feasible: Vec<&(usize, &StartOutcome)> = ok.iter().filter(|(_, o)| o.violation <= FEAS_TOL).collect();
    let iterations = ok.iter().map(|(_, o)| o.iters).sum();
    let (best, status, gap) = if feasible.is_empty() {
        let b = ok
            .iter()
            .min_by(|a, b| a.1.violation.total_cmp(&b.1.violation).then(a.0.cmp(&b.0)))
            .unwrap()
            .1;
        let status = if b.violation > 1e-6 { OptStatus::Infeasible } else { OptStatus::MaxIters };
        (b, status, 0.0)
    } else {
        let mut vals: Vec<(f64, usize)> = feasible.iter().map(|(i, o)| (o.value, *i)).collect();
        vals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let b = feasible.iter().find(|(i, _)| *i == vals[0].1).unwrap().1;
        let gap = if vals.len() > 1 { vals[1].0 - vals[0].0 } else { 0.0 };
        let status = if b.hit_cap { OptStatus::MaxIters } else { OptStatus::Converged };
        (b, status, gap)
    };
    let tables = prog.tables(best.v.as_slice());
    let mut tables = tables.into_iter();
    let argmin = tables.next().unwrap();
    let argmin_inner = tables.next();
    let value = if status == OptStatus::Infeasible { f64::INFINITY } else { best.value };
    Ok(OptResult {
        value,
        argmin,
        argmin_inner,
        status,
        starts_used: starts.len(),
        certificate_gap: gap,
        iterations,
        violation: best.violation,
    })
}

fn start_list(given: Vec<Vec<f64>>, opts: &SolverOptions) -> Vec<Start> {
    let n = opts.starts.max(1);
    let mut s: Vec<Start> = Vec::new();
    let mut given = given.into_iter();
    if let Some(g) = given.next() {
        s.push(Start::Given(g));
    }
    if s.len() < n {
        s.push(Start::Product);
    }
    let mut idx = s.len() as u64;
    while s.len() < n {
        s.push(Start::Random(idx));
        idx += 1;
    }
    s.extend(given.map(Start::Given));
    s
}

/// Minimizes `obj` over `set`.
///
/// Starts: the reference pmf (slightly blended toward the interior), the
/// maximum-entropy member, then Dirichlet(1) points fitted to the pinned
/// marginals. Returns `Err` when the pinned marginals admit no pmf, and a
/// result with status [`OptStatus::Infeasible`] and value `+inf` when the
/// inequalities cannot be met.
pub fn minimize(obj: &Objective, set: &FeasibleSet, opts: &SolverOptions) -> Result<OptResult> {
    minimize_from(obj, set, opts, &[])
}

/// [`minimize`] with extra warm starts appended after the regular ones.
pub fn minimize_from(obj: &Objective, set: &FeasibleSet, opts: &SolverOptions, warm: &[JointPmf]) -> Result<OptResult> {
    let prog = single_program(set, obj.tree(), None)?;
    let mut given = vec![prog.restrict(0, set.reference.probs())];
    given.extend(warm.iter().map(|w| prog.restrict(0, w.probs())));
    run_starts(&prog, &start_list(given, opts), opts)
}

/// `min D(P'||P) + obj(P~)` over `P' in K(P)` and `P~` in the inner set
/// anchored at `P'`.
pub fn minimize_nested(
    anchor: &JointPmf,
    metric: &[f64],
    inner: InnerSet,
    obj: &Objective,
    opts: &SolverOptions,
) -> Result<OptResult> {
    minimize_nested_from(anchor, metric, inner, obj, opts, &[])
}

/// [`minimize_nested`] with warm-start pairs `(P', P~)`.
pub fn minimize_nested_from(
    anchor: &JointPmf,
    metric: &[f64],
    inner: InnerSet,
    obj: &Objective,
    opts: &SolverOptions,
    warm: &[(JointPmf, JointPmf)],
) -> Result<OptResult> {
    let prog = nested_program(anchor, metric, inner, obj.tree())?;
    let pair = |a: &JointPmf, b: &JointPmf| {
        let mut v = prog.restrict(0, a.probs());
        v.extend(prog.restrict(1, b.probs()));
        v
    };
    let mut given = vec![pair(anchor, anchor)];
    given.extend(warm.iter().map(|(a, b)| pair(a, b)));
    run_starts(&prog, &start_list(given, opts), opts)
}

/// Result of [`project_to_set`].
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub pmf: JointPmf,
    pub status: OptStatus,
}

/// Restores membership in `set`: pinned marginals are replaced keeping the
/// conditionals (iterated over several pins), then, if the metric
/// inequality or a cap is still violated, the I-projection onto the set is
/// taken. Members of the set are returned unchanged.
pub fn project_to_set(f: &JointPmf, set: &FeasibleSet) -> Result<Projection> {
    if f.dims() != set.dims() {
        return Err(Error::Dims("pmf and set dimensions differ".into()));
    }
    if set.violation(f) <= 1e-12 {
        return Ok(Projection { pmf: f.clone(), status: OptStatus::Converged });
    }
    let prog = single_program(set, Tree::Lin(Lin::constant(0.0)), None)?;
    let fitted = prog.fit(prog.restrict(0, f.probs()));
    let mut v = DVector::from_vec(fitted.clone());
    let corrected = prog.correct(&v);
    if corrected.iter().all(|&x| x >= 0.0) {
        v = corrected;
    }
    let g = prog.tables(v.as_slice()).remove(0);
    if set.violation(&g) <= FEAS_TOL {
        return Ok(Projection { pmf: g, status: OptStatus::Converged });
    }
    // I-projection of the re-coupled pmf (blended to full support) onto the set.
    let interior = prog.product_start()?;
    let blended = &v * (1.0 - 1e-6) + interior * 1e-6;
    let mut anchor = vec![0.0; set.dims().cells()];
    for (i, &c) in prog.blocks[0].cells.iter().enumerate() {
        anchor[c] = blended[i];
    }
    let anchor = JointPmf::renormalize(*set.dims(), anchor)?;
    let iprog = single_program(set, Tree::Lin(Lin::constant(0.0)), Some(anchor.clone()))?;
    let opts = SolverOptions::default().with_starts(1).with_exec(Exec::Sequential);
    let r = run_starts(&iprog, &[Start::Given(iprog.restrict(0, anchor.probs()))], &opts)?;
    Ok(Projection { pmf: r.argmin, status: r.status })
}

#[cfg(test)]
mod tests;
