//! Internal problem representation shared by the barrier solver and the
//! grid oracle.
//!
//! Variables are the admissible cells of one or two joint pmfs ("blocks").
//! Linear equalities pin marginals (to constants or to another block's
//! marginal) and are eliminated through an orthonormal null-space basis,
//! so every iterate satisfies them to rounding. The metric inequality and
//! rate caps are carried as convex functions `h <= 0`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::expr::{Lin, Tree};
use crate::error::{Error, Result};
use crate::prob::{divergence, marginalize, AlphabetDims, Axes, JointPmf, LN2};

#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub dims: AlphabetDims,
    /// Full-table cell index of each variable in this block.
    pub cells: Vec<usize>,
    pub offset: usize,
}

#[derive(Debug, Clone)]
pub(crate) enum PinTarget {
    Const(Vec<f64>),
    Block(usize),
}

#[derive(Debug, Clone)]
pub(crate) struct Pin {
    pub block: usize,
    pub axes: Axes,
    pub target: PinTarget,
}

/// Entropy of one block's marginal; the unit every smooth function is
/// assembled from.
#[derive(Debug, Clone)]
pub(crate) struct MarginalOp {
    pub block: usize,
    pub len: usize,
    /// Marginal index of each of the block's variables.
    pub proj: Vec<usize>,
    /// Rows of the null-space basis aggregated per marginal cell
    /// (`len × d`).
    pub agg: DMatrix<f64>,
}

/// `constant + linear·v + Σ coef_k H(op_k)`.
#[derive(Debug, Clone, Default)]
pub(crate) struct SmoothFn {
    pub ops: Vec<(usize, f64)>,
    pub linear: Vec<(usize, f64)>,
    pub constant: f64,
}

/// Literal (non-smooth) description used for validation and the grid
/// oracle.
#[derive(Debug, Clone)]
pub(crate) enum LiteralCons {
    /// `E_{block} q >= E_{other} q` or `>= value` when `other` is `None`.
    Metric { block: usize, other: Option<usize>, value: f64, scale: f64 },
    /// `lin(block) <= cap`.
    Cap { block: usize, lin: Lin, cap: f64 },
}

#[derive(Debug, Clone)]
pub(crate) struct Program {
    pub blocks: Vec<Block>,
    pub m: usize,
    pub pins: Vec<Pin>,
    pub ops: Vec<MarginalOp>,
    pub f0: SmoothFn,
    pub pieces: Vec<SmoothFn>,
    pub penalties: Vec<SmoothFn>,
    // Literal route.
    pub tree: Tree,
    pub tree_block: usize,
    pub divergence_ref: Option<JointPmf>,
    pub literal_cons: Vec<LiteralCons>,
    pub metric: Vec<f64>,
    /// Upper bound of each variable implied by constant pins.
    pub ub: Vec<f64>,
    // Affine parameterization v = v0 + N z.
    pub null: DMatrix<f64>,
    pub v0: DVector<f64>,
    eq_a: DMatrix<f64>,
    eq_b: DVector<f64>,
    pinv_basis: Vec<(f64, DVector<f64>)>,
}

pub(crate) struct ProgramSpec {
    pub blocks: Vec<(AlphabetDims, Vec<bool>)>,
    pub pins: Vec<Pin>,
    pub tree: Tree,
    pub tree_block: usize,
    pub divergence_ref: Option<JointPmf>,
    pub literal_cons: Vec<LiteralCons>,
    pub metric: Vec<f64>,
}

const EIG_TOL: f64 = 1e-9;

impl Program {
    pub fn build(spec: ProgramSpec) -> Result<Program> {
        let mut blocks = Vec::new();
        let mut m = 0;
        for (dims, allowed) in &spec.blocks {
            let cells: Vec<usize> = (0..dims.cells()).filter(|&c| allowed[c]).collect();
            if cells.is_empty() {
                return Err(Error::Infeasible("no admissible cells".into()));
            }
            blocks.push(Block { dims: *dims, offset: m, cells: cells.clone() });
            m += cells.len();
        }

        // Equality rows.
        let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
        for pin in &spec.pins {
            let blk = &blocks[pin.block];
            let len = blk.dims.marginal_len(pin.axes);
            let mut groups: Vec<Vec<(usize, f64)>> = vec![Vec::new(); len];
            for (i, &c) in blk.cells.iter().enumerate() {
                groups[blk.dims.marginal_index(c, pin.axes)].push((blk.offset + i, 1.0));
            }
            match &pin.target {
                PinTarget::Const(t) => {
                    for (mi, g) in groups.into_iter().enumerate() {
                        if !g.is_empty() {
                            rows.push((g, t[mi]));
                        } else if t[mi] > 0.0 {
                            return Err(Error::Infeasible("pinned mass on excluded cells".into()));
                        }
                    }
                }
                PinTarget::Block(src) => {
                    let sb = &blocks[*src];
                    for (i, &c) in sb.cells.iter().enumerate() {
                        groups[sb.dims.marginal_index(c, pin.axes)].push((sb.offset + i, -1.0));
                    }
                    for g in groups.into_iter().filter(|g| !g.is_empty()) {
                        rows.push((g, 0.0));
                    }
                }
            }
        }
        let mut eq_a = DMatrix::zeros(rows.len(), m);
        let mut eq_b = DVector::zeros(rows.len());
        for (r, (coefs, rhs)) in rows.iter().enumerate() {
            for &(j, v) in coefs {
                eq_a[(r, j)] += v;
            }
            eq_b[r] = *rhs;
        }
        let ata = eq_a.transpose() * &eq_a;
        let eig = SymmetricEigen::new(ata);
        let lmax = eig.eigenvalues.iter().cloned().fold(1.0, f64::max);
        let mut null_cols = Vec::new();
        let mut pinv_basis = Vec::new();
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            let u = eig.eigenvectors.column(k).into_owned();
            if lam <= EIG_TOL * lmax {
                null_cols.push(u);
            } else {
                pinv_basis.push((lam, u));
            }
        }
        let d = null_cols.len();
        let null = if d == 0 { DMatrix::zeros(m, 0) } else { DMatrix::from_columns(&null_cols) };

        let mut ub = vec![1.0f64; m];
        for pin in &spec.pins {
            if let PinTarget::Const(t) = &pin.target {
                let blk = &blocks[pin.block];
                for (i, &c) in blk.cells.iter().enumerate() {
                    let b = &mut ub[blk.offset + i];
                    *b = b.min(t[blk.dims.marginal_index(c, pin.axes)]);
                }
            }
        }
        let mut prog = Program {
            ub,
            blocks,
            m,
            pins: spec.pins,
            ops: Vec::new(),
            f0: SmoothFn::default(),
            pieces: Vec::new(),
            penalties: Vec::new(),
            tree: spec.tree,
            tree_block: spec.tree_block,
            divergence_ref: spec.divergence_ref,
            literal_cons: spec.literal_cons,
            metric: spec.metric,
            null,
            v0: DVector::zeros(m),
            eq_a,
            eq_b,
            pinv_basis,
        };

        // Smooth functions.
        let pieces: Vec<SmoothFn> = prog
            .tree
            .pieces()
            .iter()
            .map(|l| prog.lin_fn(prog.tree_block, l))
            .collect();
        prog.pieces = pieces;
        if let Some(r) = prog.divergence_ref.clone() {
            // D(P'||P) = -H(P') - Σ P' log2 P on block 0.
            let op = prog.op(0, Axes::ALL);
            let lin = prog.blocks[0]
                .cells
                .iter()
                .enumerate()
                .map(|(i, &c)| (i, -r.probs()[c].log2()))
                .collect();
            prog.f0 = SmoothFn { ops: vec![(op, -1.0)], linear: lin, constant: 0.0 };
        }
        let cons = prog.literal_cons.clone();
        for c in &cons {
            let f = match c {
                LiteralCons::Metric { block, other, value, scale } => {
                    let mut lin: Vec<(usize, f64)> = prog.blocks[*block]
                        .cells
                        .iter()
                        .enumerate()
                        .map(|(i, &cell)| (prog.blocks[*block].offset + i, -prog.metric[cell] / scale))
                        .collect();
                    let mut constant = 0.0;
                    match other {
                        Some(o) => {
                            let ob = &prog.blocks[*o];
                            lin.extend(
                                ob.cells
                                    .iter()
                                    .enumerate()
                                    .map(|(i, &cell)| (ob.offset + i, prog.metric[cell] / scale)),
                            );
                        }
                        None => constant = value / scale,
                    }
                    SmoothFn { ops: vec![], linear: lin, constant }
                }
                LiteralCons::Cap { block, lin, cap } => {
                    let mut f = prog.lin_fn(*block, lin);
                    f.constant -= cap;
                    f
                }
            };
            prog.penalties.push(f);
        }
        // Block-local linear indices in f0 need the global offset.
        let off = prog.blocks[0].offset;
        for (i, _) in prog.f0.linear.iter_mut() {
            *i += off;
        }

        // Aggregated null-space rows per marginal op.
        for k in 0..prog.ops.len() {
            let op = &prog.ops[k];
            let blk = &prog.blocks[op.block];
            let mut agg = DMatrix::zeros(op.len, d);
            for (i, &mi) in op.proj.iter().enumerate() {
                let row = prog.null.row(blk.offset + i);
                let mut target = agg.row_mut(mi);
                target += row;
            }
            prog.ops[k].agg = agg;
        }

        let interior = prog.product_start()?;
        prog.v0 = prog.correct(&interior);
        Ok(prog)
    }

    pub fn dim(&self) -> usize {
        self.null.ncols()
    }

    fn op(&mut self, block: usize, axes: Axes) -> usize {
        let blk = &self.blocks[block];
        let proj: Vec<usize> = blk.cells.iter().map(|&c| blk.dims.marginal_index(c, axes)).collect();
        let len = blk.dims.marginal_len(axes);
        if let Some(k) = self.ops.iter().position(|o| o.block == block && o.proj == proj) {
            return k;
        }
        self.ops.push(MarginalOp { block, len, proj, agg: DMatrix::zeros(0, 0) });
        self.ops.len() - 1
    }

    fn lin_fn(&mut self, block: usize, lin: &Lin) -> SmoothFn {
        let mut ops: Vec<(usize, f64)> = Vec::new();
        for (coef, mi) in &lin.terms {
            for (axes, sign) in mi.entropies() {
                if axes == Axes::NONE {
                    continue;
                }
                let k = self.op(block, axes);
                match ops.iter_mut().find(|(j, _)| *j == k) {
                    Some(e) => e.1 += coef * sign,
                    None => ops.push((k, coef * sign)),
                }
            }
        }
        ops.retain(|(_, c)| *c != 0.0);
        SmoothFn { ops, linear: vec![], constant: lin.constant }
    }

    /// Least-squares correction onto `A v = b`.
    pub fn correct(&self, v: &DVector<f64>) -> DVector<f64> {
        let r = &self.eq_a * v - &self.eq_b;
        let atr = self.eq_a.transpose() * r;
        let mut out = v.clone();
        for (lam, u) in &self.pinv_basis {
            let c = u.dot(&atr) / lam;
            out.axpy(-c, u, 1.0);
        }
        out
    }

    pub fn to_z(&self, v: &DVector<f64>) -> DVector<f64> {
        self.null.transpose() * (v - &self.v0)
    }

    pub fn to_v(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.v0 + &self.null * z
    }

    #[cfg(test)]
    pub fn equality_residual(&self, v: &DVector<f64>) -> f64 {
        (&self.eq_a * v - &self.eq_b).amax()
    }

    /// Full tables of every block.
    pub fn tables(&self, v: &[f64]) -> Vec<JointPmf> {
        self.blocks
            .iter()
            .map(|b| {
                let mut p = vec![0.0; b.dims.cells()];
                for (i, &c) in b.cells.iter().enumerate() {
                    p[c] = v[b.offset + i].max(0.0);
                }
                JointPmf::from_raw(b.dims, p)
            })
            .collect()
    }

    /// Objective evaluated literally from the tables.
    pub fn literal_value(&self, v: &[f64]) -> f64 {
        let t = self.tables(v);
        let mut val = self.tree.eval(&t[self.tree_block]);
        if let Some(r) = &self.divergence_ref {
            val += divergence(t[0].probs(), r.probs());
        }
        val
    }

    /// Largest violation of the metric inequality or of a rate cap,
    /// evaluated literally.
    pub fn literal_violation(&self, v: &[f64]) -> f64 {
        let t = self.tables(v);
        let mut worst: f64 = 0.0;
        for c in &self.literal_cons {
            let viol = match c {
                LiteralCons::Metric { block, other, value, .. } => {
                    let lhs = t[*block].metric_expectation(&self.metric);
                    let rhs = match other {
                        Some(o) => t[*o].metric_expectation(&self.metric),
                        None => *value,
                    };
                    rhs - lhs
                }
                LiteralCons::Cap { block, lin, cap } => lin.eval(&t[*block]) - cap,
            };
            worst = worst.max(viol);
        }
        worst
    }

    // ---- starting points -------------------------------------------------

    fn pin_targets(&self, block: usize, v: &[f64]) -> Vec<(Axes, Vec<f64>)> {
        self.pins
            .iter()
            .filter(|p| p.block == block)
            .map(|p| {
                let t = match &p.target {
                    PinTarget::Const(t) => t.clone(),
                    PinTarget::Block(src) => {
                        let sb = &self.blocks[*src];
                        let mut full = vec![0.0; sb.dims.cells()];
                        for (i, &c) in sb.cells.iter().enumerate() {
                            full[c] = v[sb.offset + i];
                        }
                        marginalize(&sb.dims, &full, p.axes)
                    }
                };
                (p.axes, t)
            })
            .collect()
    }

    /// Iterative proportional fitting of each block onto its pinned
    /// marginals, blocks in order.
    pub fn fit(&self, mut v: Vec<f64>) -> Vec<f64> {
        for (b, blk) in self.blocks.iter().enumerate() {
            let targets = self.pin_targets(b, &v);
            if targets.is_empty() {
                let s: f64 = v[blk.offset..blk.offset + blk.cells.len()].iter().sum();
                for x in &mut v[blk.offset..blk.offset + blk.cells.len()] {
                    *x /= s;
                }
                continue;
            }
            for _ in 0..2000 {
                let mut err: f64 = 0.0;
                for (axes, t) in &targets {
                    let mut marg = vec![0.0; t.len()];
                    let mut size = vec![0usize; t.len()];
                    for (i, &c) in blk.cells.iter().enumerate() {
                        let mi = blk.dims.marginal_index(c, *axes);
                        marg[mi] += v[blk.offset + i];
                        size[mi] += 1;
                    }
                    for (i, &c) in blk.cells.iter().enumerate() {
                        let mi = blk.dims.marginal_index(c, *axes);
                        err = err.max((marg[mi] - t[mi]).abs());
                        if marg[mi] > 0.0 {
                            v[blk.offset + i] *= t[mi] / marg[mi];
                        } else {
                            // undefined conditional: spread uniformly
                            v[blk.offset + i] = t[mi] / size[mi] as f64;
                        }
                    }
                }
                if err < 1e-15 {
                    break;
                }
            }
        }
        v
    }

    /// Maximum-entropy style interior point: every admissible cell positive.
    pub fn product_start(&self) -> Result<DVector<f64>> {
        let v = self.fit(vec![1.0; self.m]);
        self.checked(v)
    }

    pub fn random_start<R: Rng>(&self, rng: &mut R) -> Result<DVector<f64>> {
        let init: Vec<f64> = (0..self.m)
            .map(|_| {
                let e: f64 = Exp1.sample(rng);
                e.max(1e-12)
            })
            .collect();
        let v = self.fit(init);
        self.checked(v)
    }

    /// A convex combination of a (possibly boundary) feasible point with
    /// the interior product point.
    pub fn blend_with_interior(&self, v: &DVector<f64>, weight: f64) -> Result<DVector<f64>> {
        let p = self.product_start()?;
        let mixed = v * (1.0 - weight) + p * weight;
        self.checked(mixed.as_slice().to_vec())
    }

    fn checked(&self, v: Vec<f64>) -> Result<DVector<f64>> {
        let v = self.correct(&DVector::from_vec(v));
        if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::Infeasible("could not construct an interior point".into()));
        }
        Ok(v)
    }

    /// Variables of a full table restricted to one block.
    pub fn restrict(&self, block: usize, table: &[f64]) -> Vec<f64> {
        self.blocks[block].cells.iter().map(|&c| table[c]).collect()
    }
}

/// Per-iterate values of every marginal op.
pub(crate) struct OpEval {
    pub marg: Vec<f64>,
    pub entropy: f64,
}

impl Program {
    pub fn eval_ops(&self, v: &DVector<f64>) -> Vec<OpEval> {
        self.ops
            .iter()
            .map(|op| {
                let blk = &self.blocks[op.block];
                let mut marg = vec![0.0; op.len];
                for (i, &mi) in op.proj.iter().enumerate() {
                    marg[mi] += v[blk.offset + i];
                }
                let entropy = marg.iter().map(|&x| if x > 0.0 { -x * x.log2() } else { 0.0 }).sum();
                OpEval { marg, entropy }
            })
            .collect()
    }
}

impl SmoothFn {
    pub fn value(&self, v: &DVector<f64>, ev: &[OpEval]) -> f64 {
        let mut s = self.constant;
        for &(i, c) in &self.linear {
            s += c * v[i];
        }
        for &(k, c) in &self.ops {
            s += c * ev[k].entropy;
        }
        s
    }

    /// Gradient in the reduced coordinates.
    pub fn grad_z(&self, prog: &Program, ev: &[OpEval]) -> DVector<f64> {
        let d = prog.dim();
        let mut g = DVector::zeros(d);
        for &(i, c) in &self.linear {
            g.axpy(c, &prog.null.row(i).transpose(), 1.0);
        }
        for &(k, c) in &self.ops {
            let op = &prog.ops[k];
            // dH/dF_m = -(log2 F_m + 1/ln2); the constant drops out on the
            // null space only for pinned marginals, so keep it.
            for (mi, &fm) in ev[k].marg.iter().enumerate() {
                if fm > 0.0 {
                    let dh = -(fm.log2() + 1.0 / LN2);
                    g.axpy(c * dh, &op.agg.row(mi).transpose(), 1.0);
                }
            }
        }
        g
    }

    /// Adds `scale * Hessian` (reduced coordinates) into `h`.
    pub fn add_hess_z(&self, prog: &Program, ev: &[OpEval], scale: f64, h: &mut DMatrix<f64>) {
        for &(k, c) in &self.ops {
            let op = &prog.ops[k];
            for (mi, &fm) in ev[k].marg.iter().enumerate() {
                if fm > 0.0 {
                    let w = -scale * c / (LN2 * fm);
                    let a = op.agg.row(mi);
                    h.ger(w, &a.transpose(), &a.transpose(), 1.0);
                }
            }
        }
    }

    pub fn is_linear(&self) -> bool {
        self.ops.is_empty()
    }
}
