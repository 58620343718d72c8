//! Finite-alphabet probability tables over `X1 × X2 × Y`, information
//! functionals (base 2) and method-of-types combinatorics.
//!
//! Cells are stored densely in row-major order `(x1, x2, y)`.

mod info;
mod types;

pub use info::{
    conditional_divergence, divergence, entropy, metric_expectation, xlog2x, LN2,
};
pub use types::{
    composition_count, enumerate_conditional_types, enumerate_types, log2_multinomial,
    log2_type_class_size, multinomial_exact, TypeCount, DEFAULT_ENUMERATION_CAP,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on `k1 * k2 * ky`.
pub const DEFAULT_CELL_CAP: usize = 4096;

/// Tolerance used when validating probability tables on input.
pub const PMF_TOL: f64 = 1e-12;

/// Bitmask over the three random variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Axes(pub u8);

impl Axes {
    pub const NONE: Axes = Axes(0);
    pub const X1: Axes = Axes(1);
    pub const X2: Axes = Axes(2);
    pub const Y: Axes = Axes(4);
    pub const X1X2: Axes = Axes(3);
    pub const X1Y: Axes = Axes(5);
    pub const X2Y: Axes = Axes(6);
    pub const ALL: Axes = Axes(7);

    pub fn union(self, other: Axes) -> Axes {
        Axes(self.0 | other.0)
    }

    pub fn overlaps(self, other: Axes) -> bool {
        self.0 & other.0 != 0
    }

    pub fn has(self, other: Axes) -> bool {
        self.0 & other.0 == other.0
    }
}

impl std::ops::BitOr for Axes {
    type Output = Axes;
    fn bitor(self, rhs: Axes) -> Axes {
        self.union(rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlphabetDims {
    pub k1: usize,
    pub k2: usize,
    pub ky: usize,
}

impl AlphabetDims {
    pub fn new(k1: usize, k2: usize, ky: usize) -> Result<Self> {
        Self::with_cap(k1, k2, ky, DEFAULT_CELL_CAP)
    }

    pub fn with_cap(k1: usize, k2: usize, ky: usize, cap: usize) -> Result<Self> {
        if k1 == 0 || k2 == 0 || ky == 0 {
            return Err(Error::Dims(format!("alphabet sizes must be >= 1, got {k1}x{k2}x{ky}")));
        }
        let cells = k1
            .checked_mul(k2)
            .and_then(|v| v.checked_mul(ky))
            .ok_or_else(|| Error::Dims("cell count overflows".into()))?;
        if cells > cap {
            return Err(Error::Dims(format!("{cells} cells exceed the cap of {cap}")));
        }
        Ok(Self { k1, k2, ky })
    }

    pub fn cells(&self) -> usize {
        self.k1 * self.k2 * self.ky
    }

    pub fn inputs(&self) -> usize {
        self.k1 * self.k2
    }

    #[inline]
    pub fn index(&self, x1: usize, x2: usize, y: usize) -> usize {
        (x1 * self.k2 + x2) * self.ky + y
    }

    #[inline]
    pub fn coords(&self, cell: usize) -> (usize, usize, usize) {
        let y = cell % self.ky;
        let r = cell / self.ky;
        (r / self.k2, r % self.k2, y)
    }

    /// Number of cells of the marginal over `axes`.
    pub fn marginal_len(&self, axes: Axes) -> usize {
        let mut n = 1;
        if axes.has(Axes::X1) {
            n *= self.k1;
        }
        if axes.has(Axes::X2) {
            n *= self.k2;
        }
        if axes.has(Axes::Y) {
            n *= self.ky;
        }
        n
    }

    /// Row-major index of `cell` projected onto `axes`.
    #[inline]
    pub fn marginal_index(&self, cell: usize, axes: Axes) -> usize {
        let (x1, x2, y) = self.coords(cell);
        let mut idx = 0;
        if axes.has(Axes::X1) {
            idx = x1;
        }
        if axes.has(Axes::X2) {
            idx = idx * self.k2 + x2;
        }
        if axes.has(Axes::Y) {
            idx = idx * self.ky + y;
        }
        idx
    }

    /// Projection map `cell -> marginal index`, precomputed.
    pub fn projection(&self, axes: Axes) -> Vec<usize> {
        (0..self.cells()).map(|c| self.marginal_index(c, axes)).collect()
    }
}

/// Sums `values` (indexed by cell) onto the marginal over `axes`.
pub fn marginalize(dims: &AlphabetDims, values: &[f64], axes: Axes) -> Vec<f64> {
    let mut out = vec![0.0; dims.marginal_len(axes)];
    for (c, v) in values.iter().enumerate() {
        out[dims.marginal_index(c, axes)] += v;
    }
    out
}

fn check_pmf(values: &[f64], what: &str) -> Result<()> {
    let mut sum = 0.0;
    for &v in values {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidPmf(format!("{what}: entry {v} is negative or non-finite")));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > PMF_TOL {
        return Err(Error::InvalidPmf(format!("{what}: entries sum to {sum}")));
    }
    Ok(())
}

fn renormalized(values: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidPmf(format!("{what}: negative or non-finite entry")));
    }
    let sum: f64 = values.iter().sum();
    if sum <= 0.0 {
        return Err(Error::InvalidPmf(format!("{what}: zero total mass")));
    }
    Ok(values.into_iter().map(|v| v / sum).collect())
}

/// Joint probability table over `X1 × X2 × Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    dims: AlphabetDims,
    p: Vec<f64>,
}

impl JointPmf {
    pub fn new(dims: AlphabetDims, p: Vec<f64>) -> Result<Self> {
        if p.len() != dims.cells() {
            return Err(Error::InvalidPmf(format!(
                "expected {} entries, got {}",
                dims.cells(),
                p.len()
            )));
        }
        check_pmf(&p, "joint pmf")?;
        Ok(Self { dims, p })
    }

    /// Explicit renormalization of a nonnegative table.
    pub fn renormalize(dims: AlphabetDims, p: Vec<f64>) -> Result<Self> {
        if p.len() != dims.cells() {
            return Err(Error::InvalidPmf("length mismatch".into()));
        }
        Ok(Self { dims, p: renormalized(p, "joint pmf")? })
    }

    /// `P = P_{X1X2} × W`.
    pub fn from_input_channel(input: &InputDist, channel: &ChannelSpec) -> Result<Self> {
        if input.dims.k1 != channel.dims.k1 || input.dims.k2 != channel.dims.k2 {
            return Err(Error::Dims("input distribution and channel disagree".into()));
        }
        let dims = channel.dims;
        let p = (0..dims.cells())
            .map(|c| input.p12[c / dims.ky] * channel.w[c])
            .collect();
        Ok(Self { dims, p })
    }

    pub(crate) fn from_raw(dims: AlphabetDims, p: Vec<f64>) -> Self {
        debug_assert_eq!(p.len(), dims.cells());
        Self { dims, p }
    }

    pub fn dims(&self) -> &AlphabetDims {
        &self.dims
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn get(&self, x1: usize, x2: usize, y: usize) -> f64 {
        self.p[self.dims.index(x1, x2, y)]
    }

    pub fn marginal(&self, axes: Axes) -> Vec<f64> {
        marginalize(&self.dims, &self.p, axes)
    }

    pub fn input(&self) -> InputDist {
        InputDist { dims: self.dims, p12: self.marginal(Axes::X1X2) }
    }

    /// Entropy (bits) of the marginal over `axes`.
    pub fn entropy(&self, axes: Axes) -> f64 {
        entropy(&self.marginal(axes))
    }

    /// `I(A;B|C)` in bits.
    pub fn mutual_info(&self, a: Axes, b: Axes, c: Axes) -> Result<f64> {
        if a.overlaps(b) || a.overlaps(c) || b.overlaps(c) {
            return Err(Error::OverlappingGroups);
        }
        let v = self.entropy(a | c) + self.entropy(b | c) - self.entropy(a | b | c) - self.entropy(c);
        Ok(v.max(0.0))
    }

    /// Infallible shorthand used internally with fixed, disjoint groups.
    pub(crate) fn mi(&self, a: Axes, b: Axes, c: Axes) -> f64 {
        self.mutual_info(a, b, c).expect("disjoint groups")
    }

    pub fn metric_expectation(&self, q: &[f64]) -> f64 {
        metric_expectation(&self.p, q)
    }

    pub fn divergence(&self, other: &JointPmf) -> f64 {
        divergence(&self.p, &other.p)
    }
}

/// Random-coding input distribution `P_{X1X2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDist {
    pub dims: AlphabetDims,
    pub p12: Vec<f64>,
}

impl InputDist {
    pub fn new(dims: AlphabetDims, p12: Vec<f64>) -> Result<Self> {
        if p12.len() != dims.inputs() {
            return Err(Error::InvalidPmf(format!(
                "input distribution needs {} entries, got {}",
                dims.inputs(),
                p12.len()
            )));
        }
        check_pmf(&p12, "input distribution")?;
        Ok(Self { dims, p12 })
    }

    pub fn renormalize(dims: AlphabetDims, p12: Vec<f64>) -> Result<Self> {
        if p12.len() != dims.inputs() {
            return Err(Error::InvalidPmf("length mismatch".into()));
        }
        Ok(Self { dims, p12: renormalized(p12, "input distribution")? })
    }

    pub fn uniform(dims: AlphabetDims) -> Self {
        let m = dims.inputs();
        Self { dims, p12: vec![1.0 / m as f64; m] }
    }

    /// Product `P1 × P2`.
    pub fn product(dims: AlphabetDims, p1: &[f64], p2: &[f64]) -> Result<Self> {
        if p1.len() != dims.k1 || p2.len() != dims.k2 {
            return Err(Error::InvalidPmf("marginal length mismatch".into()));
        }
        check_pmf(p1, "P_X1")?;
        check_pmf(p2, "P_X2")?;
        let p12 = p1.iter().flat_map(|a| p2.iter().map(move |b| a * b)).collect();
        Ok(Self { dims, p12 })
    }

    pub fn get(&self, x1: usize, x2: usize) -> f64 {
        self.p12[x1 * self.dims.k2 + x2]
    }

    pub fn p1(&self) -> Vec<f64> {
        (0..self.dims.k1)
            .map(|a| (0..self.dims.k2).map(|b| self.get(a, b)).sum())
            .collect()
    }

    pub fn p2(&self) -> Vec<f64> {
        (0..self.dims.k2)
            .map(|b| (0..self.dims.k1).map(|a| self.get(a, b)).sum())
            .collect()
    }

    /// `I(X1;X2)` in bits.
    pub fn mutual_info(&self) -> f64 {
        let h = entropy(&self.p1()) + entropy(&self.p2()) - entropy(&self.p12);
        h.max(0.0)
    }
}

/// Channel law `W(y|x1,x2)` together with the decoding metric `q(x1,x2,y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub dims: AlphabetDims,
    pub w: Vec<f64>,
    pub q: Vec<f64>,
}

impl ChannelSpec {
    pub fn new(dims: AlphabetDims, w: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(dims, w, q, PMF_TOL)
    }

    pub fn with_tolerance(dims: AlphabetDims, w: Vec<f64>, q: Vec<f64>, tol: f64) -> Result<Self> {
        if w.len() != dims.cells() || q.len() != dims.cells() {
            return Err(Error::InvalidChannel("table sizes do not match dims".into()));
        }
        for row in w.chunks(dims.ky) {
            let s: f64 = row.iter().sum();
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) || (s - 1.0).abs() > tol {
                return Err(Error::InvalidChannel(format!("row {row:?} is not a distribution")));
            }
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidChannel("metric entries must be finite".into()));
        }
        Ok(Self { dims, w, q })
    }

    /// Channel with the matched metric `q = log2 W`; zero-probability
    /// transitions get the finite value `floor`.
    pub fn matched(dims: AlphabetDims, w: Vec<f64>, floor: f64) -> Result<Self> {
        let q = w.iter().map(|&v| if v > 0.0 { v.log2().max(floor) } else { floor }).collect();
        Self::new(dims, w, q)
    }

    pub fn w(&self, x1: usize, x2: usize, y: usize) -> f64 {
        self.w[self.dims.index(x1, x2, y)]
    }

    pub fn q(&self, x1: usize, x2: usize, y: usize) -> f64 {
        self.q[self.dims.index(x1, x2, y)]
    }

    pub fn with_metric(&self, q: Vec<f64>) -> Result<Self> {
        Self::new(self.dims, self.w.clone(), q)
    }

    /// Same channel and metric with the users' roles exchanged
    /// (`X1 <-> X2`).
    pub fn swapped(&self) -> Self {
        let d = self.dims;
        let nd = AlphabetDims { k1: d.k2, k2: d.k1, ky: d.ky };
        let mut w = vec![0.0; d.cells()];
        let mut q = vec![0.0; d.cells()];
        for c in 0..d.cells() {
            let (a, b, y) = d.coords(c);
            let j = nd.index(b, a, y);
            w[j] = self.w[c];
            q[j] = self.q[c];
        }
        Self { dims: nd, w, q }
    }

    /// Range `max q - min q`, or 1 for a constant metric.
    pub fn metric_scale(&self) -> f64 {
        let (lo, hi) = self
            .q
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let r = hi - lo;
        if r > 0.0 {
            r
        } else {
            1.0
        }
    }
}

impl InputDist {
    pub fn swapped(&self) -> Self {
        let d = self.dims;
        let nd = AlphabetDims { k1: d.k2, k2: d.k1, ky: d.ky };
        let mut p12 = vec![0.0; d.inputs()];
        for a in 0..d.k1 {
            for b in 0..d.k2 {
                p12[b * d.k1 + a] = self.get(a, b);
            }
        }
        Self { dims: nd, p12 }
    }
}
