//! Monte Carlo simulation of the constant-composition superposition and
//! binning ensembles with a mismatched maximum-metric decoder, plus exact
//! small-blocklength ensemble error probabilities.
//!
//! Messages `(1, 1)` are sent. Event `E1`: a pair with another user-1
//! message reaches the transmitted metric. Event `E2`: another user-2
//! message of the transmitted user-1 message does. Ties count as errors.

mod exact;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{weighted::WeightedIndex, Distribution};
use serde::{Deserialize, Serialize};

pub use exact::{exact_bin_fail, exact_pe1_sup, exact_pe2_sup, EXACT_CAP};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::prob::{AlphabetDims, ChannelSpec, InputDist, TypeCount};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleScheme {
    Superposition,
    Binning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub scheme: EnsembleScheme,
    pub n: u32,
    pub r1: f64,
    pub r2: f64,
    /// Binning excess rate; `I_P(X1;X2) + n^{-1/2}` when absent.
    pub gamma: Option<f64>,
    pub input: InputDist,
    pub seed: u64,
}

impl EnsembleConfig {
    pub fn type_counts(&self) -> Result<Vec<u32>> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("blocklength must be positive".into()));
        }
        Ok(quantize_to_type(&self.input.p12, self.n))
    }

    /// The input distribution after rounding to an `n`-type.
    pub fn quantized_input(&self) -> Result<InputDist> {
        let c = self.type_counts()?;
        InputDist::new(self.input.dims, c.iter().map(|&v| v as f64 / self.n as f64).collect())
    }

    pub fn m1(&self) -> Result<f64> {
        codebook_size(self.n, self.r1)
    }

    pub fn m2(&self) -> Result<f64> {
        codebook_size(self.n, self.r2)
    }

    pub fn gamma_value(&self) -> Result<f64> {
        Ok(match self.gamma {
            Some(g) => g,
            None => self.quantized_input()?.mutual_info() + 1.0 / (self.n as f64).sqrt(),
        })
    }

    /// Codewords per bin, `ceil(2^(n gamma))`.
    pub fn bin_size(&self) -> Result<f64> {
        codebook_size(self.n, self.gamma_value()?)
    }
}

/// `ceil(2^(n r))`, required to be an exactly representable integer.
pub fn codebook_size(n: u32, r: f64) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument("rates must be finite and nonnegative".into()));
    }
    let e = n as f64 * r;
    if e > 52.0 {
        return Err(Error::Resource(format!("codebook of 2^{e:.1} words is too large")));
    }
    // Guard against 2^k landing one ulp above an integer.
    let v = e.exp2();
    let r = v.round();
    Ok(if (v - r).abs() <= 1e-9 * r { r } else { v.ceil() })
}

/// `(1 - a)^m`.
pub(crate) fn no_success(a: f64, m: f64) -> f64 {
    if a >= 1.0 {
        if m > 0.0 {
            0.0
        } else {
            1.0
        }
    } else if a <= 0.0 {
        1.0
    } else {
        (m * (-a).ln_1p()).exp()
    }
}

/// `a >= b` up to accumulated rounding in metric sums.
pub(crate) fn metric_ge(a: f64, b: f64) -> bool {
    a >= b - 1e-9 * (1.0 + b.abs())
}

/// Largest-remainder rounding of `p` to counts summing to `n`; ties go to
/// the lower index.
pub fn quantize_to_type(p: &[f64], n: u32) -> Vec<u32> {
    let scaled: Vec<f64> = p.iter().map(|&x| x * n as f64).collect();
    let mut c: Vec<u32> = scaled.iter().map(|x| x.floor() as u32).collect();
    let left = n.saturating_sub(c.iter().sum());
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| (scaled[b] - scaled[b].floor()).total_cmp(&(scaled[a] - scaled[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().take(left as usize) {
        c[i] += 1;
    }
    c
}

/// Uniform draw from the type class of `t`.
pub fn draw_from_type<R: Rng + ?Sized>(t: &TypeCount, rng: &mut R) -> Vec<usize> {
    let mut v: Vec<usize> = t.counts.iter().enumerate().flat_map(|(s, &c)| std::iter::repeat_n(s, c as usize)).collect();
    v.shuffle(rng);
    v
}

/// Uniform draw from the conditional type class `T(joint | cond)`: `joint`
/// holds counts row-major with one row of `cols` entries per symbol of
/// `cond`.
pub fn draw_conditional<R: Rng + ?Sized>(cond: &[usize], joint: &[u32], cols: usize, rng: &mut R) -> Result<Vec<usize>> {
    if cols == 0 || !joint.len().is_multiple_of(cols) {
        return Err(Error::Dims("joint counts do not split into rows".into()));
    }
    let rows = joint.len() / cols;
    let mut pos: Vec<Vec<usize>> = vec![Vec::new(); rows];
    for (i, &a) in cond.iter().enumerate() {
        if a >= rows {
            return Err(Error::Dims(format!("symbol {a} outside the conditioning alphabet")));
        }
        pos[a].push(i);
    }
    let mut out = vec![0usize; cond.len()];
    for (a, row) in joint.chunks(cols).enumerate() {
        if row.iter().sum::<u32>() as usize != pos[a].len() {
            return Err(Error::InconsistentTypes("conditional type class is empty".into()));
        }
        let t = TypeCount { n: pos[a].len() as u32, counts: row.to_vec() };
        for (&i, s) in pos[a].iter().zip(draw_from_type(&t, rng)) {
            out[i] = s;
        }
    }
    Ok(out)
}

/// 95% Wilson score interval.
pub fn wilson(count: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959963984540054;
    let n = trials as f64;
    let p = count as f64 / n;
    let d = 1.0 + Z * Z / n;
    let c = (p + Z * Z / (2.0 * n)) / d;
    let h = Z * (p * (1.0 - p) / n + Z * Z / (4.0 * n * n)).sqrt() / d;
    ((c - h).max(0.0), (c + h).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub count: u64,
    pub rate: f64,
    pub ci: (f64, f64),
    /// `-(1/n) log2 rate`, only with at least 20 events.
    pub exponent: Option<f64>,
    pub exponent_ci: Option<(f64, f64)>,
}

impl Estimate {
    fn new(count: u64, trials: u64, n: u32) -> Self {
        let rate = if trials == 0 { 0.0 } else { count as f64 / trials as f64 };
        let ci = wilson(count, trials);
        let ex = |r: f64| -r.log2() / n as f64;
        let (exponent, exponent_ci) = if count >= 20 { (Some(ex(rate)), Some((ex(ci.1), ex(ci.0)))) } else { (None, None) };
        Self { count, rate, ci, exponent, exponent_ci }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: EnsembleConfig,
    /// Joint input counts actually used.
    pub type_counts: Vec<u32>,
    pub trials: u64,
    pub m1: f64,
    pub m2: f64,
    pub bin_size: Option<f64>,
    /// `E1`.
    pub err1_count: u64,
    /// `E2` without `E1`.
    pub err2_count: u64,
    /// `E2` regardless of `E1`.
    pub e2_event_count: u64,
    pub encode_fail_count: u64,
    /// Encoding failures plus decoding errors.
    pub error_count: u64,
    pub err1: Estimate,
    pub err2: Estimate,
    pub e2_event: Estimate,
    pub encode_fail: Estimate,
    pub total: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub exec: Exec,
    /// Cap on `trials * M1 * M2 * n` (times the bin size for binning).
    pub budget: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { exec: Exec::default(), budget: 1e11 }
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    e1: bool,
    e2: bool,
    fail: bool,
}

struct Ctx<'a> {
    dims: AlphabetDims,
    n: usize,
    c12: Vec<u32>,
    t1: TypeCount,
    t2: TypeCount,
    m1: u64,
    m2: u64,
    bin: u64,
    q: &'a [f64],
    out: Vec<WeightedIndex<f64>>,
}

impl Ctx<'_> {
    fn metric(&self, x1: &[usize], x2: &[usize], y: &[usize]) -> f64 {
        let d = &self.dims;
        (0..self.n).map(|i| self.q[d.index(x1[i], x2[i], y[i])]).sum()
    }

    fn transmit<R: Rng>(&self, x1: &[usize], x2: &[usize], rng: &mut R) -> Vec<usize> {
        (0..self.n).map(|i| self.out[x1[i] * self.dims.k2 + x2[i]].sample(rng)).collect()
    }

    fn typical(&self, x1: &[usize], x2: &[usize]) -> bool {
        let mut c = vec![0u32; self.c12.len()];
        for i in 0..self.n {
            c[x1[i] * self.dims.k2 + x2[i]] += 1;
        }
        c == self.c12
    }

    fn sup_trial<R: Rng>(&self, rng: &mut R) -> Tally {
        let k2 = self.dims.k2;
        let x1 = draw_from_type(&self.t1, rng);
        let x2 = draw_conditional(&x1, &self.c12, k2, rng).expect("valid type");
        let y = self.transmit(&x1, &x2, rng);
        let t = self.metric(&x1, &x2, &y);
        let mut r = Tally::default();
        for _ in 1..self.m2 {
            let c = draw_conditional(&x1, &self.c12, k2, rng).expect("valid type");
            if metric_ge(self.metric(&x1, &c, &y), t) {
                r.e2 = true;
                break;
            }
        }
        'outer: for _ in 1..self.m1 {
            let a = draw_from_type(&self.t1, rng);
            for _ in 0..self.m2 {
                let b = draw_conditional(&a, &self.c12, k2, rng).expect("valid type");
                if metric_ge(self.metric(&a, &b, &y), t) {
                    r.e1 = true;
                    break 'outer;
                }
            }
        }
        r
    }

    fn bin_trial<R: Rng>(&self, rng: &mut R) -> Tally {
        let bins: Vec<Vec<Vec<usize>>> =
            (0..self.m2).map(|_| (0..self.bin).map(|_| draw_from_type(&self.t2, rng)).collect()).collect();
        let encode = |x1: &[usize], j: usize| bins[j].iter().find(|x2| self.typical(x1, x2));
        let x1 = draw_from_type(&self.t1, rng);
        let mut r = Tally::default();
        let Some(x2) = encode(&x1, 0) else {
            r.fail = true;
            return r;
        };
        let y = self.transmit(&x1, x2, rng);
        let t = self.metric(&x1, x2, &y);
        for j in 1..self.m2 as usize {
            if let Some(c) = encode(&x1, j) {
                if metric_ge(self.metric(&x1, c, &y), t) {
                    r.e2 = true;
                    break;
                }
            }
        }
        'outer: for _ in 1..self.m1 {
            let a = draw_from_type(&self.t1, rng);
            for j in 0..self.m2 as usize {
                if let Some(c) = encode(&a, j) {
                    if metric_ge(self.metric(&a, c, &y), t) {
                        r.e1 = true;
                        break 'outer;
                    }
                }
            }
        }
        r
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Runs `trials` independent draws of the ensemble.
pub fn simulate(cfg: &EnsembleConfig, channel: &ChannelSpec, trials: u64, opts: &SimOptions) -> Result<SimReport> {
    let dims = channel.dims;
    if cfg.input.dims != dims {
        return Err(Error::Dims("input distribution does not match the channel".into()));
    }
    let c12 = cfg.type_counts()?;
    let n = cfg.n;
    let mut n1 = vec![0u32; dims.k1];
    let mut n2 = vec![0u32; dims.k2];
    for (i, &c) in c12.iter().enumerate() {
        n1[i / dims.k2] += c;
        n2[i % dims.k2] += c;
    }
    let m1 = cfg.m1()?;
    let m2 = cfg.m2()?;
    let bin = match cfg.scheme {
        EnsembleScheme::Binning => Some(cfg.bin_size()?),
        EnsembleScheme::Superposition => None,
    };
    let work = trials as f64 * m1 * m2 * n as f64 * bin.unwrap_or(1.0);
    if work > opts.budget {
        return Err(Error::Resource(format!("simulation work {work:.3e} exceeds the budget {:.3e}", opts.budget)));
    }
    let out = channel
        .w
        .chunks(dims.ky)
        .map(|row| WeightedIndex::new(row.to_vec()).map_err(|e| Error::InvalidChannel(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let ctx = Ctx {
        dims,
        n: n as usize,
        t1: TypeCount { n, counts: n1 },
        t2: TypeCount { n, counts: n2 },
        c12: c12.clone(),
        m1: m1 as u64,
        m2: m2 as u64,
        bin: bin.unwrap_or(1.0) as u64,
        q: &channel.q,
        out,
    };
    let tallies = opts.exec.map_range(trials as usize, |t| {
        let mut rng = trial_rng(cfg.seed, t as u64);
        match cfg.scheme {
            EnsembleScheme::Superposition => ctx.sup_trial(&mut rng),
            EnsembleScheme::Binning => ctx.bin_trial(&mut rng),
        }
    });
    let count = |f: &dyn Fn(&Tally) -> bool| tallies.iter().filter(|t| f(t)).count() as u64;
    let err1 = count(&|t| t.e1);
    let err2 = count(&|t| t.e2 && !t.e1);
    let e2 = count(&|t| t.e2);
    let fail = count(&|t| t.fail);
    let total = err1 + err2 + fail;
    Ok(SimReport {
        config: cfg.clone(),
        type_counts: c12,
        trials,
        m1,
        m2,
        bin_size: bin,
        err1_count: err1,
        err2_count: err2,
        e2_event_count: e2,
        encode_fail_count: fail,
        error_count: total,
        err1: Estimate::new(err1, trials, n),
        err2: Estimate::new(err2, trials, n),
        e2_event: Estimate::new(e2, trials, n),
        encode_fail: Estimate::new(fail, trials, n),
        total: Estimate::new(total, trials, n),
    })
}
