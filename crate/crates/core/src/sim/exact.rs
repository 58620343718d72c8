//! Exact ensemble error probabilities by type enumeration.
//!
//! The transmitted pair is a fixed representative of `T(P)`; by symmetry
//! only the conditional type of `y` given it matters.

use crate::error::{Error, Result};
use crate::prob::{enumerate_conditional_types, log2_multinomial};
use crate::prob::{AlphabetDims, ChannelSpec};

use super::{metric_ge, no_success};

/// Default blocklength cap of the exact oracles.
pub const EXACT_CAP: u32 = 14;

/// Probability that a uniform `x2 ~ T(P12 | x1)` is jointly typical with a
/// fixed `x1`, i.e. `|T(P_{X2|X1})| / |T(P_{X2})|`, from joint counts.
fn typical_ratio(dims: &AlphabetDims, p12: &[u32]) -> f64 {
    let mut col = vec![0u32; dims.k2];
    let mut log = 0.0;
    for row in p12.chunks(dims.k2) {
        log += log2_multinomial(row);
        for (c, v) in col.iter_mut().zip(row) {
            *c += v;
        }
    }
    (log - log2_multinomial(&col)).exp2()
}

/// Probability that binning fails to find a jointly typical codeword among
/// `ceil(2^(n gamma))` candidates.
pub fn exact_bin_fail(dims: &AlphabetDims, p12: &[u32], gamma: f64) -> Result<f64> {
    if p12.len() != dims.inputs() {
        return Err(Error::Dims("joint counts do not match the alphabets".into()));
    }
    let n: u32 = p12.iter().sum();
    if n == 0 || !(gamma >= 0.0) {
        return Err(Error::InvalidArgument("need n >= 1 and gamma >= 0".into()));
    }
    let k = super::codebook_size(n, gamma)?;
    Ok(no_success(typical_ratio(dims, p12), k))
}

/// Distribution of the metric sum of one `x1`-block: positions with
/// `x1 = a`, outputs of type `m_y`, and `x2'` uniformly arranged with counts
/// `c_b`. Returned as `(value, probability)` pairs.
fn block_distribution(a: usize, m: &[u32], c: &[u32], q: &[f64], dims: &AlphabetDims) -> Result<Vec<(f64, f64)>> {
    let total: u32 = c.iter().sum();
    if total == 0 {
        return Ok(vec![(0.0, 1.0)]);
    }
    // Rows: output symbols; columns: x2 values. Row sums m, column sums c.
    let tables = enumerate_conditional_types(m, dims.k2, u32::MAX)?;
    let denom = log2_multinomial(c);
    let mut out = Vec::new();
    for t in tables {
        let mut col = vec![0u32; dims.k2];
        for (i, &v) in t.counts.iter().enumerate() {
            col[i % dims.k2] += v;
        }
        if col != c {
            continue;
        }
        let mut lw = -denom;
        let mut val = 0.0;
        for (y, row) in t.counts.chunks(dims.k2).enumerate() {
            lw += log2_multinomial(row);
            for (b, &v) in row.iter().enumerate() {
                val += v as f64 * q[dims.index(a, b, y)];
            }
        }
        out.push((val, lw.exp2()));
    }
    Ok(out)
}

/// Probability that a uniform `x2' ~ T(P12 | x1)` reaches metric `>= t`
/// given the `(x1, y)` joint counts `m` (`k1 x ky`, row-major).
fn beat_prob(m: &[u32], c12: &[u32], q: &[f64], t: f64, dims: &AlphabetDims) -> Result<f64> {
    let mut dist = vec![(0.0, 1.0)];
    for a in 0..dims.k1 {
        let block = block_distribution(a, &m[a * dims.ky..(a + 1) * dims.ky], &c12[a * dims.k2..(a + 1) * dims.k2], q, dims)?;
        let mut next = Vec::with_capacity(dist.len() * block.len());
        for &(v0, p0) in &dist {
            for &(v1, p1) in &block {
                next.push((v0 + v1, p0 * p1));
            }
        }
        dist = next;
    }
    Ok(dist.iter().filter(|(v, _)| metric_ge(*v, t)).map(|(_, p)| p).sum::<f64>().min(1.0))
}

/// A conditional output type with its probability and metric.
struct OutputType {
    prob: f64,
    metric: f64,
    /// `(x1, y)` joint counts.
    m: Vec<u32>,
    /// Output type.
    ny: Vec<u32>,
}

fn output_types(dims: &AlphabetDims, ch: &ChannelSpec, c12: &[u32], cap: u32) -> Result<Vec<OutputType>> {
    let n: u32 = c12.iter().sum();
    if n > cap {
        return Err(Error::Resource(format!("blocklength {n} exceeds the exact-oracle cap {cap}")));
    }
    let vs = enumerate_conditional_types(c12, dims.ky, cap)?;
    let mut out = Vec::new();
    for v in vs {
        let mut lp = 0.0;
        let mut metric = 0.0;
        let mut zero = false;
        let mut m = vec![0u32; dims.k1 * dims.ky];
        let mut ny = vec![0u32; dims.ky];
        for (cell, row) in v.counts.chunks(dims.ky).enumerate() {
            lp += log2_multinomial(row);
            let a = cell / dims.k2;
            for (y, &k) in row.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let idx = cell * dims.ky + y;
                if ch.w[idx] <= 0.0 {
                    zero = true;
                }
                lp += k as f64 * ch.w[idx].log2();
                metric += k as f64 * ch.q[idx];
                m[a * dims.ky + y] += k;
                ny[y] += k;
            }
        }
        if !zero {
            out.push(OutputType { prob: lp.exp2(), metric, m, ny });
        }
    }
    Ok(out)
}

fn check(dims: &AlphabetDims, ch: &ChannelSpec, c12: &[u32]) -> Result<()> {
    if ch.dims != *dims || c12.len() != dims.inputs() {
        return Err(Error::Dims("joint counts do not match the channel".into()));
    }
    if c12.iter().sum::<u32>() == 0 {
        return Err(Error::InvalidArgument("blocklength must be positive".into()));
    }
    Ok(())
}

/// Probability that some other codeword of the transmitted cloud reaches
/// the transmitted metric (ties count), under superposition coding.
pub fn exact_pe2_sup(ch: &ChannelSpec, c12: &[u32], m2: f64, cap: u32) -> Result<f64> {
    let dims = ch.dims;
    check(&dims, ch, c12)?;
    if m2 < 1.0 {
        return Err(Error::InvalidArgument("codebook size must be at least 1".into()));
    }
    if m2 == 1.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for v in output_types(&dims, ch, c12, cap)? {
        let a = beat_prob(&v.m, c12, &ch.q, v.metric, &dims)?;
        total += v.prob * (1.0 - no_success(a, m2 - 1.0));
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Probability that some codeword pair of another cloud reaches the
/// transmitted metric (ties count), under superposition coding.
pub fn exact_pe1_sup(ch: &ChannelSpec, c12: &[u32], m1: f64, m2: f64, cap: u32) -> Result<f64> {
    let dims = ch.dims;
    check(&dims, ch, c12)?;
    if m1 < 1.0 || m2 < 1.0 {
        return Err(Error::InvalidArgument("codebook sizes must be at least 1".into()));
    }
    if m1 == 1.0 {
        return Ok(0.0);
    }
    let mut n1 = vec![0u32; dims.k1];
    for (i, &c) in c12.iter().enumerate() {
        n1[i / dims.k2] += c;
    }
    let denom = log2_multinomial(&n1);
    let mut total = 0.0;
    for v in output_types(&dims, ch, c12, cap)? {
        // Joint types of (x1', y): columns per output symbol over x1.
        let tables = enumerate_conditional_types(&v.ny, dims.k1, cap)?;
        let mut b = 0.0;
        for t in tables {
            let mut rows = vec![0u32; dims.k1];
            let mut m = vec![0u32; dims.k1 * dims.ky];
            let mut lw = -denom;
            for (y, col) in t.counts.chunks(dims.k1).enumerate() {
                lw += log2_multinomial(col);
                for (a, &k) in col.iter().enumerate() {
                    rows[a] += k;
                    m[a * dims.ky + y] += k;
                }
            }
            if rows != n1 {
                continue;
            }
            let a = beat_prob(&m, c12, &ch.q, v.metric, &dims)?;
            b += lw.exp2() * (1.0 - no_success(a, m2));
        }
        total += v.prob * (1.0 - no_success(b.min(1.0), m1 - 1.0));
    }
    Ok(total.clamp(0.0, 1.0))
}
