use super::{AlphabetDims, ChannelSpec, JointPmf};

pub const LN2: f64 = std::f64::consts::LN_2;

/// `x log2 x` with `0 log 0 = 0`.
#[inline]
pub fn xlog2x(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// Shannon entropy in bits of a probability vector.
pub fn entropy(p: &[f64]) -> f64 {
    let h: f64 = p.iter().map(|&v| -xlog2x(v)).sum();
    h.max(0.0)
}

/// `D(f || g)` in bits; `+inf` when `f` is not absolutely continuous
/// with respect to `g`.
pub fn divergence(f: &[f64], g: &[f64]) -> f64 {
    assert_eq!(f.len(), g.len(), "divergence of tables with different sizes");
    let mut d = 0.0;
    for (&a, &b) in f.iter().zip(g) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).log2();
        }
    }
    d.max(0.0)
}

/// `D(f || W | f_{X1X2}) = sum f log2 f(y|x1,x2) / W(y|x1,x2)`.
pub fn conditional_divergence(f: &JointPmf, channel: &ChannelSpec) -> f64 {
    let dims: &AlphabetDims = f.dims();
    let input = f.marginal(super::Axes::X1X2);
    let mut d = 0.0;
    for (c, &v) in f.probs().iter().enumerate() {
        if v > 0.0 {
            let w = channel.w[c];
            if w <= 0.0 {
                return f64::INFINITY;
            }
            d += v * (v / (input[c / dims.ky] * w)).log2();
        }
    }
    d.max(0.0)
}

/// `E_f{q}`.
pub fn metric_expectation(f: &[f64], q: &[f64]) -> f64 {
    assert_eq!(f.len(), q.len(), "metric table size mismatch");
    f.iter().zip(q).map(|(a, b)| a * b).sum()
}
