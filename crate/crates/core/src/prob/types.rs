use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::LN2;
use crate::error::{Error, Result};

/// Default blocklength cap for full type enumeration.
pub const DEFAULT_ENUMERATION_CAP: u32 = 24;

/// Integer occupation numbers of a length-`n` sequence over a finite set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TypeCount {
    pub n: u32,
    pub counts: Vec<u32>,
}

impl TypeCount {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        let n: u32 = counts.iter().sum();
        if n == 0 {
            return Err(Error::InconsistentTypes("blocklength must be positive".into()));
        }
        Ok(Self { n, counts })
    }

    pub fn empirical(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.n as f64).collect()
    }
}

/// Number of compositions of `n` into `m` nonnegative parts, `C(n+m-1, m-1)`.
pub fn composition_count(n: u32, m: usize) -> u128 {
    if m == 0 {
        return u128::from(n == 0);
    }
    binomial(n as u128 + m as u128 - 1, m as u128 - 1)
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k.min(n));
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

fn compositions(n: u32, m: usize, out: &mut Vec<Vec<u32>>) {
    fn rec(left: u32, slot: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slot + 1 == cur.len() {
            cur[slot] = left;
            out.push(cur.clone());
            return;
        }
        for v in (0..=left).rev() {
            cur[slot] = v;
            rec(left - v, slot + 1, cur, out);
        }
    }
    if m == 0 {
        return;
    }
    let mut cur = vec![0; m];
    rec(n, 0, &mut cur, out);
}

/// All types of length-`n` sequences over an alphabet of size `m`.
pub fn enumerate_types(n: u32, m: usize, cap: u32) -> Result<Vec<TypeCount>> {
    if n > cap {
        return Err(Error::Resource(format!("blocklength {n} exceeds enumeration cap {cap}")));
    }
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("need n >= 1 and a nonempty alphabet".into()));
    }
    let mut out = Vec::new();
    compositions(n, m, &mut out);
    Ok(out.into_iter().map(|counts| TypeCount { n, counts }).collect())
}

/// All joint types over `rows × cols` whose row sums equal `row_counts`
/// (conditional types given a sequence with type `row_counts`). Counts are
/// laid out row-major.
pub fn enumerate_conditional_types(row_counts: &[u32], cols: usize, cap: u32) -> Result<Vec<TypeCount>> {
    let n: u32 = row_counts.iter().sum();
    if n > cap {
        return Err(Error::Resource(format!("blocklength {n} exceeds enumeration cap {cap}")));
    }
    if n == 0 || cols == 0 {
        return Err(Error::InvalidArgument("need n >= 1 and a nonempty alphabet".into()));
    }
    let per_row: Vec<Vec<Vec<u32>>> = row_counts
        .iter()
        .map(|&r| {
            let mut v = Vec::new();
            compositions(r, cols, &mut v);
            v
        })
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; row_counts.len()];
    loop {
        let counts: Vec<u32> = idx
            .iter()
            .enumerate()
            .flat_map(|(r, &i)| per_row[r][i].iter().copied())
            .collect();
        out.push(TypeCount { n, counts });
        let mut r = 0;
        loop {
            if r == idx.len() {
                return Ok(out);
            }
            idx[r] += 1;
            if idx[r] < per_row[r].len() {
                break;
            }
            idx[r] = 0;
            r += 1;
        }
    }
}

/// `log2( (sum c)! / prod c! )`. Small coefficients are evaluated exactly;
/// larger ones via log-gamma.
pub fn log2_multinomial(counts: &[u32]) -> f64 {
    let n: u32 = counts.iter().sum();
    if n <= 60 {
        if let Some(v) = multinomial_exact(counts) {
            return (v as f64).log2();
        }
    }
    let mut v = ln_gamma(n as f64 + 1.0);
    for &c in counts {
        v -= ln_gamma(c as f64 + 1.0);
    }
    (v / LN2).max(0.0)
}

/// Exact multinomial coefficient, or `None` on overflow.
pub fn multinomial_exact(counts: &[u32]) -> Option<u128> {
    let mut total: u128 = 0;
    let mut r: u128 = 1;
    for &c in counts {
        for i in 1..=c as u128 {
            total += 1;
            r = r.checked_mul(total)? / i;
        }
    }
    Some(r)
}

/// `log2 |T(t)|`, or `log2 |T(t | x)|` when `conditioning` gives the type of
/// `x`. In the conditional case `t.counts` is laid out row-major with one row
/// per conditioning symbol.
pub fn log2_type_class_size(t: &TypeCount, conditioning: Option<&TypeCount>) -> Result<f64> {
    let sum: u32 = t.counts.iter().sum();
    if sum != t.n {
        return Err(Error::InconsistentTypes(format!("counts sum to {sum}, expected {}", t.n)));
    }
    match conditioning {
        None => Ok(log2_multinomial(&t.counts)),
        Some(cond) => {
            let k = cond.counts.len();
            if cond.n != t.n || k == 0 || !t.counts.len().is_multiple_of(k) {
                return Err(Error::InconsistentTypes("conditioning type does not match".into()));
            }
            let cols = t.counts.len() / k;
            let mut total = 0.0;
            for (row, &rc) in t.counts.chunks(cols).zip(&cond.counts) {
                if row.iter().sum::<u32>() != rc {
                    return Err(Error::InconsistentTypes(
                        "row sums disagree with the conditioning type".into(),
                    ));
                }
                total += log2_multinomial(row);
            }
            Ok(total)
        }
    }
}
