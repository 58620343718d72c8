//! JSON problem files.
//!
//! ```json
//! {
//!   "dims": [2, 2, 4],
//!   "W": [[[...], [...]], [[...], [...]]],
//!   "q": [[[...], [...]], [[...], [...]]],
//!   "P": [[0.25, 0.25], [0.25, 0.25]],
//!   "single_user": { "X": 4, "W_su": [[...]], "q_su": [[...]], "phi": [[0, 1], [2, 3]] }
//! }
//! ```
//!
//! Tables are indexed `[x1][x2][y]`. `P` is optional. `W` and `q` may be
//! omitted when a single-user block is present, in which case the channel
//! induced through `phi` is used.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{AlphabetDims, ChannelSpec, InputDist};
use crate::regions::{induced_channel, PhiMap, SingleUserChannel};

/// Tolerance on row sums of `W`.
pub const ROW_TOL: f64 = 1e-9;

type Table3 = Vec<Vec<Vec<f64>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleUserBlock {
    #[serde(rename = "X")]
    pub x: usize,
    #[serde(rename = "W_su")]
    pub w_su: Vec<Vec<f64>>,
    pub q_su: Vec<Vec<f64>>,
    pub phi: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dims: [usize; 3],
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Table3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Table3>,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub single_user: Option<SingleUserBlock>,
}

/// A validated problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub channel: ChannelSpec,
    pub input: Option<InputDist>,
    pub single_user: Option<(SingleUserChannel, PhiMap)>,
}

fn schema(msg: String) -> Error {
    Error::Schema(msg)
}

fn check_len<T>(v: &[T], n: usize, path: &str) -> Result<()> {
    if v.len() != n {
        return Err(schema(format!("{path}: expected {n} entries, found {}", v.len())));
    }
    Ok(())
}

fn flatten3(t: &Table3, d: &AlphabetDims, name: &str) -> Result<Vec<f64>> {
    check_len(t, d.k1, name)?;
    let mut out = Vec::with_capacity(d.cells());
    for (a, m) in t.iter().enumerate() {
        check_len(m, d.k2, &format!("{name}[{a}]"))?;
        for (b, row) in m.iter().enumerate() {
            check_len(row, d.ky, &format!("{name}[{a}][{b}]"))?;
            out.extend_from_slice(row);
        }
    }
    Ok(out)
}

fn flatten2(t: &[Vec<f64>], rows: usize, cols: usize, name: &str) -> Result<Vec<f64>> {
    check_len(t, rows, name)?;
    let mut out = Vec::with_capacity(rows * cols);
    for (a, row) in t.iter().enumerate() {
        check_len(row, cols, &format!("{name}[{a}]"))?;
        out.extend_from_slice(row);
    }
    Ok(out)
}

fn check_rows(w: &[f64], cols: usize, name: &str, index: impl Fn(usize) -> String) -> Result<()> {
    for (r, row) in w.chunks(cols).enumerate() {
        if let Some(y) = row.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(schema(format!("{name}{}[{y}]: probabilities must be finite and nonnegative", index(r))));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > ROW_TOL {
            return Err(schema(format!("{name}{}: row sums to {s}, not 1", index(r))));
        }
    }
    Ok(())
}

fn nest3(v: &[f64], d: &AlphabetDims) -> Table3 {
    v.chunks(d.k2 * d.ky).map(|m| m.chunks(d.ky).map(|r| r.to_vec()).collect()).collect()
}

fn nest2<T: Clone>(v: &[T], cols: usize) -> Vec<Vec<T>> {
    v.chunks(cols).map(|r| r.to_vec()).collect()
}

impl ProblemFile {
    /// Parses JSON text; syntax and type errors carry line and column.
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| schema(format!("problem file: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("problem files serialize");
        s.push('\n');
        s
    }

    /// Checks shapes and stochasticity and builds the library types.
    pub fn resolve(&self) -> Result<Problem> {
        let [k1, k2, ky] = self.dims;
        let d = AlphabetDims::new(k1, k2, ky).map_err(|e| schema(format!("dims: {e}")))?;
        let su = match &self.single_user {
            None => None,
            Some(b) => {
                if b.x == 0 {
                    return Err(schema("single_user.X: must be positive".into()));
                }
                let w = flatten2(&b.w_su, b.x, ky, "single_user.W_su")?;
                check_rows(&w, ky, "single_user.W_su", |r| format!("[{r}]"))?;
                let q = flatten2(&b.q_su, b.x, ky, "single_user.q_su")?;
                if let Some(i) = q.iter().position(|v| !v.is_finite()) {
                    return Err(schema(format!("single_user.q_su[{}][{}]: must be finite", i / ky, i % ky)));
                }
                check_len(&b.phi, k1, "single_user.phi")?;
                let mut map = Vec::with_capacity(k1 * k2);
                for (a, row) in b.phi.iter().enumerate() {
                    check_len(row, k2, &format!("single_user.phi[{a}]"))?;
                    for (c, &x) in row.iter().enumerate() {
                        if x >= b.x {
                            return Err(schema(format!("single_user.phi[{a}][{c}]: letter {x} outside X = {}", b.x)));
                        }
                    }
                    map.extend_from_slice(row);
                }
                Some((SingleUserChannel::new(b.x, ky, w, q)?, PhiMap::new(k1, k2, map)?))
            }
        };
        let channel = match (&self.w, &self.q, &su) {
            (Some(w), Some(q), _) => {
                let w = flatten3(w, &d, "W")?;
                check_rows(&w, ky, "W", |r| format!("[{}][{}]", r / k2, r % k2))?;
                let q = flatten3(q, &d, "q")?;
                if let Some(i) = q.iter().position(|v| !v.is_finite()) {
                    let (a, b, y) = d.coords(i);
                    return Err(schema(format!("q[{a}][{b}][{y}]: must be finite")));
                }
                ChannelSpec::with_tolerance(d, w, q, ROW_TOL)?
            }
            (None, None, Some((s, phi))) => induced_channel(s, phi)?,
            (None, _, _) => return Err(schema("W: missing (required without a single_user block)".into())),
            (_, None, _) => return Err(schema("q: missing (required without a single_user block)".into())),
        };
        let input = match &self.p {
            None => None,
            Some(p) => {
                let v = flatten2(p, k1, k2, "P")?;
                if v.iter().any(|x| !x.is_finite() || *x < 0.0) || (v.iter().sum::<f64>() - 1.0).abs() > ROW_TOL {
                    return Err(schema("P: must be a probability table".into()));
                }
                Some(InputDist::new(d, v)?)
            }
        };
        Ok(Problem { channel, input, single_user: su })
    }

    /// The file describing `problem`. A single-user block is written
    /// without `W` and `q` when the channel is the induced one.
    pub fn from_problem(problem: &Problem) -> Self {
        let ch = &problem.channel;
        let d = ch.dims;
        let single_user = problem.single_user.as_ref().map(|(s, phi)| SingleUserBlock {
            x: s.kx,
            w_su: nest2(&s.w, s.ky),
            q_su: nest2(&s.q, s.ky),
            phi: nest2(&phi.map, phi.k2),
        });
        let induced = problem
            .single_user
            .as_ref()
            .and_then(|(s, phi)| induced_channel(s, phi).ok())
            .is_some_and(|c| &c == ch);
        let (w, q) = if induced { (None, None) } else { (Some(nest3(&ch.w, &d)), Some(nest3(&ch.q, &d))) };
        ProblemFile {
            dims: [d.k1, d.k2, d.ky],
            w,
            q,
            p: problem.input.as_ref().map(|p| nest2(&p.p12, d.k2)),
            single_user,
        }
    }
}
