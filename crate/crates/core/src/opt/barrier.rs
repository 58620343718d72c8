//! Log-barrier Newton method on the reduced coordinates.
//!
//! The objective `F0 + max_k g_k` is handled with an epigraph variable
//! `s >= g_k`; each inequality `h_j <= 0` with an exact penalty `mu * u_j`,
//! `u_j >= max(0, h_j)`. All pieces are convex on the affine set, so every
//! start converges to the same value up to the barrier gap.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::program::{OpEval, Program, SmoothFn};

pub(crate) struct Outcome {
    pub v: DVector<f64>,
    pub value: f64,
    pub violation: f64,
    pub iters: usize,
    pub hit_cap: bool,
}

#[derive(Clone)]
struct State {
    z: DVector<f64>,
    s: f64,
    u: DVector<f64>,
}

struct Point {
    v: DVector<f64>,
    ev: Vec<OpEval>,
    g: Vec<f64>,
    h: Vec<f64>,
    f0: f64,
}

const PENALTIES: [f64; 3] = [1e2, 1e4, 1e6];
const T_GROWTH: f64 = 20.0;
const CENTER_CAP: usize = 200;

fn evaluate(prog: &Program, st: &State) -> Option<Point> {
    let v = prog.to_v(&st.z);
    if v.iter().any(|&x| !(x > 0.0)) {
        return None;
    }
    let ev = prog.eval_ops(&v);
    let g: Vec<f64> = prog.pieces.iter().map(|p| p.value(&v, &ev)).collect();
    if g.iter().any(|&gk| !(st.s > gk)) {
        return None;
    }
    let h: Vec<f64> = prog.penalties.iter().map(|p| p.value(&v, &ev)).collect();
    for (j, &hj) in h.iter().enumerate() {
        if !(st.u[j] > 0.0 && st.u[j] > hj) {
            return None;
        }
    }
    let f0 = prog.f0.value(&v, &ev);
    Some(Point { v, ev, g, h, f0 })
}

fn phi(st: &State, p: &Point, t: f64, mu: f64) -> f64 {
    let mut val = t * (p.f0 + st.s + mu * st.u.sum());
    val -= p.v.iter().map(|x| x.ln()).sum::<f64>();
    val -= p.g.iter().map(|gk| (st.s - gk).ln()).sum::<f64>();
    for (j, hj) in p.h.iter().enumerate() {
        val -= st.u[j].ln() + (st.u[j] - hj).ln();
    }
    val
}

fn add_smooth(
    prog: &Program,
    p: &Point,
    f: &SmoothFn,
    weight: f64,
    grad: &mut DVector<f64>,
    hess: &mut DMatrix<f64>,
) -> DVector<f64> {
    let d = prog.dim();
    let gz = f.grad_z(prog, &p.ev);
    let mut g = grad.rows_mut(0, d);
    g.axpy(weight, &gz, 1.0);
    if !f.is_linear() {
        let mut hz = DMatrix::zeros(d, d);
        f.add_hess_z(prog, &p.ev, weight, &mut hz);
        let mut block = hess.view_mut((0, 0), (d, d));
        block += hz;
    }
    gz
}

fn newton_system(prog: &Program, st: &State, p: &Point, t: f64, mu: f64) -> (DVector<f64>, DMatrix<f64>) {
    let d = prog.dim();
    let nk = prog.pieces.len();
    let nj = prog.penalties.len();
    let n = d + 1 + nj;
    let mut grad = DVector::zeros(n);
    let mut hess = DMatrix::zeros(n, n);

    if !prog.f0.ops.is_empty() || !prog.f0.linear.is_empty() {
        add_smooth(prog, p, &prog.f0, t, &mut grad, &mut hess);
    }
    grad[d] += t;
    for j in 0..nj {
        grad[d + 1 + j] += t * mu;
    }

    // -sum ln v
    let inv: DVector<f64> = p.v.map(|x| 1.0 / x);
    {
        let gz = -(prog.null.transpose() * &inv);
        let mut g = grad.rows_mut(0, d);
        g += gz;
        let mut scaled = prog.null.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= inv[i];
        }
        let mut block = hess.view_mut((0, 0), (d, d));
        block += scaled.transpose() * &scaled;
    }

    for k in 0..nk {
        let w = st.s - p.g[k];
        let gk = add_smooth(prog, p, &prog.pieces[k], 1.0 / w, &mut grad, &mut hess);
        grad[d] -= 1.0 / w;
        let w2 = w * w;
        {
            let mut block = hess.view_mut((0, 0), (d, d));
            block.ger(1.0 / w2, &gk, &gk, 1.0);
        }
        for i in 0..d {
            hess[(i, d)] -= gk[i] / w2;
            hess[(d, i)] -= gk[i] / w2;
        }
        hess[(d, d)] += 1.0 / w2;
    }

    for j in 0..nj {
        let u = st.u[j];
        let om = u - p.h[j];
        let gh = add_smooth(prog, p, &prog.penalties[j], 1.0 / om, &mut grad, &mut hess);
        let c = d + 1 + j;
        grad[c] -= 1.0 / u + 1.0 / om;
        let om2 = om * om;
        {
            let mut block = hess.view_mut((0, 0), (d, d));
            block.ger(1.0 / om2, &gh, &gh, 1.0);
        }
        for i in 0..d {
            hess[(i, c)] -= gh[i] / om2;
            hess[(c, i)] -= gh[i] / om2;
        }
        hess[(c, c)] += 1.0 / (u * u) + 1.0 / om2;
    }
    (grad, hess)
}

fn solve_spd(h: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = Cholesky::new(h.clone()) {
        return Some(ch.solve(rhs));
    }
    let scale = h.diagonal().amax().max(1.0);
    let mut delta = 1e-12 * scale;
    for _ in 0..12 {
        let mut hd = h.clone();
        for i in 0..hd.nrows() {
            hd[(i, i)] += delta;
        }
        if let Some(ch) = Cholesky::new(hd) {
            return Some(ch.solve(rhs));
        }
        delta *= 10.0;
    }
    None
}

fn step(st: &State, dx: &DVector<f64>, alpha: f64) -> State {
    let d = st.z.len();
    let mut out = st.clone();
    out.z.axpy(alpha, &dx.rows(0, d).into_owned(), 1.0);
    out.s += alpha * dx[d];
    for j in 0..st.u.len() {
        out.u[j] += alpha * dx[d + 1 + j];
    }
    out
}

/// Centering by damped Newton. Returns the number of Newton steps taken.
fn center(prog: &Program, st: &mut State, t: f64, mu: f64, budget: usize) -> usize {
    let mut iters = 0;
    let Some(mut cur) = evaluate(prog, st) else { return 0 };
    let mut f_cur = phi(st, &cur, t, mu);
    while iters < budget {
        let (grad, hess) = newton_system(prog, st, &cur, t, mu);
        let Some(dx) = solve_spd(&hess, &(-&grad)) else { break };
        let dec = -grad.dot(&dx);
        iters += 1;
        if !(dec > 2e-10) {
            break;
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-16 {
            let cand = step(st, &dx, alpha);
            if let Some(pc) = evaluate(prog, &cand) {
                let fc = phi(&cand, &pc, t, mu);
                if fc <= f_cur - 1e-4 * alpha * dec {
                    accepted = Some((cand, pc, fc));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((cand, pc, fc)) => {
                let stalled = f_cur - fc <= 1e-13 * (1.0 + f_cur.abs());
                *st = cand;
                cur = pc;
                f_cur = fc;
                if stalled {
                    break;
                }
            }
            None => break,
        }
    }
    iters
}

fn initial_state(prog: &Program, v: &DVector<f64>) -> Option<State> {
    let z = prog.to_z(v);
    let mut st = State { z, s: 0.0, u: DVector::zeros(prog.penalties.len()) };
    let vv = prog.to_v(&st.z);
    if vv.iter().any(|&x| !(x > 0.0)) {
        return None;
    }
    let ev = prog.eval_ops(&vv);
    let gmax = prog.pieces.iter().map(|p| p.value(&vv, &ev)).fold(f64::NEG_INFINITY, f64::max);
    st.s = gmax + 1.0;
    for (j, p) in prog.penalties.iter().enumerate() {
        st.u[j] = p.value(&vv, &ev).max(0.0) + 1.0;
    }
    Some(st)
}

fn reset_slacks(prog: &Program, st: &mut State) {
    let vv = prog.to_v(&st.z);
    let ev = prog.eval_ops(&vv);
    for (j, p) in prog.penalties.iter().enumerate() {
        let h = p.value(&vv, &ev);
        st.u[j] = st.u[j].max(h.max(0.0) + 1e-3);
    }
}

/// Runs the barrier method from a strictly positive feasible-for-equalities
/// point `v`.
pub(crate) fn solve(prog: &Program, v: &DVector<f64>, max_iters: usize, tol: f64) -> Option<Outcome> {
    let mut st = initial_state(prog, v)?;
    let nbar = (prog.m + prog.pieces.len() + 2 * prog.penalties.len()) as f64;
    let mut iters = 0;
    let mut hit_cap = false;
    let tol = tol.max(1e-13);
    for (round, &mu) in PENALTIES.iter().enumerate() {
        if round > 0 {
            reset_slacks(prog, &mut st);
        }
        let mut t = 1.0;
        loop {
            let left = max_iters.saturating_sub(iters);
            if left == 0 {
                hit_cap = true;
                break;
            }
            iters += center(prog, &mut st, t, mu, left.min(CENTER_CAP));
            if nbar / t < tol {
                break;
            }
            t *= T_GROWTH;
        }
        let vv = prog.to_v(&st.z);
        if prog.penalties.is_empty() || prog.literal_violation(vv.as_slice()) <= 1e-10 || hit_cap {
            break;
        }
    }
    let v = prog.to_v(&st.z);
    let value = prog.literal_value(v.as_slice());
    let violation = prog.literal_violation(v.as_slice());
    Some(Outcome { v, value, violation, iters, hit_cap })
}
