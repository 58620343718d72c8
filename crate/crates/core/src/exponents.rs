//! Random-coding error exponents of the superposition and binning schemes.
//!
//! Each component is a nested minimization over `P'` with the same input
//! marginal as `P` (cost `D(P'||P)`) and an inner `P~` coupled to `P'`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::opt::{minimize_nested_from, InnerSet, Objective, OptResult, OptStatus, SolverOptions};
use crate::prob::{Axes, InputDist, JointPmf};

/// Exponents at or below this are reported as zero.
pub const ZERO_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Sup,
    Bin,
}

/// One nested minimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub value: f64,
    pub p_prime: JointPmf,
    pub p_tilde: Option<JointPmf>,
    pub status: OptStatus,
    pub certificate_gap: f64,
}

impl Component {
    fn from_result(r: OptResult) -> Self {
        Self {
            value: r.value.max(0.0),
            p_prime: r.argmin,
            p_tilde: r.argmin_inner,
            status: r.status,
            certificate_gap: r.certificate_gap,
        }
    }

    fn warm(&self) -> Option<(JointPmf, JointPmf)> {
        self.p_tilde.clone().map(|t| (self.p_prime.clone(), t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentResult {
    pub r1: f64,
    pub r2: f64,
    pub anchor: InputDist,
    pub e2: Component,
    /// `E1(P,R1,R2)`, user 1 under superposition.
    pub e1_r1r2: Component,
    /// `E1(P,R1)`, user 1 under binning.
    pub e1_r1: Component,
    pub e0b: Component,
    pub e0: f64,
    pub e_sup: f64,
    pub e_bin: f64,
    pub inside_sup: bool,
    pub inside_bin: bool,
    pub degraded: bool,
}

impl ExponentResult {
    pub fn scheme_value(&self, scheme: Scheme) -> f64 {
        match scheme {
            Scheme::Sup => self.e_sup,
            Scheme::Bin => self.e_bin,
        }
    }

    pub fn inside(&self, scheme: Scheme) -> bool {
        match scheme {
            Scheme::Sup => self.inside_sup,
            Scheme::Bin => self.inside_bin,
        }
    }
}

/// The two terms whose maximum is the binning user-1 exponent at a fixed
/// `P~`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiTerms {
    pub psi1: f64,
    pub psi2: f64,
}

pub fn psi_terms(p_tilde: &JointPmf, r1: f64, r2: f64) -> PsiTerms {
    let i12 = p_tilde.mi(Axes::X1, Axes::X2, Axes::NONE);
    PsiTerms {
        psi1: Objective::ExpSupUser1 { r1, r2 }.eval(p_tilde).max(0.0),
        psi2: Objective::ExpBinJoint { r1, r2, i12 }.eval(p_tilde).max(0.0),
    }
}

fn check_rates(r: &[f64]) -> Result<()> {
    if r.iter().all(|x| *x >= 0.0 && x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument("rates must be finite and nonnegative".into()))
    }
}

fn nested(p: &JointPmf, q: &[f64], inner: InnerSet, obj: Objective, opts: &SolverOptions, warm: &[(JointPmf, JointPmf)]) -> Result<Component> {
    Ok(Component::from_result(minimize_nested_from(p, q, inner, &obj, opts, warm)?))
}

pub fn exponent_e2(p: &JointPmf, q: &[f64], r2: f64, opts: &SolverOptions) -> Result<Component> {
    check_rates(&[r2])?;
    nested(p, q, InnerSet::L2, Objective::ExpUser2 { r2 }, opts, &[])
}

pub fn exponent_e1_sup(p: &JointPmf, q: &[f64], r1: f64, r2: f64, opts: &SolverOptions) -> Result<Component> {
    check_rates(&[r1, r2])?;
    nested(p, q, InnerSet::L0, Objective::ExpSupUser1 { r1, r2 }, opts, &[])
}

pub fn exponent_e1_bin(p: &JointPmf, q: &[f64], r1: f64, opts: &SolverOptions) -> Result<Component> {
    check_rates(&[r1])?;
    nested(p, q, InnerSet::L1, Objective::ExpBinUser1 { r1 }, opts, &[])
}

pub fn exponent_e0b(p: &JointPmf, q: &[f64], r1: f64, r2: f64, opts: &SolverOptions) -> Result<Component> {
    check_rates(&[r1, r2])?;
    let i12 = p.mi(Axes::X1, Axes::X2, Axes::NONE);
    nested(p, q, InnerSet::L0, Objective::ExpBinJoint { r1, r2, i12 }, opts, &[])
}

fn assemble(p: &JointPmf, r1: f64, r2: f64, c: [Component; 4]) -> ExponentResult {
    let [e2, e1_r1r2, e1_r1, e0b] = c;
    let e0 = e1_r1r2.value.max(e0b.value);
    let e_sup = e2.value.min(e1_r1r2.value);
    let e_bin = e2.value.min(e0).min(e1_r1.value);
    let degraded = [&e2, &e1_r1r2, &e1_r1, &e0b].iter().any(|c| c.status != OptStatus::Converged);
    ExponentResult {
        r1,
        r2,
        anchor: p.input(),
        inside_sup: e_sup > ZERO_TOL,
        inside_bin: e_bin > ZERO_TOL,
        e2,
        e1_r1r2,
        e1_r1,
        e0b,
        e0,
        e_sup,
        e_bin,
        degraded,
    }
}

fn components(p: &JointPmf, q: &[f64], r1: f64, r2: f64, opts: &SolverOptions, warm: &[&ExponentResult]) -> Result<[Component; 4]> {
    let w = |f: fn(&ExponentResult) -> &Component| -> Vec<(JointPmf, JointPmf)> {
        warm.iter().filter_map(|r| f(r).warm()).collect()
    };
    let i12 = p.mi(Axes::X1, Axes::X2, Axes::NONE);
    Ok([
        nested(p, q, InnerSet::L2, Objective::ExpUser2 { r2 }, opts, &w(|r| &r.e2))?,
        nested(p, q, InnerSet::L0, Objective::ExpSupUser1 { r1, r2 }, opts, &w(|r| &r.e1_r1r2))?,
        nested(p, q, InnerSet::L1, Objective::ExpBinUser1 { r1 }, opts, &w(|r| &r.e1_r1))?,
        nested(p, q, InnerSet::L0, Objective::ExpBinJoint { r1, r2, i12 }, opts, &w(|r| &r.e0b))?,
    ])
}

/// All components and both scheme exponents at one rate pair.
pub fn scheme_exponents(p: &JointPmf, q: &[f64], r1: f64, r2: f64, opts: &SolverOptions) -> Result<ExponentResult> {
    check_rates(&[r1, r2])?;
    Ok(assemble(p, r1, r2, components(p, q, r1, r2, opts, &[])?))
}

fn better(a: Component, b: Component) -> Component {
    if b.value < a.value - 1e-12 {
        b
    } else {
        a
    }
}

/// Exponents along a sequence of rate pairs. After a cold pass, every
/// point is re-solved from its neighbours' minimizers and the smaller value
/// is kept; the result does not depend on the worker count.
pub fn exponent_sweep(p: &JointPmf, q: &[f64], rates: &[(f64, f64)], opts: &SolverOptions) -> Result<Vec<ExponentResult>> {
    for &(a, b) in rates {
        check_rates(&[a, b])?;
    }
    let inner = opts.clone().with_exec(crate::Exec::Sequential);
    let cold: Vec<ExponentResult> = opts
        .exec
        .map_slice(rates, |&(r1, r2)| scheme_exponents(p, q, r1, r2, &inner))
        .into_iter()
        .collect::<Result<_>>()?;
    let n = rates.len();
    opts.exec
        .map_range(n, |i| {
            let mut nb = Vec::new();
            if i > 0 {
                nb.push(&cold[i - 1]);
            }
            if i + 1 < n {
                nb.push(&cold[i + 1]);
            }
            if nb.is_empty() {
                return Ok(cold[i].clone());
            }
            let (r1, r2) = rates[i];
            let warm = components(p, q, r1, r2, &inner.clone().with_starts(0), &nb)?;
            let base = cold[i].clone();
            let [a, b, c, d] = warm;
            Ok(assemble(
                p,
                r1,
                r2,
                [better(base.e2, a), better(base.e1_r1r2, b), better(base.e1_r1, c), better(base.e0b, d)],
            ))
        })
        .into_iter()
        .collect()
}
