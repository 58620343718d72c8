//! Objective catalog. Every objective is an expression tree of mutual
//! information terms, sums and positive parts; it can be evaluated literally
//! on a pmf or expanded into the list of smooth pieces whose pointwise
//! maximum it equals (`a + |b|^+ = max(a, a + b)`).

use serde::{Deserialize, Serialize};

use crate::prob::{Axes, JointPmf};

/// `I(A;B|C)` over the three variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mi {
    pub a: Axes,
    pub b: Axes,
    pub c: Axes,
}

impl Mi {
    pub const fn new(a: Axes, b: Axes, c: Axes) -> Self {
        Self { a, b, c }
    }

    pub fn eval(&self, f: &JointPmf) -> f64 {
        f.mi(self.a, self.b, self.c)
    }

    /// Entropy expansion `H(AC) + H(BC) - H(ABC) - H(C)`.
    pub fn entropies(&self) -> [(Axes, f64); 4] {
        [
            (self.a | self.c, 1.0),
            (self.b | self.c, 1.0),
            (self.a | self.b | self.c, -1.0),
            (self.c, -1.0),
        ]
    }
}

pub const I_X1_Y: Mi = Mi::new(Axes::X1, Axes::Y, Axes::NONE);
pub const I_X2_Y: Mi = Mi::new(Axes::X2, Axes::Y, Axes::NONE);
pub const I_X12_Y: Mi = Mi::new(Axes::X1X2, Axes::Y, Axes::NONE);
pub const I_X1_YX2: Mi = Mi::new(Axes::X1, Axes::X2Y, Axes::NONE);
pub const I_X2_Y_GIVEN_X1: Mi = Mi::new(Axes::X2, Axes::Y, Axes::X1);
pub const I_X1_Y_GIVEN_X2: Mi = Mi::new(Axes::X1, Axes::Y, Axes::X2);
pub const I_X1_X2: Mi = Mi::new(Axes::X1, Axes::X2, Axes::NONE);

/// Linear combination of mutual informations plus a constant.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Lin {
    pub terms: Vec<(f64, Mi)>,
    pub constant: f64,
}

impl Lin {
    pub fn mi(m: Mi) -> Self {
        Self { terms: vec![(1.0, m)], constant: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: vec![], constant: c }
    }

    pub fn plus(mut self, coef: f64, m: Mi) -> Self {
        self.terms.push((coef, m));
        self
    }

    pub fn offset(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn eval(&self, f: &JointPmf) -> f64 {
        self.constant + self.terms.iter().map(|(c, m)| c * m.eval(f)).sum::<f64>()
    }

    fn add(&self, other: &Lin) -> Lin {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().copied());
        Lin { terms, constant: self.constant + other.constant }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Tree {
    Lin(Lin),
    Sum(Vec<Tree>),
    Pos(Box<Tree>),
}

impl Tree {
    pub fn pos(t: Tree) -> Tree {
        Tree::Pos(Box::new(t))
    }

    pub fn eval(&self, f: &JointPmf) -> f64 {
        match self {
            Tree::Lin(l) => l.eval(f),
            Tree::Sum(ts) => ts.iter().map(|t| t.eval(f)).sum(),
            Tree::Pos(t) => t.eval(f).max(0.0),
        }
    }

    /// Smooth pieces whose maximum equals the tree.
    pub fn pieces(&self) -> Vec<Lin> {
        match self {
            Tree::Lin(l) => vec![l.clone()],
            Tree::Pos(t) => {
                let mut v = vec![Lin::constant(0.0)];
                v.extend(t.pieces());
                v
            }
            Tree::Sum(ts) => {
                let mut acc = vec![Lin::constant(0.0)];
                for t in ts {
                    let p = t.pieces();
                    acc = acc.iter().flat_map(|a| p.iter().map(move |b| a.add(b))).collect();
                }
                acc
            }
        }
    }
}

/// Objectives minimized by the region and exponent formulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    /// A single `I(A;B|C)`.
    MutualInfo(Mi),
    /// `I(X1;Y|X2) + I(X1;X2)`.
    LmUser1,
    /// `I(X2;Y|X1) + I(X1;X2)`.
    LmUser2,
    /// `I(X1,X2;Y) + I(X1;X2)`.
    LmSum,
    /// `I(X1;Y) + |I(X2;Y|X1) - r2|^+`.
    SupUser1 { r2: f64 },
    /// `I(X2;Y) - I(X1;X2) + |I(X1;Y,X2) - r1|^+`.
    BinUser2 { r1: f64 },
    /// `I(X2;Y) + |I(X1;Y|X2) - r1|^+` (user 1 cognitive).
    ReversedUser2 { r1: f64 },
    /// `|I(X2;Y|X1) - r2|^+`.
    ExpUser2 { r2: f64 },
    /// `|I(X1;Y) + |I(X2;Y|X1) - r2|^+ - r1|^+`.
    ExpSupUser1 { r1: f64, r2: f64 },
    /// `|I(X1;Y,X2) - r1|^+`.
    ExpBinUser1 { r1: f64 },
    /// `|I(X2;Y) - i12 + |I(X1;Y,X2) - r1|^+ - r2|^+` with `i12` the
    /// anchor's `I_P(X1;X2)`.
    ExpBinJoint { r1: f64, r2: f64, i12: f64 },
    /// Constant objective.
    Constant(f64),
}

impl Objective {
    pub fn tree(&self) -> Tree {
        use Tree::Lin as L;
        match *self {
            Objective::MutualInfo(m) => L(Lin::mi(m)),
            Objective::LmUser1 => L(Lin::mi(I_X1_Y_GIVEN_X2).plus(1.0, I_X1_X2)),
            Objective::LmUser2 => L(Lin::mi(I_X2_Y_GIVEN_X1).plus(1.0, I_X1_X2)),
            Objective::LmSum => L(Lin::mi(I_X12_Y).plus(1.0, I_X1_X2)),
            Objective::SupUser1 { r2 } => Tree::Sum(vec![
                L(Lin::mi(I_X1_Y)),
                Tree::pos(L(Lin::mi(I_X2_Y_GIVEN_X1).offset(-r2))),
            ]),
            Objective::BinUser2 { r1 } => Tree::Sum(vec![
                L(Lin::mi(I_X2_Y).plus(-1.0, I_X1_X2)),
                Tree::pos(L(Lin::mi(I_X1_YX2).offset(-r1))),
            ]),
            Objective::ReversedUser2 { r1 } => Tree::Sum(vec![
                L(Lin::mi(I_X2_Y)),
                Tree::pos(L(Lin::mi(I_X1_Y_GIVEN_X2).offset(-r1))),
            ]),
            Objective::ExpUser2 { r2 } => Tree::pos(L(Lin::mi(I_X2_Y_GIVEN_X1).offset(-r2))),
            Objective::ExpSupUser1 { r1, r2 } => Tree::pos(Tree::Sum(vec![
                L(Lin::mi(I_X1_Y).offset(-r1)),
                Tree::pos(L(Lin::mi(I_X2_Y_GIVEN_X1).offset(-r2))),
            ])),
            Objective::ExpBinUser1 { r1 } => Tree::pos(L(Lin::mi(I_X1_YX2).offset(-r1))),
            Objective::ExpBinJoint { r1, r2, i12 } => Tree::pos(Tree::Sum(vec![
                L(Lin::mi(I_X2_Y).offset(-i12 - r2)),
                Tree::pos(L(Lin::mi(I_X1_YX2).offset(-r1))),
            ])),
            Objective::Constant(c) => L(Lin::constant(c)),
        }
    }

    pub fn eval(&self, f: &JointPmf) -> f64 {
        self.tree().eval(f)
    }
}
