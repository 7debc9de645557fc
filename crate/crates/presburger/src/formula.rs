//! Atoms, formulas, valuations and the basic syntactic operations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::term::{LinTerm, Var};

/// An atom in canonical form `t ◁ 0`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PresAtom {
    /// `t = 0`
    Eq(LinTerm),
    /// `t < 0`
    Lt(LinTerm),
    /// `d | t`, with `d ≥ 1`. Only produced by quantifier elimination.
    Divides(BigInt, LinTerm),
}

impl PresAtom {
    pub fn term(&self) -> &LinTerm {
        match self {
            PresAtom::Eq(t) | PresAtom::Lt(t) | PresAtom::Divides(_, t) => t,
        }
    }

    fn map_term(&self, f: impl FnOnce(&LinTerm) -> LinTerm) -> PresAtom {
        match self {
            PresAtom::Eq(t) => PresAtom::Eq(f(t)),
            PresAtom::Lt(t) => PresAtom::Lt(f(t)),
            PresAtom::Divides(d, t) => PresAtom::Divides(d.clone(), f(t)),
        }
    }

    /// Truth value under `lookup`, or `None` if a variable is unassigned.
    pub fn eval_with(&self, lookup: impl FnMut(Var) -> Option<BigInt>) -> Option<bool> {
        let v = self.term().eval_with(lookup)?;
        Some(match self {
            PresAtom::Eq(_) => v.is_zero(),
            PresAtom::Lt(_) => v.is_negative(),
            PresAtom::Divides(d, _) => (v % d).is_zero(),
        })
    }

    /// Truth value of a variable-free atom.
    pub fn ground_value(&self) -> Option<bool> {
        if self.term().is_constant() {
            self.eval_with(|_| None)
        } else {
            None
        }
    }
}

/// A Presburger formula over the naturals.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PresFormula {
    True,
    False,
    Atom(PresAtom),
    Not(Box<PresFormula>),
    And(Vec<PresFormula>),
    Or(Vec<PresFormula>),
    Implies(Box<PresFormula>, Box<PresFormula>),
    Exists(Var, Box<PresFormula>),
    Forall(Var, Box<PresFormula>),
}

/// Assignment of naturals to variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Valuation {
    values: BTreeMap<Var, u64>,
}

impl Valuation {
    pub fn new() -> Valuation {
        Valuation::default()
    }

    pub fn set(&mut self, v: Var, value: u64) {
        self.values.insert(v, value);
    }

    pub fn with(mut self, v: Var, value: u64) -> Valuation {
        self.set(v, value);
        self
    }

    pub fn get(&self, v: Var) -> Option<u64> {
        self.values.get(&v).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, u64)> + '_ {
        self.values.iter().map(|(v, n)| (*v, *n))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl FromIterator<(Var, u64)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (Var, u64)>>(iter: I) -> Valuation {
        Valuation {
            values: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("variable {0} has no value")]
    UnassignedVariable(String),
    #[error("evaluate expects a quantifier-free formula")]
    QuantifiedInput,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubstError {
    #[error("substituting for {var} would capture {captured}")]
    CaptureViolation { var: String, captured: String },
}

impl PresFormula {
    pub fn atom(a: PresAtom) -> PresFormula {
        PresFormula::Atom(a)
    }

    /// `a = b`
    pub fn eq(a: LinTerm, b: LinTerm) -> PresFormula {
        PresFormula::Atom(PresAtom::Eq(a - b))
    }

    /// `a < b`
    pub fn lt(a: LinTerm, b: LinTerm) -> PresFormula {
        PresFormula::Atom(PresAtom::Lt(a - b))
    }

    /// `a ≤ b`, stored as `a - b - 1 < 0`.
    pub fn le(a: LinTerm, b: LinTerm) -> PresFormula {
        PresFormula::Atom(PresAtom::Lt(a - b - LinTerm::constant(1)))
    }

    pub fn gt(a: LinTerm, b: LinTerm) -> PresFormula {
        PresFormula::lt(b, a)
    }

    pub fn ge(a: LinTerm, b: LinTerm) -> PresFormula {
        PresFormula::le(b, a)
    }

    /// `a ≠ b`, stored as `a < b ∨ b < a`.
    pub fn ne(a: LinTerm, b: LinTerm) -> PresFormula {
        PresFormula::Or(vec![
            PresFormula::lt(a.clone(), b.clone()),
            PresFormula::lt(b, a),
        ])
    }

    /// `d | t`
    pub fn divides(d: impl Into<BigInt>, t: LinTerm) -> PresFormula {
        let d = d.into();
        assert!(d.is_positive(), "divisor must be positive");
        PresFormula::Atom(PresAtom::Divides(d, t))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(phi: PresFormula) -> PresFormula {
        PresFormula::Not(Box::new(phi))
    }

    pub fn and(parts: Vec<PresFormula>) -> PresFormula {
        match parts.len() {
            0 => PresFormula::True,
            1 => parts.into_iter().next().unwrap(),
            _ => PresFormula::And(parts),
        }
    }

    pub fn or(parts: Vec<PresFormula>) -> PresFormula {
        match parts.len() {
            0 => PresFormula::False,
            1 => parts.into_iter().next().unwrap(),
            _ => PresFormula::Or(parts),
        }
    }

    pub fn implies(a: PresFormula, b: PresFormula) -> PresFormula {
        PresFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn exists(v: Var, body: PresFormula) -> PresFormula {
        PresFormula::Exists(v, Box::new(body))
    }

    pub fn forall(v: Var, body: PresFormula) -> PresFormula {
        PresFormula::Forall(v, Box::new(body))
    }

    /// Wraps `body` in `∃v` for each `v`, outermost first.
    pub fn exists_many(vars: &[Var], body: PresFormula) -> PresFormula {
        vars.iter()
            .rev()
            .fold(body, |acc, v| PresFormula::exists(*v, acc))
    }

    pub fn forall_many(vars: &[Var], body: PresFormula) -> PresFormula {
        vars.iter()
            .rev()
            .fold(body, |acc, v| PresFormula::forall(*v, acc))
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            PresFormula::True | PresFormula::False | PresFormula::Atom(_) => true,
            PresFormula::Not(a) => a.is_quantifier_free(),
            PresFormula::And(xs) | PresFormula::Or(xs) => xs.iter().all(|x| x.is_quantifier_free()),
            PresFormula::Implies(a, b) => a.is_quantifier_free() && b.is_quantifier_free(),
            PresFormula::Exists(..) | PresFormula::Forall(..) => false,
        }
    }

    /// Whether a divisibility atom occurs anywhere.
    pub fn has_divides(&self) -> bool {
        let mut found = false;
        self.visit_atoms(&mut |a| found |= matches!(a, PresAtom::Divides(..)));
        found
    }

    pub fn visit_atoms(&self, f: &mut impl FnMut(&PresAtom)) {
        match self {
            PresFormula::True | PresFormula::False => {}
            PresFormula::Atom(a) => f(a),
            PresFormula::Not(a) | PresFormula::Exists(_, a) | PresFormula::Forall(_, a) => a.visit_atoms(f),
            PresFormula::And(xs) | PresFormula::Or(xs) => xs.iter().for_each(|x| x.visit_atoms(f)),
            PresFormula::Implies(a, b) => {
                a.visit_atoms(f);
                b.visit_atoms(f);
            }
        }
    }

    pub fn atom_count(&self) -> usize {
        let mut n = 0;
        self.visit_atoms(&mut |_| n += 1);
        n
    }
}

/// Truth value of a quantifier-free formula.
pub fn evaluate(phi: &PresFormula, v: &Valuation) -> Result<bool, EvalError> {
    eval_rec(phi, &mut |x| v.get(x).map(BigInt::from))
}

pub(crate) fn eval_rec(
    phi: &PresFormula,
    lookup: &mut impl FnMut(Var) -> Option<BigInt>,
) -> Result<bool, EvalError> {
    Ok(match phi {
        PresFormula::True => true,
        PresFormula::False => false,
        PresFormula::Atom(a) => match a.eval_with(&mut *lookup) {
            Some(b) => b,
            None => {
                let missing = a.term().vars().find(|x| lookup(*x).is_none()).unwrap();
                return Err(EvalError::UnassignedVariable(missing.name().to_string()));
            }
        },
        PresFormula::Not(a) => !eval_rec(a, lookup)?,
        PresFormula::And(xs) => {
            for x in xs {
                if !eval_rec(x, lookup)? {
                    return Ok(false);
                }
            }
            true
        }
        PresFormula::Or(xs) => {
            for x in xs {
                if eval_rec(x, lookup)? {
                    return Ok(true);
                }
            }
            false
        }
        PresFormula::Implies(a, b) => !eval_rec(a, lookup)? || eval_rec(b, lookup)?,
        PresFormula::Exists(..) | PresFormula::Forall(..) => return Err(EvalError::QuantifiedInput),
    })
}

/// Variables with a free occurrence.
pub fn free_vars(phi: &PresFormula) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    collect_free(phi, &mut Vec::new(), &mut out);
    out
}

fn collect_free(phi: &PresFormula, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
    match phi {
        PresFormula::True | PresFormula::False => {}
        PresFormula::Atom(a) => {
            for v in a.term().vars() {
                if !bound.contains(&v) {
                    out.insert(v);
                }
            }
        }
        PresFormula::Not(a) => collect_free(a, bound, out),
        PresFormula::And(xs) | PresFormula::Or(xs) => {
            xs.iter().for_each(|x| collect_free(x, bound, out))
        }
        PresFormula::Implies(a, b) => {
            collect_free(a, bound, out);
            collect_free(b, bound, out);
        }
        PresFormula::Exists(v, a) | PresFormula::Forall(v, a) => {
            bound.push(*v);
            collect_free(a, bound, out);
            bound.pop();
        }
    }
}

/// Replaces the free occurrences of `var` by `replacement`.
pub fn substitute(
    phi: &PresFormula,
    var: Var,
    replacement: &LinTerm,
) -> Result<PresFormula, SubstError> {
    subst_rec(phi, var, replacement, &mut Vec::new())
}

fn subst_rec(
    phi: &PresFormula,
    var: Var,
    r: &LinTerm,
    bound: &mut Vec<Var>,
) -> Result<PresFormula, SubstError> {
    Ok(match phi {
        PresFormula::True | PresFormula::False => phi.clone(),
        PresFormula::Atom(a) => {
            if !a.term().mentions(var) {
                return Ok(phi.clone());
            }
            if let Some(c) = bound.iter().find(|b| r.mentions(**b)) {
                return Err(SubstError::CaptureViolation {
                    var: var.name().to_string(),
                    captured: c.name().to_string(),
                });
            }
            PresFormula::Atom(a.map_term(|t| t.substitute(var, r)))
        }
        PresFormula::Not(a) => PresFormula::not(subst_rec(a, var, r, bound)?),
        PresFormula::And(xs) => PresFormula::And(
            xs.iter()
                .map(|x| subst_rec(x, var, r, bound))
                .collect::<Result<_, _>>()?,
        ),
        PresFormula::Or(xs) => PresFormula::Or(
            xs.iter()
                .map(|x| subst_rec(x, var, r, bound))
                .collect::<Result<_, _>>()?,
        ),
        PresFormula::Implies(a, b) => {
            PresFormula::implies(subst_rec(a, var, r, bound)?, subst_rec(b, var, r, bound)?)
        }
        PresFormula::Exists(v, a) | PresFormula::Forall(v, a) => {
            if *v == var {
                return Ok(phi.clone());
            }
            bound.push(*v);
            let body = subst_rec(a, var, r, bound);
            bound.pop();
            let body = body?;
            match phi {
                PresFormula::Exists(..) => PresFormula::exists(*v, body),
                _ => PresFormula::forall(*v, body),
            }
        }
    })
}

/// Negation normal form: negations only directly above divisibility atoms.
///
/// `¬(t < 0)` becomes `-t < 0 ∨ t = 0` and `¬(t = 0)` becomes
/// `t < 0 ∨ -t < 0`.
pub fn to_nnf(phi: &PresFormula) -> PresFormula {
    nnf(phi, false)
}

fn nnf(phi: &PresFormula, neg: bool) -> PresFormula {
    match (phi, neg) {
        (PresFormula::True, false) | (PresFormula::False, true) => PresFormula::True,
        (PresFormula::True, true) | (PresFormula::False, false) => PresFormula::False,
        (PresFormula::Atom(a), false) => PresFormula::Atom(a.clone()),
        (PresFormula::Atom(a), true) => match a {
            PresAtom::Lt(t) => PresFormula::Or(vec![
                PresFormula::Atom(PresAtom::Lt(-t.clone())),
                PresFormula::Atom(PresAtom::Eq(t.clone())),
            ]),
            PresAtom::Eq(t) => PresFormula::Or(vec![
                PresFormula::Atom(PresAtom::Lt(t.clone())),
                PresFormula::Atom(PresAtom::Lt(-t.clone())),
            ]),
            PresAtom::Divides(..) => PresFormula::not(PresFormula::Atom(a.clone())),
        },
        (PresFormula::Not(a), _) => nnf(a, !neg),
        (PresFormula::And(xs), false) | (PresFormula::Or(xs), true) => {
            PresFormula::And(xs.iter().map(|x| nnf(x, neg)).collect())
        }
        (PresFormula::Or(xs), false) | (PresFormula::And(xs), true) => {
            PresFormula::Or(xs.iter().map(|x| nnf(x, neg)).collect())
        }
        (PresFormula::Implies(a, b), false) => PresFormula::Or(vec![nnf(a, true), nnf(b, false)]),
        (PresFormula::Implies(a, b), true) => PresFormula::And(vec![nnf(a, false), nnf(b, true)]),
        (PresFormula::Exists(v, a), false) | (PresFormula::Forall(v, a), true) => {
            PresFormula::exists(*v, nnf(a, neg))
        }
        (PresFormula::Forall(v, a), false) | (PresFormula::Exists(v, a), true) => {
            PresFormula::forall(*v, nnf(a, neg))
        }
    }
}

/// Whether a quantifier-free formula is in the NNF produced by [`to_nnf`].
pub fn is_nnf(phi: &PresFormula) -> bool {
    match phi {
        PresFormula::True | PresFormula::False | PresFormula::Atom(_) => true,
        PresFormula::Not(a) => matches!(**a, PresFormula::Atom(PresAtom::Divides(..))),
        PresFormula::And(xs) | PresFormula::Or(xs) => xs.iter().all(is_nnf),
        PresFormula::Implies(..) => false,
        PresFormula::Exists(_, a) | PresFormula::Forall(_, a) => is_nnf(a),
    }
}

// Precedence levels for printing: 0 quantifiers/implication, 1 or, 2 and,
// 3 unary.
fn level(phi: &PresFormula) -> u8 {
    match phi {
        PresFormula::Implies(..) | PresFormula::Exists(..) | PresFormula::Forall(..) => 0,
        PresFormula::Or(xs) if xs.len() > 1 => 1,
        PresFormula::And(xs) if xs.len() > 1 => 2,
        _ => 3,
    }
}

fn split_sides(t: &LinTerm) -> (LinTerm, LinTerm) {
    let mut pos = LinTerm::zero();
    let mut neg = LinTerm::zero();
    for (v, c) in t.coeffs() {
        if c.is_negative() {
            neg = neg + LinTerm::scaled_var(-c, *v);
        } else {
            pos = pos + LinTerm::scaled_var(c.clone(), *v);
        }
    }
    let k = t.constant_part();
    if k.is_negative() {
        neg = neg + LinTerm::constant(-k);
    } else {
        pos = pos + LinTerm::constant(k.clone());
    }
    (pos, neg)
}

impl fmt::Display for PresAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PresAtom::Eq(t) | PresAtom::Lt(t) => {
                let (l, r) = split_sides(t);
                let op = if matches!(self, PresAtom::Eq(_)) { "=" } else { "<" };
                write!(f, "{l} {op} {r}")
            }
            PresAtom::Divides(d, t) => write!(f, "{d} | {t}"),
        }
    }
}

impl fmt::Debug for PresAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl PresFormula {
    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
        let own = level(self);
        if own < ctx {
            write!(f, "(")?;
            self.fmt_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            PresFormula::True => write!(f, "true"),
            PresFormula::False => write!(f, "false"),
            PresFormula::Atom(a @ PresAtom::Divides(..)) => write!(f, "({a})"),
            PresFormula::Atom(a) => write!(f, "{a}"),
            PresFormula::Not(a) => {
                write!(f, "!")?;
                a.fmt_at(f, 3)
            }
            PresFormula::And(xs) | PresFormula::Or(xs) if xs.is_empty() => {
                let empty_and = matches!(self, PresFormula::And(_));
                write!(f, "{}", if empty_and { "true" } else { "false" })
            }
            PresFormula::And(xs) | PresFormula::Or(xs) if xs.len() == 1 => xs[0].fmt_at(f, ctx),
            PresFormula::And(xs) | PresFormula::Or(xs) => {
                let (op, sub) = match self {
                    PresFormula::And(_) => (" && ", 3),
                    _ => (" || ", 2),
                };
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{op}")?;
                    }
                    x.fmt_at(f, sub)?;
                }
                Ok(())
            }
            PresFormula::Implies(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " -> ")?;
                b.fmt_at(f, 0)
            }
            PresFormula::Exists(v, a) => {
                write!(f, "exists {v}. ")?;
                a.fmt_at(f, 0)
            }
            PresFormula::Forall(v, a) => {
                write!(f, "forall {v}. ")?;
                a.fmt_at(f, 0)
            }
        }
    }
}

impl fmt::Display for PresFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

impl fmt::Debug for PresFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
