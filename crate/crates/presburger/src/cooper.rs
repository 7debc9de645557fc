//! Deciding closed formulas over the naturals by quantifier elimination.
//!
//! The elimination itself lives in the DNF module; universal quantifiers go
//! through `¬∃¬`.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::dnf::qe;
use crate::formula::{eval_rec, free_vars, PresAtom, PresFormula};
use crate::simplify::junction;
use crate::term::{LinTerm, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecideError {
    #[error("formula is not closed: {0} is free")]
    FreeVariable(String),
}

/// Counters collected while eliminating quantifiers.
#[derive(Debug, Clone, Default, Serialize)]
pub struct QeStats {
    pub eliminated: u64,
    #[serde(serialize_with = "big_as_string")]
    pub peak_lcm: BigInt,
    pub peak_atoms: usize,
    #[serde(rename = "elapsed_us", serialize_with = "duration_as_micros")]
    pub elapsed: Duration,
}

fn big_as_string<S: serde::Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn duration_as_micros<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u64(d.as_micros() as u64)
}

impl QeStats {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("stats serialize")
    }
}

/// Negation of a quantifier-free NNF formula, again in NNF.
pub fn negate(phi: &PresFormula) -> PresFormula {
    match phi {
        PresFormula::True => PresFormula::False,
        PresFormula::False => PresFormula::True,
        // ¬(t < 0)  ⇔  -t - 1 < 0
        PresFormula::Atom(PresAtom::Lt(t)) => {
            PresFormula::Atom(PresAtom::Lt(-t.clone() - LinTerm::constant(1)))
        }
        PresFormula::Atom(PresAtom::Eq(t)) => PresFormula::Or(vec![
            PresFormula::Atom(PresAtom::Lt(t.clone())),
            PresFormula::Atom(PresAtom::Lt(-t.clone())),
        ]),
        PresFormula::Atom(a @ PresAtom::Divides(..)) => PresFormula::not(PresFormula::Atom(a.clone())),
        PresFormula::Not(a) => (**a).clone(),
        PresFormula::And(xs) => junction(xs.iter().map(negate), false),
        PresFormula::Or(xs) => junction(xs.iter().map(negate), true),
        PresFormula::Implies(a, b) => junction([(**a).clone(), negate(b)].into_iter(), true),
        PresFormula::Exists(v, a) => PresFormula::forall(*v, negate(a)),
        PresFormula::Forall(v, a) => PresFormula::exists(*v, negate(a)),
    }
}

/// Quantifier-free formula equivalent over ℕ to `∃x ≥ 0. phi`.
pub fn eliminate_exists(var: Var, phi: &PresFormula) -> PresFormula {
    let mut stats = QeStats::default();
    eliminate_all(&PresFormula::exists(var, phi.clone()), &mut stats)
}

/// Eliminates every quantifier in `phi`.
pub fn eliminate_all(phi: &PresFormula, stats: &mut QeStats) -> PresFormula {
    let d = qe(phi, stats);
    stats.peak_atoms = stats.peak_atoms.max(d.atom_count());
    d.to_formula()
}

/// Truth of a closed formula over ℕ.
pub fn decide(phi: &PresFormula) -> Result<bool, DecideError> {
    decide_with_stats(phi).map(|(b, _)| b)
}

pub fn decide_with_stats(phi: &PresFormula) -> Result<(bool, QeStats), DecideError> {
    if let Some(v) = free_vars(phi).into_iter().next() {
        return Err(DecideError::FreeVariable(v.name().to_string()));
    }
    let start = Instant::now();
    let mut stats = QeStats::default();
    let qf = eliminate_all(phi, &mut stats);
    let value = eval_rec(&qf, &mut |_| None).expect("closed formula reduces to a ground one");
    stats.elapsed = start.elapsed();
    Ok((value, stats))
}

/// Whether `phi` holds for every assignment of naturals to `vars`.
pub fn is_valid(phi: &PresFormula, vars: &BTreeSet<Var>) -> bool {
    let mut all: Vec<Var> = vars.iter().copied().collect();
    for v in free_vars(phi) {
        if !vars.contains(&v) {
            all.push(v);
        }
    }
    decide(&PresFormula::forall_many(&all, phi.clone())).expect("closed by construction")
}

/// The brute-force search bound used for counterexample extraction: the
/// lcm of all divisors and absolute coefficients plus the largest absolute
/// constant.
pub fn search_bound(phi: &PresFormula) -> BigInt {
    let mut l = BigInt::one();
    let mut k = BigInt::zero();
    phi.visit_atoms(&mut |a| {
        for c in a.term().coeffs().values() {
            l = l.lcm(&c.abs());
        }
        if let PresAtom::Divides(d, _) = a {
            l = l.lcm(d);
        }
        k = k.clone().max(a.term().constant_part().abs());
    });
    l + k
}
