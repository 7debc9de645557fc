//! Normalization of atoms and light simplification of NNF formulas.
//!
//! Atoms are divided through by the gcd of their coefficients, ground atoms
//! are folded, and bounds on the same linear form inside one conjunction or
//! disjunction are merged. Nothing here changes the set of models.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::formula::{PresAtom, PresFormula};
use crate::term::LinTerm;

/// Canonical form of a single atom, or its truth value if it is decided.
pub fn normalize_atom(a: &PresAtom) -> Result<PresAtom, bool> {
    if let Some(b) = a.ground_value() {
        return Err(b);
    }
    match a {
        PresAtom::Eq(t) => {
            let g = t.coeff_gcd();
            if !t.constant_part().is_multiple_of(&g) {
                return Err(false);
            }
            let mut t = divide_exact(t, &g);
            if t.leading_sign() < 0 {
                t = -t;
            }
            Ok(PresAtom::Eq(t))
        }
        PresAtom::Lt(t) => {
            let g = t.coeff_gcd();
            if g.is_one() {
                return Ok(a.clone());
            }
            let c = t.constant_part().div_floor(&g);
            let lin = divide_exact(&t.linear_part(), &g);
            Ok(PresAtom::Lt(lin.with_constant(c)))
        }
        PresAtom::Divides(d, t) => {
            let mut reduced = LinTerm::constant(t.constant_part().mod_floor(d));
            for (v, c) in t.coeffs() {
                reduced = reduced + LinTerm::scaled_var(c.mod_floor(d), *v);
            }
            if reduced.is_constant() {
                return Err(reduced.constant_part().is_zero());
            }
            let h = reduced.coeff_gcd().gcd(d);
            if !reduced.constant_part().is_multiple_of(&h) {
                return Err(false);
            }
            let d = d / &h;
            if d.is_one() {
                return Err(true);
            }
            Ok(PresAtom::Divides(d, divide_exact(&reduced, &h)))
        }
    }
}

fn divide_exact(t: &LinTerm, g: &BigInt) -> LinTerm {
    if g.is_one() || g.is_zero() {
        return t.clone();
    }
    let mut out = LinTerm::constant(t.constant_part() / g);
    for (v, c) in t.coeffs() {
        out = out + LinTerm::scaled_var(c / g, *v);
    }
    out
}

fn bool_formula(b: bool) -> PresFormula {
    if b {
        PresFormula::True
    } else {
        PresFormula::False
    }
}

/// Simplifies an NNF formula. Quantifier nodes are simplified underneath.
pub fn simplify(phi: &PresFormula) -> PresFormula {
    match phi {
        PresFormula::True | PresFormula::False => phi.clone(),
        PresFormula::Atom(a) => match normalize_atom(a) {
            Ok(a) => PresFormula::Atom(a),
            Err(b) => bool_formula(b),
        },
        PresFormula::Not(inner) => match simplify(inner) {
            PresFormula::True => PresFormula::False,
            PresFormula::False => PresFormula::True,
            PresFormula::Not(x) => *x,
            x @ PresFormula::Atom(PresAtom::Divides(..)) => PresFormula::not(x),
            other => crate::cooper::negate(&other),
        },
        PresFormula::And(xs) => junction(xs.iter().map(simplify), true),
        PresFormula::Or(xs) => junction(xs.iter().map(simplify), false),
        PresFormula::Implies(a, b) => {
            let na = crate::cooper::negate(&simplify(a));
            junction([na, simplify(b)].into_iter(), false)
        }
        PresFormula::Exists(v, a) => PresFormula::exists(*v, simplify(a)),
        PresFormula::Forall(v, a) => PresFormula::forall(*v, simplify(a)),
    }
}

/// Combines already-simplified children into a conjunction (`and = true`)
/// or disjunction.
pub(crate) fn junction(children: impl Iterator<Item = PresFormula>, and: bool) -> PresFormula {
    let (unit, zero) = if and {
        (PresFormula::True, PresFormula::False)
    } else {
        (PresFormula::False, PresFormula::True)
    };
    let mut flat: Vec<PresFormula> = Vec::new();
    for c in children {
        push_flat(c, and, &unit, &mut flat);
    }
    if flat.contains(&zero) {
        return zero;
    }

    let mut bounds: BTreeMap<LinTerm, Bounds> = BTreeMap::new();
    let mut rest: BTreeSet<PresFormula> = BTreeSet::new();
    for c in flat {
        match &c {
            PresFormula::Atom(PresAtom::Lt(t)) => {
                let (key, sign) = oriented(t);
                let b = bounds.entry(key).or_default();
                if sign > 0 {
                    // P + c < 0  ⇔  P ≤ -c - 1
                    b.add_hi(-t.constant_part() - 1, and);
                } else {
                    // -P + c < 0  ⇔  P ≥ c + 1
                    b.add_lo(t.constant_part() + 1, and);
                }
            }
            PresFormula::Atom(PresAtom::Eq(t)) => {
                let (key, sign) = oriented(t);
                let val = if sign > 0 {
                    -t.constant_part()
                } else {
                    t.constant_part().clone()
                };
                bounds.entry(key).or_default().eqs.insert(val);
            }
            _ => {
                rest.insert(c);
            }
        }
    }

    let mut out: Vec<PresFormula> = Vec::new();
    for (key, b) in bounds {
        match b.emit(&key, and) {
            Emit::Decided(v) if v == and => {}
            Emit::Decided(_) => return zero,
            Emit::Atoms(atoms) => out.extend(atoms.into_iter().map(PresFormula::Atom)),
        }
    }

    // Complementary divisibility literals.
    for c in &rest {
        if let PresFormula::Not(inner) = c {
            if rest.contains(inner) {
                return zero;
            }
        }
    }

    let literals: BTreeSet<PresFormula> = out
        .iter()
        .cloned()
        .chain(rest.iter().filter(|c| is_literal(c)).cloned())
        .collect();
    for c in rest {
        // Absorption: A ∧ (A ∨ B) = A and A ∨ (A ∧ B) = A.
        let absorbed = match (&c, and) {
            (PresFormula::Or(ys), true) | (PresFormula::And(ys), false) => {
                ys.iter().any(|y| literals.contains(y))
            }
            _ => false,
        };
        if !absorbed {
            out.push(c);
        }
    }
    out.sort();
    out.dedup();
    if and {
        PresFormula::and(out)
    } else {
        PresFormula::or(out)
    }
}

fn push_flat(c: PresFormula, and: bool, unit: &PresFormula, flat: &mut Vec<PresFormula>) {
    if c == *unit {
        return;
    }
    match c {
        PresFormula::And(ys) if and => ys.into_iter().for_each(|y| push_flat(y, and, unit, flat)),
        PresFormula::Or(ys) if !and => ys.into_iter().for_each(|y| push_flat(y, and, unit, flat)),
        other => flat.push(other),
    }
}

fn is_literal(phi: &PresFormula) -> bool {
    matches!(phi, PresFormula::Atom(_) | PresFormula::Not(_))
}

/// Splits `t` as `sign·P + c` with `P` having a positive leading coefficient.
fn oriented(t: &LinTerm) -> (LinTerm, i8) {
    let lin = t.linear_part();
    if lin.leading_sign() < 0 {
        (-lin, -1)
    } else {
        (lin, 1)
    }
}

#[derive(Default)]
struct Bounds {
    lo: Option<BigInt>,
    hi: Option<BigInt>,
    eqs: BTreeSet<BigInt>,
}

enum Emit {
    Decided(bool),
    Atoms(Vec<PresAtom>),
}

impl Bounds {
    // Inside a conjunction bounds tighten; inside a disjunction they relax.
    fn add_hi(&mut self, v: BigInt, and: bool) {
        self.hi = Some(match self.hi.take() {
            None => v,
            Some(h) if and => h.min(v),
            Some(h) => h.max(v),
        });
    }

    fn add_lo(&mut self, v: BigInt, and: bool) {
        self.lo = Some(match self.lo.take() {
            None => v,
            Some(l) if and => l.max(v),
            Some(l) => l.min(v),
        });
    }

    fn emit(mut self, key: &LinTerm, and: bool) -> Emit {
        if and {
            if self.eqs.len() > 1 {
                return Emit::Decided(false);
            }
            if let Some(e) = self.eqs.iter().next().cloned() {
                let ok = self.lo.as_ref().is_none_or(|l| *l <= e)
                    && self.hi.as_ref().is_none_or(|h| e <= *h);
                if !ok {
                    return Emit::Decided(false);
                }
                return Emit::Atoms(vec![eq_atom(key, &e)]);
            }
            match (&self.lo, &self.hi) {
                (Some(l), Some(h)) if l > h => Emit::Decided(false),
                (Some(l), Some(h)) if l == h => Emit::Atoms(vec![eq_atom(key, l)]),
                _ => Emit::Atoms(self.bound_atoms(key)),
            }
        } else {
            loop {
                let mut changed = false;
                for e in self.eqs.clone() {
                    let below = self.hi.as_ref().is_some_and(|h| e <= *h);
                    let above = self.lo.as_ref().is_some_and(|l| e >= *l);
                    if below || above {
                        self.eqs.remove(&e);
                        changed = true;
                    } else if self.hi.as_ref().is_some_and(|h| e == h + 1) {
                        self.hi = Some(e.clone());
                        self.eqs.remove(&e);
                        changed = true;
                    } else if self.lo.as_ref().is_some_and(|l| e == l - 1) {
                        self.lo = Some(e.clone());
                        self.eqs.remove(&e);
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            if let (Some(l), Some(h)) = (&self.lo, &self.hi) {
                if *l <= h + 1 {
                    return Emit::Decided(true);
                }
            }
            let mut atoms = self.bound_atoms(key);
            atoms.extend(self.eqs.iter().map(|e| eq_atom(key, e)));
            Emit::Atoms(atoms)
        }
    }

    fn bound_atoms(&self, key: &LinTerm) -> Vec<PresAtom> {
        let mut atoms = Vec::new();
        if let Some(h) = &self.hi {
            // P ≤ h  ⇔  P - h - 1 < 0
            atoms.push(PresAtom::Lt(key.with_constant(-h - BigInt::one())));
        }
        if let Some(l) = &self.lo {
            // P ≥ l  ⇔  -P + l - 1 < 0
            atoms.push(PresAtom::Lt((-key.clone()).with_constant(l - BigInt::one())));
        }
        atoms
    }
}

fn eq_atom(key: &LinTerm, value: &BigInt) -> PresAtom {
    PresAtom::Eq(key.with_constant(-value))
}
