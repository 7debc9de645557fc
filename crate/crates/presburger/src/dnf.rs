//! Quantifier elimination on formulas kept in disjunctive normal form.
//!
//! A conjunction stores its literals in canonical form: bounds `l + c ≤ 0`
//! keyed by their linear part (only the tightest kept), equations, and
//! (non-)divisibility constraints. `∃x` is applied conjunct by conjunct,
//! by substitution when `x` has a unit equation, by an exact
//! Fourier–Motzkin step when every bound pair has a unit coefficient on
//! one side, and by a Cooper step otherwise. All variables range over ℕ:
//! `x ≥ 0` is added before each elimination.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::cooper::QeStats;
use crate::formula::{PresAtom, PresFormula};
use crate::term::{LinTerm, Var};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Lit {
    /// `t ≤ 0`
    Le(LinTerm),
    /// `t = 0`
    Eq(LinTerm),
    /// `d | t`
    Div(BigInt, LinTerm),
    /// `¬(d | t)`
    NotDiv(BigInt, LinTerm),
}

impl Lit {
    fn term(&self) -> &LinTerm {
        match self {
            Lit::Le(t) | Lit::Eq(t) | Lit::Div(_, t) | Lit::NotDiv(_, t) => t,
        }
    }

    fn map(&self, f: impl Fn(&LinTerm) -> LinTerm) -> Lit {
        match self {
            Lit::Le(t) => Lit::Le(f(t)),
            Lit::Eq(t) => Lit::Eq(f(t)),
            Lit::Div(d, t) => Lit::Div(d.clone(), f(t)),
            Lit::NotDiv(d, t) => Lit::NotDiv(d.clone(), f(t)),
        }
    }

    fn negated(&self) -> Vec<Lit> {
        match self {
            Lit::Le(t) => vec![Lit::Le(LinTerm::constant(1) - t.clone())],
            Lit::Eq(t) => vec![
                Lit::Le(t.clone() + LinTerm::constant(1)),
                Lit::Le(LinTerm::constant(1) - t.clone()),
            ],
            Lit::Div(d, t) => vec![Lit::NotDiv(d.clone(), t.clone())],
            Lit::NotDiv(d, t) => vec![Lit::Div(d.clone(), t.clone())],
        }
    }

    fn to_formula(&self) -> PresFormula {
        match self {
            Lit::Le(t) => PresFormula::Atom(PresAtom::Lt(t.clone() - LinTerm::constant(1))),
            Lit::Eq(t) => PresFormula::Atom(PresAtom::Eq(t.clone())),
            Lit::Div(d, t) => PresFormula::Atom(PresAtom::Divides(d.clone(), t.clone())),
            Lit::NotDiv(d, t) => PresFormula::not(PresFormula::Atom(PresAtom::Divides(d.clone(), t.clone()))),
        }
    }
}

fn divide(t: &LinTerm, g: &BigInt) -> LinTerm {
    if g.is_one() {
        return t.clone();
    }
    LinTerm::from_parts(t.coeffs().iter().map(|(v, c)| (c / g, *v)), t.constant_part() / g)
}

enum Norm {
    Const(bool),
    Lit(Lit),
}

fn normalize(l: Lit) -> Norm {
    let t = l.term();
    if t.is_constant() {
        let c = t.constant_part();
        return Norm::Const(match &l {
            Lit::Le(_) => !c.is_positive(),
            Lit::Eq(_) => c.is_zero(),
            Lit::Div(d, _) => c.is_multiple_of(d),
            Lit::NotDiv(d, _) => !c.is_multiple_of(d),
        });
    }
    match l {
        Lit::Le(t) => {
            let g = t.coeff_gcd();
            // g·l + c ≤ 0  ⇔  l + ⌈c/g⌉ ≤ 0
            let c = -((-t.constant_part()).div_floor(&g));
            Norm::Lit(Lit::Le(divide(&t.linear_part(), &g).with_constant(c)))
        }
        Lit::Eq(t) => {
            let g = t.coeff_gcd();
            if !t.constant_part().is_multiple_of(&g) {
                return Norm::Const(false);
            }
            let t = divide(&t, &g);
            Norm::Lit(Lit::Eq(if t.leading_sign() < 0 { -t } else { t }))
        }
        Lit::Div(d, t) => norm_div(d, t, false),
        Lit::NotDiv(d, t) => norm_div(d, t, true),
    }
}

fn norm_div(d: BigInt, t: LinTerm, negated: bool) -> Norm {
    let reduced = LinTerm::from_parts(
        t.coeffs().iter().map(|(v, c)| (c.mod_floor(&d), *v)),
        t.constant_part().mod_floor(&d),
    );
    let wrap = |b: bool| Norm::Const(b != negated);
    if reduced.is_constant() {
        return wrap(reduced.constant_part().is_zero());
    }
    let h = reduced.coeff_gcd().gcd(&d);
    if !reduced.constant_part().is_multiple_of(&h) {
        return wrap(false);
    }
    let d = &d / &h;
    if d.is_one() {
        return wrap(true);
    }
    let t = divide(&reduced, &h);
    Norm::Lit(if negated { Lit::NotDiv(d, t) } else { Lit::Div(d, t) })
}

/// A satisfiable-looking conjunction of canonical literals.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
struct Conj {
    le: BTreeMap<LinTerm, BigInt>,
    eq: BTreeMap<LinTerm, BigInt>,
    div: BTreeSet<(BigInt, LinTerm)>,
    ndiv: BTreeSet<(BigInt, LinTerm)>,
}

impl Conj {
    fn len(&self) -> usize {
        self.le.len() + self.eq.len() + self.div.len() + self.ndiv.len()
    }

    /// Adds a literal; `false` if the conjunction became unsatisfiable.
    fn add(&mut self, l: Lit) -> bool {
        match normalize(l) {
            Norm::Const(b) => b,
            Norm::Lit(Lit::Le(t)) => self.add_le(t.linear_part(), t.constant_part().clone()),
            Norm::Lit(Lit::Eq(t)) => self.add_eq(t.linear_part(), t.constant_part().clone()),
            Norm::Lit(Lit::Div(d, t)) => {
                self.div.insert((d, t));
                true
            }
            Norm::Lit(Lit::NotDiv(d, t)) => {
                if self.div.contains(&(d.clone(), t.clone())) {
                    return false;
                }
                self.ndiv.insert((d, t));
                true
            }
        }
    }

    /// Value of the linear form `lin` fixed by an equation, if any.
    fn eq_value(&self, lin: &LinTerm) -> Option<BigInt> {
        if let Some(c) = self.eq.get(lin) {
            return Some(-c);
        }
        let neg = -lin.clone();
        self.eq.get(&neg).cloned()
    }

    fn add_le(&mut self, lin: LinTerm, c: BigInt) -> bool {
        if let Some(v) = self.eq_value(&lin) {
            return v + c <= BigInt::zero();
        }
        let c = match self.le.get(&lin) {
            Some(old) if *old >= c => return true,
            _ => c,
        };
        let neg = -lin.clone();
        if let Some(c2) = self.le.get(&neg).cloned() {
            // lin ≤ -c and lin ≥ c2
            let s = &c + &c2;
            if s.is_positive() {
                return false;
            }
            if s.is_zero() {
                self.le.remove(&neg);
                self.le.remove(&lin);
                return self.add_eq(lin.clone(), c);
            }
        }
        self.le.insert(lin, c);
        true
    }

    fn add_eq(&mut self, lin: LinTerm, c: BigInt) -> bool {
        let (lin, c) = if lin.leading_sign() < 0 { (-lin, -c) } else { (lin, c) };
        if let Some(old) = self.eq.get(&lin) {
            return *old == c;
        }
        // lin = -c
        let v = -c.clone();
        if let Some(c1) = self.le.remove(&lin) {
            if (&v + c1).is_positive() {
                return false;
            }
        }
        let neg = -lin.clone();
        if let Some(c2) = self.le.remove(&neg) {
            if (-&v + c2).is_positive() {
                return false;
            }
        }
        self.eq.insert(lin, c);
        true
    }

    fn lits(&self) -> Vec<Lit> {
        let mut out = Vec::with_capacity(self.len());
        out.extend(self.le.iter().map(|(l, c)| Lit::Le(l.with_constant(c.clone()))));
        out.extend(self.eq.iter().map(|(l, c)| Lit::Eq(l.with_constant(c.clone()))));
        out.extend(self.div.iter().map(|(d, t)| Lit::Div(d.clone(), t.clone())));
        out.extend(self.ndiv.iter().map(|(d, t)| Lit::NotDiv(d.clone(), t.clone())));
        out
    }

    fn from_lits(lits: impl IntoIterator<Item = Lit>) -> Option<Conj> {
        let mut c = Conj::default();
        for l in lits {
            if !c.add(l) {
                return None;
            }
        }
        Some(c)
    }

    fn mentions(&self, x: Var) -> bool {
        self.le.keys().any(|l| l.mentions(x))
            || self.eq.keys().any(|l| l.mentions(x))
            || self.div.iter().any(|(_, t)| t.mentions(x))
            || self.ndiv.iter().any(|(_, t)| t.mentions(x))
    }

    /// Whether every model of `self` is a model of `other`.
    fn implies(&self, other: &Conj) -> bool {
        other.le.iter().all(|(l, c)| match self.le.get(l) {
            Some(mine) => mine >= c,
            None => self.eq_value(l).is_some_and(|v| v + c <= BigInt::zero()),
        }) && other.eq.iter().all(|(l, c)| self.eq.get(l) == Some(c))
            && other.div.is_subset(&self.div)
            && other.ndiv.is_subset(&self.ndiv)
    }

    fn to_formula(&self) -> PresFormula {
        PresFormula::and(self.lits().iter().map(Lit::to_formula).collect())
    }
}

/// A disjunction of conjunctions; empty is false.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub(crate) struct Dnf {
    conjs: Vec<Conj>,
}

const SUBSUMPTION_LIMIT: usize = 4000;

impl Dnf {
    fn truth(b: bool) -> Dnf {
        Dnf {
            conjs: if b { vec![Conj::default()] } else { Vec::new() },
        }
    }

    fn is_true(&self) -> bool {
        self.conjs.iter().any(|c| c.len() == 0)
    }

    fn from_conjs(mut conjs: Vec<Conj>) -> Dnf {
        if conjs.iter().any(|c| c.len() == 0) {
            return Dnf::truth(true);
        }
        conjs.sort_by_key(|c| c.len());
        conjs.dedup();
        if conjs.len() > SUBSUMPTION_LIMIT {
            return Dnf { conjs };
        }
        let mut kept: Vec<Conj> = Vec::with_capacity(conjs.len());
        for c in conjs {
            if !kept.iter().any(|k| c.implies(k)) {
                kept.push(c);
            }
        }
        Dnf { conjs: kept }
    }

    fn lit(l: Lit) -> Dnf {
        match Conj::from_lits([l]) {
            Some(c) => Dnf::from_conjs(vec![c]),
            None => Dnf::truth(false),
        }
    }

    fn or(self, other: Dnf) -> Dnf {
        let mut conjs = self.conjs;
        conjs.extend(other.conjs);
        Dnf::from_conjs(conjs)
    }

    fn and(&self, other: &Dnf) -> Dnf {
        let mut conjs = Vec::with_capacity(self.conjs.len() * other.conjs.len());
        for a in &self.conjs {
            for b in &other.conjs {
                let mut c = a.clone();
                if b.lits().into_iter().all(|l| c.add(l)) {
                    conjs.push(c);
                }
            }
        }
        Dnf::from_conjs(conjs)
    }

    fn negate(&self) -> Dnf {
        let mut acc = Dnf::truth(true);
        // Short conjunctions first keeps the intermediate products small.
        for c in &self.conjs {
            let clause = Dnf::from_conjs(
                c.lits()
                    .iter()
                    .flat_map(|l| l.negated())
                    .filter_map(|l| Conj::from_lits([l]))
                    .collect(),
            );
            acc = acc.and(&clause);
            if acc.conjs.is_empty() {
                break;
            }
        }
        acc
    }

    pub(crate) fn to_formula(&self) -> PresFormula {
        PresFormula::or(self.conjs.iter().map(Conj::to_formula).collect())
    }

    pub(crate) fn atom_count(&self) -> usize {
        self.conjs.iter().map(Conj::len).sum()
    }

    fn exists(&self, xs: &[Var], stats: &mut QeStats) -> Dnf {
        let mut out = Vec::new();
        for c in &self.conjs {
            let mut todo = vec![c.clone()];
            let mut remaining: Vec<Var> = xs.iter().copied().filter(|x| c.mentions(*x)).collect();
            while !remaining.is_empty() && !todo.is_empty() {
                // Pick the cheapest variable for the first pending conjunct.
                let (pos, _) = remaining
                    .iter()
                    .enumerate()
                    .map(|(i, x)| (i, elim_cost(&todo[0], *x)))
                    .min_by_key(|(_, cost)| *cost)
                    .expect("nonempty");
                let x = remaining.remove(pos);
                stats.eliminated += 1;
                let mut next = Vec::new();
                for t in todo {
                    next.extend(elim_var(x, &t, stats).conjs);
                }
                todo = Dnf::from_conjs(next).conjs;
                if todo.iter().any(|t| t.len() == 0) {
                    return Dnf::truth(true);
                }
            }
            out.extend(todo);
            stats.peak_atoms = stats.peak_atoms.max(out.iter().map(Conj::len).sum());
        }
        Dnf::from_conjs(out)
    }
}

/// Literals of `c` split by whether they mention `x`.
fn split(c: &Conj, x: Var) -> (Vec<Lit>, Vec<Lit>) {
    c.lits().into_iter().partition(|l| l.term().mentions(x))
}

fn elim_cost(c: &Conj, x: Var) -> u64 {
    let (with, _) = split(c, x);
    let mut lower = 1u64;
    let mut upper = 0u64;
    let mut unit = true;
    for l in &with {
        let k = l.term().coeff(x);
        match l {
            Lit::Eq(_) if k.abs().is_one() => return 0,
            Lit::Eq(_) | Lit::Div(..) | Lit::NotDiv(..) => unit = false,
            Lit::Le(_) => {
                if !k.abs().is_one() {
                    unit = false;
                }
                if k.is_positive() {
                    upper += 1;
                } else {
                    lower += 1;
                }
            }
        }
    }
    if upper == 0 {
        return 0;
    }
    let base = lower * upper;
    if unit {
        base
    } else {
        1000 + base * 10
    }
}

/// `∃x ≥ 0. c` as a DNF without `x`.
fn elim_var(x: Var, c: &Conj, stats: &mut QeStats) -> Dnf {
    let (mut with, rest) = split(c, x);
    if with.is_empty() {
        return Dnf::from_conjs(vec![c.clone()]);
    }
    with.push(Lit::Le(LinTerm::scaled_var(-1, x)));

    let build = |extra: Vec<Lit>| Conj::from_lits(rest.iter().cloned().chain(extra));

    // Unit equation: substitute.
    if let Some(Lit::Eq(t)) = with.iter().find(|l| matches!(l, Lit::Eq(t) if t.coeff(x).abs().is_one())) {
        let k = t.coeff(x);
        let e = t.without(x).scale(&-k);
        let subst: Vec<Lit> = with.iter().map(|l| l.map(|u| u.substitute(x, &e))).collect();
        return Dnf::from_conjs(build(subst).into_iter().collect());
    }

    let only_bounds = with.iter().all(|l| matches!(l, Lit::Le(_)));
    if only_bounds {
        let (lower, upper): (Vec<&LinTerm>, Vec<&LinTerm>) =
            with.iter().map(|l| l.term()).partition(|t| t.coeff(x).is_negative());
        if upper.is_empty() {
            return Dnf::from_conjs(build(Vec::new()).into_iter().collect());
        }
        let exact = lower
            .iter()
            .all(|lo| lo.coeff(x).abs().is_one() || upper.iter().all(|up| up.coeff(x).is_one()));
        if exact {
            // a·x ≥ L and b·x ≤ U give b·L ≤ a·U
            let mut shadows = Vec::new();
            for lo in &lower {
                let a = -lo.coeff(x);
                let big_l = lo.without(x);
                for up in &upper {
                    let b = up.coeff(x);
                    let big_u = -up.without(x);
                    shadows.push(Lit::Le(big_l.scale(&b) - big_u.scale(&a)));
                }
            }
            return Dnf::from_conjs(build(shadows).into_iter().collect());
        }
    }
    cooper(x, &with, &rest, stats)
}

fn cooper(x: Var, with: &[Lit], rest: &[Lit], stats: &mut QeStats) -> Dnf {
    let mut l = BigInt::one();
    for lit in with {
        l = l.lcm(&lit.term().coeff(x).abs());
    }
    // Scale so that x has coefficient ±l everywhere, then write x for l·x.
    let mut lits: Vec<Lit> = with
        .iter()
        .map(|lit| {
            let k = lit.term().coeff(x);
            let m = &l / k.abs();
            let retarget = |t: &LinTerm| {
                t.without(x).scale(&m) + LinTerm::scaled_var(if k.is_negative() { -1 } else { 1 }, x)
            };
            match lit {
                Lit::Le(t) => Lit::Le(retarget(t)),
                Lit::Eq(t) => Lit::Eq(retarget(t)),
                Lit::Div(d, t) => Lit::Div(d * &m, retarget(t)),
                Lit::NotDiv(d, t) => Lit::NotDiv(d * &m, retarget(t)),
            }
        })
        .collect();
    if !l.is_one() {
        lits.push(Lit::Div(l.clone(), LinTerm::var(x)));
    }

    let place = |value: &LinTerm| -> Option<Conj> {
        Conj::from_lits(
            rest.iter()
                .cloned()
                .chain(lits.iter().map(|lit| lit.map(|t| t.substitute(x, value)))),
        )
    };

    if let Some(Lit::Eq(t)) = lits.iter().find(|lit| matches!(lit, Lit::Eq(_))) {
        let k = t.coeff(x);
        let e = t.without(x).scale(&-k);
        return Dnf::from_conjs(place(&e).into_iter().collect());
    }

    let mut delta = BigInt::one();
    let mut lower = BTreeSet::new();
    let mut upper = BTreeSet::new();
    for lit in &lits {
        let t = lit.term();
        match lit {
            Lit::Div(d, _) | Lit::NotDiv(d, _) => delta = delta.lcm(d),
            // -x + r ≤ 0: x ≥ r
            Lit::Le(_) if t.coeff(x).is_negative() => {
                lower.insert(t.without(x));
            }
            // x + r ≤ 0: x ≤ -r
            Lit::Le(_) => {
                upper.insert(-t.without(x));
            }
            Lit::Eq(_) => unreachable!("handled above"),
        }
    }
    if delta > stats.peak_lcm {
        stats.peak_lcm = delta.clone();
    }

    let mut conjs = Vec::new();
    if upper.is_empty() {
        // Unbounded above: only the residues matter.
        let periodic: Vec<&Lit> = lits.iter().filter(|l| matches!(l, Lit::Div(..) | Lit::NotDiv(..))).collect();
        let mut j = BigInt::zero();
        while j < delta {
            let v = LinTerm::constant(j.clone());
            if let Some(c) = Conj::from_lits(
                rest.iter()
                    .cloned()
                    .chain(periodic.iter().map(|lit| lit.map(|t| t.substitute(x, &v)))),
            ) {
                if c.len() == 0 {
                    return Dnf::truth(true);
                }
                conjs.push(c);
            }
            j += 1;
        }
        return Dnf::from_conjs(conjs);
    }

    // Some solution lies within δ of a lower bound (or of an upper bound).
    let from_below = lower.len() <= upper.len();
    let points = if from_below { &lower } else { &upper };
    for p in points {
        let mut j = BigInt::zero();
        while j < delta {
            let v = if from_below {
                p.clone() + LinTerm::constant(j.clone())
            } else {
                p.clone() - LinTerm::constant(j.clone())
            };
            if let Some(c) = place(&v) {
                if c.len() == 0 {
                    return Dnf::truth(true);
                }
                conjs.push(c);
            }
            j += 1;
        }
    }
    Dnf::from_conjs(conjs)
}

/// DNF of `phi` with every quantifier eliminated.
pub(crate) fn qe(phi: &PresFormula, stats: &mut QeStats) -> Dnf {
    match phi {
        PresFormula::True => Dnf::truth(true),
        PresFormula::False => Dnf::truth(false),
        PresFormula::Atom(a) => Dnf::lit(match a {
            PresAtom::Lt(t) => Lit::Le(t.clone() + LinTerm::constant(1)),
            PresAtom::Eq(t) => Lit::Eq(t.clone()),
            PresAtom::Divides(d, t) => Lit::Div(d.abs(), t.clone()),
        }),
        PresFormula::Not(a) => qe(a, stats).negate(),
        PresFormula::And(xs) => {
            let mut acc = Dnf::truth(true);
            for x in xs {
                acc = acc.and(&qe(x, stats));
                if acc.conjs.is_empty() {
                    break;
                }
            }
            acc
        }
        PresFormula::Or(xs) => {
            let mut acc = Dnf::truth(false);
            for x in xs {
                acc = acc.or(qe(x, stats));
                if acc.is_true() {
                    break;
                }
            }
            acc
        }
        PresFormula::Implies(a, b) => {
            let na = qe(a, stats).negate();
            if na.is_true() {
                return na;
            }
            na.or(qe(b, stats))
        }
        PresFormula::Exists(..) => {
            let (vars, body) = block(phi, true);
            qe(body, stats).exists(&vars, stats)
        }
        PresFormula::Forall(..) => {
            let (vars, body) = block(phi, false);
            qe(body, stats).negate().exists(&vars, stats).negate()
        }
    }
}

/// The maximal run of like quantifiers at the top of `phi`.
fn block(phi: &PresFormula, exists: bool) -> (Vec<Var>, &PresFormula) {
    let mut vars = Vec::new();
    let mut cur = phi;
    loop {
        match (cur, exists) {
            (PresFormula::Exists(v, b), true) | (PresFormula::Forall(v, b), false) => {
                vars.push(*v);
                cur = b;
            }
            _ => return (vars, cur),
        }
    }
}

