//! Formulas of the strategic logic: terms, quantifier prefixes, state and
//! path formulas, syntactic checks and the normal-form recognizer.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// `y1` counts controllable agents, `y2` uncontrollable ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum AgentVar {
    Y1,
    Y2,
}

impl AgentVar {
    pub fn term(self) -> Term {
        match self {
            AgentVar::Y1 => Term::Y1,
            AgentVar::Y2 => Term::Y2,
        }
    }
}

impl fmt::Display for AgentVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentVar::Y1 => "y1",
            AgentVar::Y2 => "y2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Nat(u64),
    Y1,
    Y2,
    /// Parameter `z_i`, `i >= 1`.
    Param(u32),
}

impl Term {
    pub fn agent_var(self) -> Option<AgentVar> {
        match self {
            Term::Y1 => Some(AgentVar::Y1),
            Term::Y2 => Some(AgentVar::Y2),
            _ => None,
        }
    }

    pub fn is(self, v: AgentVar) -> bool {
        self.agent_var() == Some(v)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Nat(n) => write!(f, "{n}"),
            Term::Y1 => f.write_str("y1"),
            Term::Y2 => f.write_str("y2"),
            Term::Param(i) => write!(f, "z{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantifier {
    Exists,
    Forall,
}

impl Quantifier {
    pub fn dual(self) -> Quantifier {
        match self {
            Quantifier::Exists => Quantifier::Forall,
            Quantifier::Forall => Quantifier::Exists,
        }
    }
}

impl fmt::Display for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantifier::Exists => "E",
            Quantifier::Forall => "A",
        })
    }
}

/// One or two quantifiers; a pair binds distinct variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuantPrefix(Vec<(Quantifier, AgentVar)>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("quantifier prefix must bind one or two distinct variables")]
pub struct PrefixError;

impl QuantPrefix {
    pub fn new(items: Vec<(Quantifier, AgentVar)>) -> Result<QuantPrefix, PrefixError> {
        match items.as_slice() {
            [_] => Ok(QuantPrefix(items)),
            [(_, a), (_, b)] if a != b => Ok(QuantPrefix(items)),
            _ => Err(PrefixError),
        }
    }

    pub fn one(q: Quantifier, v: AgentVar) -> QuantPrefix {
        QuantPrefix(vec![(q, v)])
    }

    pub fn two(q: Quantifier, v: AgentVar, q2: Quantifier, v2: AgentVar) -> QuantPrefix {
        QuantPrefix::new(vec![(q, v), (q2, v2)]).expect("distinct prefix variables")
    }

    pub fn items(&self) -> &[(Quantifier, AgentVar)] {
        &self.0
    }

    pub fn binds(&self, v: AgentVar) -> bool {
        self.0.iter().any(|(_, w)| *w == v)
    }

    pub fn quantifier_of(&self, v: AgentVar) -> Option<Quantifier> {
        self.0.iter().find(|(_, w)| *w == v).map(|(q, _)| *q)
    }

    pub fn dual(&self) -> QuantPrefix {
        QuantPrefix(self.0.iter().map(|(q, v)| (q.dual(), *v)).collect())
    }

    /// Keeps only the quantifiers satisfying `keep`; `None` if none remain.
    pub fn retain(&self, keep: impl Fn(AgentVar) -> bool) -> Option<QuantPrefix> {
        let items: Vec<_> = self.0.iter().copied().filter(|(_, v)| keep(*v)).collect();
        if items.is_empty() {
            None
        } else {
            Some(QuantPrefix(items))
        }
    }
}

impl fmt::Display for QuantPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (q, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{q} {v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateFormula {
    Top,
    Prop(String),
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
    Or(Box<StateFormula>, Box<StateFormula>),
    Coop(Term, Term, Box<PathFormula>),
    Quant(QuantPrefix, Box<StateFormula>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathFormula {
    Next(Box<StateFormula>),
    Globally(Box<StateFormula>),
    Until(Box<StateFormula>, Box<StateFormula>),
}

/// Constructors, used heavily by tests and the formula generators.
pub mod build {
    use super::*;

    pub fn prop(p: &str) -> StateFormula {
        StateFormula::Prop(p.to_string())
    }

    pub fn not(a: StateFormula) -> StateFormula {
        StateFormula::Not(Box::new(a))
    }

    pub fn and(a: StateFormula, b: StateFormula) -> StateFormula {
        StateFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: StateFormula, b: StateFormula) -> StateFormula {
        StateFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn coop(t1: Term, t2: Term, chi: PathFormula) -> StateFormula {
        StateFormula::Coop(t1, t2, Box::new(chi))
    }

    pub fn quant(q: QuantPrefix, a: StateFormula) -> StateFormula {
        StateFormula::Quant(q, Box::new(a))
    }

    pub fn next(a: StateFormula) -> PathFormula {
        PathFormula::Next(Box::new(a))
    }

    pub fn globally(a: StateFormula) -> PathFormula {
        PathFormula::Globally(Box::new(a))
    }

    pub fn until(a: StateFormula, b: StateFormula) -> PathFormula {
        PathFormula::Until(Box::new(a), Box::new(b))
    }

    pub fn eventually(a: StateFormula) -> PathFormula {
        until(StateFormula::Top, a)
    }

    pub fn n(k: u64) -> Term {
        Term::Nat(k)
    }
}

/// Values for `y1`, `y2` and parameters. Numerals evaluate to themselves.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    vars: BTreeMap<AgentVar, u64>,
    params: BTreeMap<u32, u64>,
}

impl Assignment {
    pub fn new() -> Assignment {
        Assignment::default()
    }

    pub fn with_var(mut self, v: AgentVar, n: u64) -> Assignment {
        self.vars.insert(v, n);
        self
    }

    pub fn with_param(mut self, i: u32, n: u64) -> Assignment {
        self.params.insert(i, n);
        self
    }

    pub fn set_var(&mut self, v: AgentVar, n: u64) {
        self.vars.insert(v, n);
    }

    pub fn set_param(&mut self, i: u32, n: u64) {
        self.params.insert(i, n);
    }

    pub fn value(&self, t: Term) -> Option<u64> {
        match t {
            Term::Nat(n) => Some(n),
            Term::Y1 => self.vars.get(&AgentVar::Y1).copied(),
            Term::Y2 => self.vars.get(&AgentVar::Y2).copied(),
            Term::Param(i) => self.params.get(&i).copied(),
        }
    }

    /// The bindings restricted to the given terms.
    pub fn restrict(&self, terms: &[Term]) -> Assignment {
        let mut out = Assignment::new();
        for t in terms {
            match t {
                Term::Y1 | Term::Y2 => {
                    let v = t.agent_var().unwrap();
                    if let Some(n) = self.vars.get(&v) {
                        out.vars.insert(v, *n);
                    }
                }
                Term::Param(i) => {
                    if let Some(n) = self.params.get(i) {
                        out.params.insert(*i, *n);
                    }
                }
                Term::Nat(_) => {}
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut m = serde_json::Map::new();
        for (v, n) in &self.vars {
            m.insert(v.to_string(), (*n).into());
        }
        for (i, n) in &self.params {
            m.insert(format!("z{i}"), (*n).into());
        }
        serde_json::Value::Object(m)
    }
}

/// Child indices from the root: `Not`/`Quant`/`Coop`/`X`/`G` have child 0,
/// binary nodes and `U` have children 0 and 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodePath(pub Vec<usize>);

impl NodePath {
    fn child(&self, i: usize) -> NodePath {
        let mut p = self.0.clone();
        p.push(i);
        NodePath(p)
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("root");
        }
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "root.{}", parts.join("."))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxIssue {
    #[error("{path}: y2 cannot count controllable agents and y1 cannot count uncontrollable ones")]
    PositionViolation { path: NodePath },
    #[error("{path}: {var} occurs under an odd number of negations")]
    PolarityViolation { path: NodePath, var: AgentVar },
    #[error("{path}: quantifier prefix must bind one or two distinct variables")]
    InadmissiblePrefix { path: NodePath },
}

impl SyntaxIssue {
    pub fn path(&self) -> &NodePath {
        match self {
            SyntaxIssue::PositionViolation { path }
            | SyntaxIssue::PolarityViolation { path, .. }
            | SyntaxIssue::InadmissiblePrefix { path } => path,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Polarity {
    AllPositive,
    AllNegative,
    Mixed,
    Absent,
}

impl Polarity {
    fn add(self, positive: bool) -> Polarity {
        match (self, positive) {
            (Polarity::Absent, true) | (Polarity::AllPositive, true) => Polarity::AllPositive,
            (Polarity::Absent, false) | (Polarity::AllNegative, false) => Polarity::AllNegative,
            _ => Polarity::Mixed,
        }
    }
}

impl StateFormula {
    /// Number of AST nodes, counting path nodes and each quantifier node once.
    pub fn size(&self) -> usize {
        match self {
            StateFormula::Top | StateFormula::Prop(_) => 1,
            StateFormula::Not(a) | StateFormula::Quant(_, a) => 1 + a.size(),
            StateFormula::And(a, b) | StateFormula::Or(a, b) => 1 + a.size() + b.size(),
            StateFormula::Coop(_, _, chi) => 1 + chi.size(),
        }
    }

    pub fn has_free(&self, v: AgentVar) -> bool {
        match self {
            StateFormula::Top | StateFormula::Prop(_) => false,
            StateFormula::Not(a) => a.has_free(v),
            StateFormula::And(a, b) | StateFormula::Or(a, b) => a.has_free(v) || b.has_free(v),
            StateFormula::Coop(t1, t2, chi) => t1.is(v) || t2.is(v) || chi.has_free(v),
            StateFormula::Quant(q, a) => !q.binds(v) && a.has_free(v),
        }
    }

    /// Parameters and free agent variables, in first-occurrence order.
    pub fn free_terms(&self) -> Vec<Term> {
        let mut out = Vec::new();
        self.collect_free(&mut out, &[]);
        out
    }

    fn collect_free(&self, out: &mut Vec<Term>, bound: &[AgentVar]) {
        match self {
            StateFormula::Top | StateFormula::Prop(_) => {}
            StateFormula::Not(a) => a.collect_free(out, bound),
            StateFormula::And(a, b) | StateFormula::Or(a, b) => {
                a.collect_free(out, bound);
                b.collect_free(out, bound);
            }
            StateFormula::Coop(t1, t2, chi) => {
                for t in [t1, t2] {
                    let free = match t.agent_var() {
                        Some(v) => !bound.contains(&v),
                        None => matches!(t, Term::Param(_)),
                    };
                    if free && !out.contains(t) {
                        out.push(*t);
                    }
                }
                chi.for_each_state(|s| s.collect_free(out, bound));
            }
            StateFormula::Quant(q, a) => {
                let mut b = bound.to_vec();
                b.extend(q.items().iter().map(|(_, v)| *v));
                a.collect_free(out, &b);
            }
        }
    }

    /// Propositions in first-occurrence order.
    pub fn props(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit(&mut |f| {
            if let StateFormula::Prop(p) = f {
                if !out.contains(p) {
                    out.push(p.clone());
                }
            }
        });
        out
    }

    /// Pre-order traversal of all state subformulas.
    pub fn visit(&self, f: &mut impl FnMut(&StateFormula)) {
        f(self);
        match self {
            StateFormula::Top | StateFormula::Prop(_) => {}
            StateFormula::Not(a) | StateFormula::Quant(_, a) => a.visit(f),
            StateFormula::And(a, b) | StateFormula::Or(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            StateFormula::Coop(_, _, chi) => chi.for_each_state(|s| s.visit(f)),
        }
    }

    pub fn has_quantifier(&self) -> bool {
        let mut found = false;
        self.visit(&mut |f| found |= matches!(f, StateFormula::Quant(..)));
        found
    }
}

impl PathFormula {
    pub fn size(&self) -> usize {
        match self {
            PathFormula::Next(a) | PathFormula::Globally(a) => 1 + a.size(),
            PathFormula::Until(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn has_free(&self, v: AgentVar) -> bool {
        match self {
            PathFormula::Next(a) | PathFormula::Globally(a) => a.has_free(v),
            PathFormula::Until(a, b) => a.has_free(v) || b.has_free(v),
        }
    }

    pub fn for_each_state<'a>(&'a self, mut f: impl FnMut(&'a StateFormula)) {
        match self {
            PathFormula::Next(a) | PathFormula::Globally(a) => f(a),
            PathFormula::Until(a, b) => {
                f(a);
                f(b);
            }
        }
    }

    pub fn map_states(&self, mut f: impl FnMut(&StateFormula) -> StateFormula) -> PathFormula {
        match self {
            PathFormula::Next(a) => PathFormula::Next(Box::new(f(a))),
            PathFormula::Globally(a) => PathFormula::Globally(Box::new(f(a))),
            PathFormula::Until(a, b) => {
                let a = f(a);
                PathFormula::Until(Box::new(a), Box::new(f(b)))
            }
        }
    }
}

/// Classifies the free occurrences of `v` by the parity of enclosing
/// negations.
pub fn polarity(phi: &StateFormula, v: AgentVar) -> Polarity {
    fn go(phi: &StateFormula, v: AgentVar, positive: bool, acc: Polarity) -> Polarity {
        match phi {
            StateFormula::Top | StateFormula::Prop(_) => acc,
            StateFormula::Not(a) => go(a, v, !positive, acc),
            StateFormula::And(a, b) | StateFormula::Or(a, b) => {
                let acc = go(a, v, positive, acc);
                go(b, v, positive, acc)
            }
            StateFormula::Coop(t1, t2, chi) => {
                let mut acc = acc;
                if t1.is(v) || t2.is(v) {
                    acc = acc.add(positive);
                }
                chi.for_each_state(|s| acc = go(s, v, positive, acc));
                acc
            }
            StateFormula::Quant(q, a) => {
                if q.binds(v) {
                    acc
                } else {
                    go(a, v, positive, acc)
                }
            }
        }
    }
    go(phi, v, true, Polarity::Absent)
}

/// Checks term positions, prefix admissibility and polarity, then returns the
/// formula with vacuous quantifiers removed.
///
/// Polarity is scope-local: each quantifier node is checked against the free
/// occurrences in its own body. Vacuously bound variables are ignored.
pub fn check_syntax(phi: &StateFormula) -> Result<StateFormula, Vec<SyntaxIssue>> {
    let mut issues = Vec::new();
    check_state(phi, &NodePath::default(), &mut issues);
    if issues.is_empty() {
        Ok(drop_vacuous(phi))
    } else {
        Err(issues)
    }
}

fn check_state(phi: &StateFormula, path: &NodePath, issues: &mut Vec<SyntaxIssue>) {
    match phi {
        StateFormula::Top | StateFormula::Prop(_) => {}
        StateFormula::Not(a) => check_state(a, &path.child(0), issues),
        StateFormula::And(a, b) | StateFormula::Or(a, b) => {
            check_state(a, &path.child(0), issues);
            check_state(b, &path.child(1), issues);
        }
        StateFormula::Coop(t1, t2, chi) => {
            if *t1 == Term::Y2 || *t2 == Term::Y1 {
                issues.push(SyntaxIssue::PositionViolation { path: path.clone() });
            }
            let p = path.child(0);
            match &**chi {
                PathFormula::Next(a) | PathFormula::Globally(a) => check_state(a, &p.child(0), issues),
                PathFormula::Until(a, b) => {
                    check_state(a, &p.child(0), issues);
                    check_state(b, &p.child(1), issues);
                }
            }
        }
        StateFormula::Quant(q, a) => {
            if QuantPrefix::new(q.items().to_vec()).is_err() {
                issues.push(SyntaxIssue::InadmissiblePrefix { path: path.clone() });
            }
            for (_, v) in q.items() {
                if let Polarity::AllNegative | Polarity::Mixed = polarity(a, *v) {
                    issues.push(SyntaxIssue::PolarityViolation {
                        path: path.clone(),
                        var: *v,
                    });
                }
            }
            check_state(a, &path.child(0), issues);
        }
    }
}

/// Removes quantifiers over variables that are not free in their body.
pub fn drop_vacuous(phi: &StateFormula) -> StateFormula {
    match phi {
        StateFormula::Top | StateFormula::Prop(_) => phi.clone(),
        StateFormula::Not(a) => StateFormula::Not(Box::new(drop_vacuous(a))),
        StateFormula::And(a, b) => StateFormula::And(Box::new(drop_vacuous(a)), Box::new(drop_vacuous(b))),
        StateFormula::Or(a, b) => StateFormula::Or(Box::new(drop_vacuous(a)), Box::new(drop_vacuous(b))),
        StateFormula::Coop(t1, t2, chi) => StateFormula::Coop(*t1, *t2, Box::new(chi.map_states(drop_vacuous))),
        StateFormula::Quant(q, a) => {
            let body = drop_vacuous(a);
            match q.retain(|v| body.has_free(v)) {
                Some(q) => StateFormula::Quant(q, Box::new(body)),
                None => body,
            }
        }
    }
}

/// `φ[k/t]`: replaces free occurrences of `t` by the numeral `k`.
pub fn subst_term(phi: &StateFormula, t: Term, k: u64) -> StateFormula {
    match phi {
        StateFormula::Top | StateFormula::Prop(_) => phi.clone(),
        StateFormula::Not(a) => StateFormula::Not(Box::new(subst_term(a, t, k))),
        StateFormula::And(a, b) => StateFormula::And(Box::new(subst_term(a, t, k)), Box::new(subst_term(b, t, k))),
        StateFormula::Or(a, b) => StateFormula::Or(Box::new(subst_term(a, t, k)), Box::new(subst_term(b, t, k))),
        StateFormula::Coop(t1, t2, chi) => {
            let r = |u: &Term| if *u == t { Term::Nat(k) } else { *u };
            StateFormula::Coop(r(t1), r(t2), Box::new(subst_path(chi, t, k)))
        }
        StateFormula::Quant(q, a) => {
            if t.agent_var().is_some_and(|v| q.binds(v)) {
                phi.clone()
            } else {
                StateFormula::Quant(q.clone(), Box::new(subst_term(a, t, k)))
            }
        }
    }
}

pub fn subst_path(chi: &PathFormula, t: Term, k: u64) -> PathFormula {
    chi.map_states(|s| subst_term(s, t, k))
}

/// NF1: no `A y1` / `E y2`. NF2 and NF3: a strategic operator using a bound
/// `y1` and/or `y2` sits directly under exactly the matching prefix. Every
/// quantifier node must be such a prefix.
pub fn is_normal_form(phi: &StateFormula) -> bool {
    nf_state(phi, &[], None)
}

fn nf_state(phi: &StateFormula, bound: &[AgentVar], prefix: Option<&QuantPrefix>) -> bool {
    match phi {
        StateFormula::Top | StateFormula::Prop(_) => true,
        StateFormula::Not(a) => nf_state(a, bound, None),
        StateFormula::And(a, b) | StateFormula::Or(a, b) => nf_state(a, bound, None) && nf_state(b, bound, None),
        StateFormula::Coop(t1, t2, chi) => {
            let b1 = t1.is(AgentVar::Y1) && bound.contains(&AgentVar::Y1);
            let b2 = t2.is(AgentVar::Y2) && bound.contains(&AgentVar::Y2);
            let items = prefix.map(|p| p.items()).unwrap_or(&[]);
            use AgentVar::*;
            use Quantifier::*;
            let head_ok = match (b1, b2) {
                (true, true) => {
                    items == [(Forall, Y2), (Exists, Y1)] || items == [(Exists, Y1), (Forall, Y2)]
                }
                (true, false) => items == [(Exists, Y1)],
                (false, true) => items == [(Forall, Y2)],
                (false, false) => items.is_empty(),
            };
            let mut ok = head_ok;
            chi.for_each_state(|s| ok &= nf_state(s, bound, None));
            ok
        }
        StateFormula::Quant(q, a) => {
            if prefix.is_some() {
                return false;
            }
            let nf1 = q
                .items()
                .iter()
                .all(|item| *item != (Quantifier::Forall, AgentVar::Y1) && *item != (Quantifier::Exists, AgentVar::Y2));
            if !nf1 || !matches!(**a, StateFormula::Coop(..)) {
                return false;
            }
            let mut b = bound.to_vec();
            b.extend(q.items().iter().map(|(_, v)| *v));
            nf_state(a, &b, Some(q))
        }
    }
}

impl fmt::Display for StateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateFormula::Top => f.write_str("true"),
            StateFormula::Prop(p) => f.write_str(p),
            StateFormula::Not(a) => write!(f, "!{a}"),
            StateFormula::And(a, b) => write!(f, "({a} & {b})"),
            StateFormula::Or(a, b) => write!(f, "({a} | {b})"),
            StateFormula::Coop(t1, t2, chi) => write!(f, "<<{t1},{t2}>> {chi}"),
            // A nested prefix is parenthesized so that it is not read back as one group.
            StateFormula::Quant(q, a) if matches!(**a, StateFormula::Quant(..)) => write!(f, "{q} ({a})"),
            StateFormula::Quant(q, a) => write!(f, "{q} {a}"),
        }
    }
}

impl fmt::Display for PathFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathFormula::Next(a) => write!(f, "X {a}"),
            PathFormula::Globally(a) => write!(f, "G {a}"),
            PathFormula::Until(a, b) if **a == StateFormula::Top => write!(f, "F {b}"),
            PathFormula::Until(a, b) => write!(f, "({a} U {b})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::build::*;
    use super::*;
    use AgentVar::*;
    use Quantifier::*;

    fn e1() -> QuantPrefix {
        QuantPrefix::one(Exists, Y1)
    }

    #[test]
    fn position_violation() {
        let f = coop(Term::Y2, n(3), next(prop("p")));
        let errs = check_syntax(&f).unwrap_err();
        assert!(matches!(errs[0], SyntaxIssue::PositionViolation { .. }));
    }

    #[test]
    fn polarity_violation_under_one_negation() {
        let f = quant(e1(), not(coop(Term::Y1, n(5), next(prop("p")))));
        let errs = check_syntax(&f).unwrap_err();
        assert_eq!(
            errs,
            vec![SyntaxIssue::PolarityViolation {
                path: NodePath::default(),
                var: Y1
            }]
        );
    }

    #[test]
    fn fortress_example_is_valid() {
        let f = quant(
            QuantPrefix::two(Forall, Y2, Exists, Y1),
            coop(Term::Y1, Term::Y2, globally(not(prop("captured")))),
        );
        assert_eq!(check_syntax(&f), Ok(f));
    }

    #[test]
    fn polarity_classification() {
        let c = coop(Term::Y1, n(5), next(prop("p")));
        assert_eq!(polarity(&c, Y1), Polarity::AllPositive);
        assert_eq!(polarity(&not(c.clone()), Y1), Polarity::AllNegative);
        assert_eq!(polarity(&and(c.clone(), not(c.clone())), Y1), Polarity::Mixed);
        assert_eq!(polarity(&c, Y2), Polarity::Absent);
        let inner = quant(e1(), coop(Term::Y1, n(5), until(prop("p"), prop("p"))));
        let outer = coop(Term::Y1, n(10), next(not(inner)));
        assert_eq!(polarity(&outer, Y1), Polarity::AllPositive);
        // Scope-local polarity: the inner quantifier sees only its own body.
        assert!(check_syntax(&quant(e1(), outer)).is_ok());
    }

    #[test]
    fn vacuous_quantifiers_are_dropped() {
        let f = quant(QuantPrefix::two(Exists, Y1, Forall, Y2), coop(Term::Y1, n(2), next(prop("p"))));
        assert_eq!(check_syntax(&f).unwrap(), quant(e1(), coop(Term::Y1, n(2), next(prop("p")))));
        let g = quant(QuantPrefix::one(Forall, Y2), not(prop("p")));
        assert_eq!(check_syntax(&g).unwrap(), not(prop("p")));
    }

    #[test]
    fn normal_form_recognition() {
        let nf_ok = quant(e1(), coop(Term::Y1, Term::Param(1), globally(not(prop("captured")))));
        assert!(is_normal_form(&nf_ok));
        assert!(!is_normal_form(&quant(QuantPrefix::one(Forall, Y1), coop(Term::Y1, n(3), next(prop("p"))))));
        let nested = quant(
            e1(),
            coop(Term::Y1, n(5), next(coop(Term::Y1, n(3), next(prop("p"))))),
        );
        assert!(!is_normal_form(&nested));
        let spread = quant(
            e1(),
            and(coop(Term::Y1, n(1), next(prop("p"))), prop("q")),
        );
        assert!(!is_normal_form(&spread));
        let both = quant(QuantPrefix::two(Exists, Y1, Forall, Y2), coop(Term::Y1, Term::Y2, next(prop("p"))));
        assert!(is_normal_form(&both));
        let wrong_pair = quant(QuantPrefix::two(Forall, Y2, Exists, Y1), coop(Term::Y1, n(1), next(prop("p"))));
        assert!(!is_normal_form(&wrong_pair));
        assert!(is_normal_form(&or(prop("p"), not(prop("q")))));
    }

    #[test]
    fn substitution() {
        let chi = globally(coop(Term::Y1, n(2), next(prop("p"))));
        let f = coop(Term::Y1, Term::Param(1), chi);
        let g = subst_term(&f, Term::Y1, 0);
        assert_eq!(g, coop(n(0), Term::Param(1), globally(coop(n(0), n(2), next(prop("p"))))));
        let bound = quant(e1(), coop(Term::Y1, n(5), next(prop("p"))));
        assert_eq!(subst_term(&bound, Term::Y1, 9), bound);
        let zz = coop(Term::Param(1), Term::Param(1), next(prop("p")));
        assert_eq!(subst_term(&zz, Term::Param(1), 4), coop(n(4), n(4), next(prop("p"))));
    }

    #[test]
    fn inadmissible_prefix_rejected() {
        assert!(QuantPrefix::new(vec![(Exists, Y1), (Forall, Y1)]).is_err());
        assert!(QuantPrefix::new(vec![]).is_err());
    }

    #[test]
    fn display_is_fully_parenthesized() {
        let f = or(
            coop(Term::Param(2), Term::Param(2), next(prop("p"))),
            quant(e1(), and(coop(Term::Y1, n(1), eventually(prop("q"))), not(prop("p")))),
        );
        assert_eq!(f.to_string(), "(<<z2,z2>> X p | E y1 (<<y1,1>> F q & !p))");
    }
}
