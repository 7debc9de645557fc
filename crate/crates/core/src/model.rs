//! HDMAS structures: states, actions, availability, guards and labels.
//!
//! Each action `a` has the counter variable `#a`; the idle action ε has the
//! reserved counter `#eps`. Guards are quantifier-free formulas over the
//! counters of the actions available at their source state. An absent guard
//! entry is the guard `false`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use hdmas_presburger::{evaluate, free_vars, is_valid, search_bound, PresFormula, Valuation, Var};
use num_traits::ToPrimitive;
use serde::Serialize;
use thiserror::Error;

use crate::stateset::StateSet;

/// Name of the idle action as it appears in counter references.
pub const IDLE: &str = "eps";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("duplicate {kind} name '{name}'")]
    Duplicate { kind: &'static str, name: String },
    #[error("'{0}' is reserved for the idle action")]
    ReservedName(String),
    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },
    #[error("guard {from} -> {to} refers to the idle counter #eps")]
    IdleCounterInGuard { from: String, to: String },
    #[error("guard {from} -> {to} must be quantifier-free and divisibility-free")]
    GuardShape { from: String, to: String },
    #[error("guard {from} -> {to} uses '{counter}', which is not an action counter")]
    UnknownCounter { from: String, to: String, counter: String },
    #[error("state {state}: {count} guards match the distribution {eta}")]
    MalformedModel { state: String, count: usize, eta: String },
    #[error("distribution domains differ")]
    DomainMismatch,
}

/// Which action a counter belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActionRef {
    Act(usize),
    Idle,
}

/// Named actions with their counters; ε is implicit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionTable {
    names: Vec<String>,
    counters: Vec<Var>,
    idle: Var,
}

pub fn counter_var(action: &str) -> Var {
    Var::named(&format!("#{action}"))
}

impl ActionTable {
    pub fn new(names: Vec<String>) -> Result<ActionTable, ModelError> {
        let mut seen = BTreeSet::new();
        for n in &names {
            if n == IDLE {
                return Err(ModelError::ReservedName(n.clone()));
            }
            if !seen.insert(n.as_str()) {
                return Err(ModelError::Duplicate {
                    kind: "action",
                    name: n.clone(),
                });
            }
        }
        let counters = names.iter().map(|n| counter_var(n)).collect();
        Ok(ActionTable {
            names,
            counters,
            idle: counter_var(IDLE),
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn counter(&self, i: usize) -> Var {
        self.counters[i]
    }

    pub fn idle_counter(&self) -> Var {
        self.idle
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn action_of(&self, v: Var) -> Option<ActionRef> {
        if v == self.idle {
            return Some(ActionRef::Idle);
        }
        self.counters.iter().position(|c| *c == v).map(ActionRef::Act)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HdmasModel {
    states: Vec<String>,
    state_index: HashMap<String, usize>,
    actions: ActionTable,
    avail: Vec<Vec<usize>>,
    idle_avail: Vec<bool>,
    guards: Vec<Vec<Option<PresFormula>>>,
    props: Vec<String>,
    labels: Vec<BTreeSet<usize>>,
}

impl HdmasModel {
    /// A model with every action available everywhere, no guards and no
    /// labels.
    pub fn new(
        states: Vec<String>,
        actions: ActionTable,
        props: Vec<String>,
    ) -> Result<HdmasModel, ModelError> {
        let mut state_index = HashMap::new();
        for (i, s) in states.iter().enumerate() {
            if state_index.insert(s.clone(), i).is_some() {
                return Err(ModelError::Duplicate {
                    kind: "state",
                    name: s.clone(),
                });
            }
        }
        let mut seen = BTreeSet::new();
        for p in &props {
            if !seen.insert(p.as_str()) {
                return Err(ModelError::Duplicate {
                    kind: "proposition",
                    name: p.clone(),
                });
            }
        }
        let n = states.len();
        Ok(HdmasModel {
            avail: vec![(0..actions.len()).collect(); n],
            idle_avail: vec![true; n],
            guards: vec![vec![None; n]; n],
            labels: vec![BTreeSet::new(); n],
            states,
            state_index,
            actions,
            props,
        })
    }

    pub fn set_avail(&mut self, s: usize, acts: &[usize], idle: bool) {
        let mut a: Vec<usize> = acts.to_vec();
        a.sort_unstable();
        a.dedup();
        self.avail[s] = a;
        self.idle_avail[s] = idle;
    }

    /// Installs `δ(from, to) = g` after checking its load-time shape.
    pub fn set_guard(&mut self, from: usize, to: usize, g: PresFormula) -> Result<(), ModelError> {
        let names = || (self.states[from].clone(), self.states[to].clone());
        if !g.is_quantifier_free() || g.has_divides() {
            let (from, to) = names();
            return Err(ModelError::GuardShape { from, to });
        }
        for v in free_vars(&g) {
            match self.actions.action_of(v) {
                Some(ActionRef::Act(_)) => {}
                Some(ActionRef::Idle) => {
                    let (from, to) = names();
                    return Err(ModelError::IdleCounterInGuard { from, to });
                }
                None => {
                    let (from, to) = names();
                    return Err(ModelError::UnknownCounter {
                        from,
                        to,
                        counter: v.name().to_string(),
                    });
                }
            }
        }
        self.guards[from][to] = Some(g);
        Ok(())
    }

    pub fn clear_guard(&mut self, from: usize, to: usize) {
        self.guards[from][to] = None;
    }

    pub fn set_label(&mut self, s: usize, props: &[usize]) {
        self.labels[s] = props.iter().copied().collect();
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.states[s]
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.state_index.get(name).copied()
    }

    pub fn actions(&self) -> &ActionTable {
        &self.actions
    }

    /// Indices of the non-idle actions available at `s`.
    pub fn avail(&self, s: usize) -> &[usize] {
        &self.avail[s]
    }

    pub fn idle_available(&self, s: usize) -> bool {
        self.idle_avail[s]
    }

    pub fn guard(&self, from: usize, to: usize) -> Option<&PresFormula> {
        self.guards[from][to].as_ref()
    }

    pub fn props(&self) -> &[String] {
        &self.props
    }

    pub fn prop_index(&self, p: &str) -> Option<usize> {
        self.props.iter().position(|q| q == p)
    }

    pub fn label(&self, s: usize) -> &BTreeSet<usize> {
        &self.labels[s]
    }

    pub fn all_states(&self) -> StateSet {
        StateSet::full(self.state_count())
    }

    pub fn no_states(&self) -> StateSet {
        StateSet::empty(self.state_count())
    }

    /// States labeled with `p`; empty for an undeclared proposition.
    pub fn prop_extension(&self, p: &str) -> StateSet {
        let mut out = self.no_states();
        if let Some(i) = self.prop_index(p) {
            for s in 0..self.state_count() {
                if self.labels[s].contains(&i) {
                    out.insert(s);
                }
            }
        }
        out
    }

    pub fn states_named(&self, names: &[&str]) -> StateSet {
        StateSet::from_indices(
            self.state_count(),
            names
                .iter()
                .map(|n| self.state_index(n).unwrap_or_else(|| panic!("no state {n}"))),
        )
    }

    pub fn names_of(&self, set: &StateSet) -> Vec<String> {
        set.iter().map(|s| self.states[s].clone()).collect()
    }

    /// The counters `μ[d(s)]` in action order, idle counter last.
    pub fn domain(&self, s: usize) -> Vec<Var> {
        let mut d: Vec<Var> = self.avail[s].iter().map(|i| self.actions.counter(*i)).collect();
        if self.idle_avail[s] {
            d.push(self.actions.idle_counter());
        }
        d
    }

    /// The counters guards at `s` may use: `μ[d(s)] \ {x_ε}`.
    pub fn guard_vars(&self, s: usize) -> BTreeSet<Var> {
        self.avail[s].iter().map(|i| self.actions.counter(*i)).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let states: Vec<serde_json::Value> = (0..self.state_count())
            .map(|s| {
                let guards: BTreeMap<&str, String> = (0..self.state_count())
                    .filter_map(|t| self.guard(s, t).map(|g| (self.state_name(t), g.to_string())))
                    .collect();
                serde_json::json!({
                    "name": self.state_name(s),
                    "avail": self.avail[s].iter().map(|i| self.actions.name(*i)).collect::<Vec<_>>(),
                    "idle": self.idle_avail[s],
                    "label": self.labels[s].iter().map(|p| self.props[*p].as_str()).collect::<Vec<_>>(),
                    "guards": guards,
                })
            })
            .collect();
        serde_json::json!({
            "schema": 1,
            "actions": self.actions.names(),
            "props": self.props,
            "states": states,
        })
    }
}

/// Counts agents per available counter: the abstraction of a joint action.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ActionDistribution {
    domain: Vec<Var>,
    counts: Vec<u64>,
}

impl ActionDistribution {
    pub fn new(domain: Vec<Var>, counts: Vec<u64>) -> ActionDistribution {
        assert_eq!(domain.len(), counts.len(), "one count per counter");
        ActionDistribution { domain, counts }
    }

    pub fn zero(domain: Vec<Var>) -> ActionDistribution {
        let n = domain.len();
        ActionDistribution::new(domain, vec![0; n])
    }

    pub fn domain(&self) -> &[Var] {
        &self.domain
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, v: Var) -> Option<u64> {
        self.domain.iter().position(|d| *d == v).map(|i| self.counts[i])
    }

    /// `⟨η⟩`, the number of agents.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn to_valuation(&self) -> Valuation {
        self.domain.iter().copied().zip(self.counts.iter().copied()).collect()
    }
}

impl fmt::Debug for ActionDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.domain.iter().zip(self.counts.iter()))
            .finish()
    }
}

/// Pointwise sum of two distributions over the same domain.
pub fn oplus(a: &ActionDistribution, b: &ActionDistribution) -> Result<ActionDistribution, ModelError> {
    if a.domain != b.domain {
        return Err(ModelError::DomainMismatch);
    }
    let counts = a.counts.iter().zip(&b.counts).map(|(x, y)| x + y).collect();
    Ok(ActionDistribution::new(a.domain.clone(), counts))
}

/// The unique state whose guard from `s` the distribution satisfies.
pub fn successor(m: &HdmasModel, s: usize, eta: &ActionDistribution) -> Result<usize, ModelError> {
    let val = eta.to_valuation();
    let mut found = Vec::new();
    for t in 0..m.state_count() {
        if let Some(g) = m.guard(s, t) {
            // Unassigned counters can only come from an unchecked model.
            if evaluate(g, &val).unwrap_or(false) {
                found.push(t);
            }
        }
    }
    match found.as_slice() {
        [t] => Ok(*t),
        _ => Err(ModelError::MalformedModel {
            state: m.state_name(s).to_string(),
            count: found.len(),
            eta: format!("{eta:?}"),
        }),
    }
}

/// `grd_{s,Q}`: disjunction of the guards from `s` into `Q`.
pub fn guard_union(m: &HdmasModel, s: usize, q: &StateSet) -> PresFormula {
    PresFormula::or(q.iter().filter_map(|t| m.guard(s, t).cloned()).collect())
}

/// All distributions of `total` agents over the given counters.
///
/// Order: the first counter takes the largest share first, i.e. reverse
/// lexicographic order of the count vectors.
pub fn distributions(m: &HdmasModel, s: usize, total: u64) -> Distributions {
    Distributions::over(m.domain(s), total)
}

pub struct Distributions {
    domain: Vec<Var>,
    next: Option<Vec<u64>>,
}

impl Distributions {
    pub fn over(domain: Vec<Var>, total: u64) -> Distributions {
        let next = match domain.len() {
            0 if total > 0 => None,
            0 => Some(Vec::new()),
            k => {
                let mut c = vec![0; k];
                c[0] = total;
                Some(c)
            }
        };
        Distributions { domain, next }
    }
}

impl Iterator for Distributions {
    type Item = ActionDistribution;

    fn next(&mut self) -> Option<ActionDistribution> {
        let cur = self.next.take()?;
        let k = cur.len();
        if k >= 2 {
            if let Some(i) = (0..k - 1).rev().find(|&i| cur[i] > 0) {
                let mut n = cur.clone();
                let tail: u64 = n[i + 1..].iter().sum();
                n[i] -= 1;
                n[i + 1] = tail + 1;
                n[i + 2..].iter_mut().for_each(|x| *x = 0);
                self.next = Some(n);
            }
        }
        Some(ActionDistribution::new(self.domain.clone(), cur))
    }
}

/// Outcome of one well-formedness check for one state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckOutcome {
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<BTreeMap<String, u64>>,
}

impl CheckOutcome {
    fn pass() -> CheckOutcome {
        CheckOutcome {
            passed: true,
            detail: None,
            counterexample: None,
        }
    }

    fn fail(detail: String, counterexample: Option<BTreeMap<String, u64>>) -> CheckOutcome {
        CheckOutcome {
            passed: false,
            detail: Some(detail),
            counterexample,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateReport {
    pub state: String,
    pub idle_available: CheckOutcome,
    pub guard_scoping: CheckOutcome,
    pub totality: CheckOutcome,
    pub determinism: CheckOutcome,
    /// Ordered successor pairs examined for disjointness.
    pub pairs_checked: usize,
}

impl StateReport {
    pub fn passed(&self) -> bool {
        self.idle_available.passed
            && self.guard_scoping.passed
            && self.totality.passed
            && self.determinism.passed
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WellformednessReport {
    pub states: Vec<StateReport>,
}

impl WellformednessReport {
    pub fn is_wellformed(&self) -> bool {
        self.states.iter().all(StateReport::passed)
    }

    pub fn render_plain(&self) -> String {
        let mut out = String::new();
        for r in &self.states {
            let checks = [
                ("idle-availability", &r.idle_available),
                ("guard-scoping", &r.guard_scoping),
                ("totality", &r.totality),
                ("determinism", &r.determinism),
            ];
            for (name, c) in checks {
                let verdict = if c.passed { "ok" } else { "FAIL" };
                out.push_str(&format!("{:<8} {:<18} {}", r.state, name, verdict));
                if let Some(d) = &c.detail {
                    out.push_str(&format!("  {d}"));
                }
                if let Some(cx) = &c.counterexample {
                    let parts: Vec<String> = cx.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    out.push_str(&format!("  counterexample: {}", parts.join(" ")));
                }
                out.push('\n');
            }
        }
        out.push_str(if self.is_wellformed() {
            "model is well-formed\n"
        } else {
            "model is NOT well-formed\n"
        });
        out
    }
}

/// Checks the side conditions on availability and guards, state by state.
pub fn check_wellformed(m: &HdmasModel) -> WellformednessReport {
    use rayon::prelude::*;
    let states = (0..m.state_count())
        .into_par_iter()
        .map(|s| check_state(m, s))
        .collect();
    WellformednessReport { states }
}

fn check_state(m: &HdmasModel, s: usize) -> StateReport {
    let name = m.state_name(s).to_string();
    let idle_available = if m.idle_available(s) {
        CheckOutcome::pass()
    } else {
        CheckOutcome::fail("the idle action is not available".into(), None)
    };

    let allowed = m.guard_vars(s);
    let mut scoping_errors = Vec::new();
    let mut vars = allowed.clone();
    for t in 0..m.state_count() {
        if let Some(g) = m.guard(s, t) {
            for v in free_vars(g) {
                vars.insert(v);
                if !allowed.contains(&v) {
                    scoping_errors.push(format!("{name} -> {} uses {v}", m.state_name(t)));
                }
            }
        }
    }
    let guard_scoping = if scoping_errors.is_empty() {
        CheckOutcome::pass()
    } else {
        CheckOutcome::fail(
            format!("counter not available: {}", scoping_errors.join(", ")),
            None,
        )
    };

    let all = guard_union(m, s, &m.all_states());
    let totality = if is_valid(&all, &vars) {
        CheckOutcome::pass()
    } else {
        let neg = PresFormula::not(all);
        CheckOutcome::fail(
            "some distribution satisfies no guard".into(),
            witness(m, &neg, &vars),
        )
    };

    let present: Vec<usize> = (0..m.state_count()).filter(|t| m.guard(s, *t).is_some()).collect();
    let mut pairs_checked = 0;
    let mut determinism = CheckOutcome::pass();
    'outer: for (i, &a) in present.iter().enumerate() {
        for &b in &present[i + 1..] {
            pairs_checked += 2;
            let both = PresFormula::and(vec![
                m.guard(s, a).unwrap().clone(),
                m.guard(s, b).unwrap().clone(),
            ]);
            if !is_valid(&PresFormula::not(both.clone()), &vars) {
                determinism = CheckOutcome::fail(
                    format!(
                        "guards {name} -> {} and {name} -> {} overlap",
                        m.state_name(a),
                        m.state_name(b)
                    ),
                    witness(m, &both, &vars),
                );
                break 'outer;
            }
        }
    }

    StateReport {
        state: name,
        idle_available,
        guard_scoping,
        totality,
        determinism,
        pairs_checked,
    }
}

/// Smallest-total valuation satisfying `phi`, searching each variable up to
/// the formula's search bound.
fn witness(m: &HdmasModel, phi: &PresFormula, vars: &BTreeSet<Var>) -> Option<BTreeMap<String, u64>> {
    let vars: Vec<Var> = vars.iter().copied().collect();
    let bound = search_bound(phi).to_u64()?;
    let k = vars.len() as u64;
    for total in 0..=k * bound {
        for eta in Distributions::over(vars.clone(), total) {
            if eta.counts().iter().any(|c| *c > bound) {
                continue;
            }
            if evaluate(phi, &eta.to_valuation()).unwrap_or(false) {
                return Some(
                    vars.iter()
                        .zip(eta.counts())
                        .map(|(v, c)| {
                            let label = match m.actions().action_of(*v) {
                                Some(ActionRef::Act(i)) => format!("#{}", m.actions().name(i)),
                                _ => v.name().to_string(),
                            };
                            (label, *c)
                        })
                        .collect(),
                );
            }
        }
    }
    None
}
