//! Global model checking of normal-form formulas.
//!
//! The controllable pre-image of a state set is computed by deciding, per
//! state, a Presburger formula saying that some split of `t1` controllable
//! agents over the available actions forces a guard into the target set for
//! every split of `t2` uncontrollable agents. `G` and `U` are the usual
//! greatest and least fixpoints over that pre-image.

use std::collections::HashMap;
use std::sync::Mutex;

use hdmas_presburger::{decide, simplify, substitute, DecideError, LinTerm, PresFormula, Var};
use rayon::prelude::*;
use thiserror::Error;

use crate::logic::{
    check_syntax, is_normal_form, AgentVar, Assignment, PathFormula, QuantPrefix, Quantifier, StateFormula,
    SyntaxIssue, Term,
};
use crate::model::{guard_union, HdmasModel};
use crate::normalform::nf;
use crate::stateset::StateSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("formula is not in normal form: {0}")]
    NotNormalForm(String),
    #[error("no value assigned to {0}")]
    UnassignedParameter(String),
    #[error("unknown proposition '{0}'")]
    UnknownProposition(String),
    #[error("ill-formed formula: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Syntax(Vec<SyntaxIssue>),
    #[error(transparent)]
    Decide(#[from] DecideError),
}

/// The quantifier prefixes that can precede a strategic operator in normal
/// form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pfix {
    Empty,
    ExistsY1,
    ForallY2,
    ExistsY1ForallY2,
    ForallY2ExistsY1,
}

impl Pfix {
    pub fn items(self) -> &'static [(Quantifier, AgentVar)] {
        use AgentVar::*;
        use Quantifier::*;
        match self {
            Pfix::Empty => &[],
            Pfix::ExistsY1 => &[(Exists, Y1)],
            Pfix::ForallY2 => &[(Forall, Y2)],
            Pfix::ExistsY1ForallY2 => &[(Exists, Y1), (Forall, Y2)],
            Pfix::ForallY2ExistsY1 => &[(Forall, Y2), (Exists, Y1)],
        }
    }

    pub fn from_prefix(q: Option<&QuantPrefix>) -> Option<Pfix> {
        let items = q.map(|q| q.items()).unwrap_or(&[]);
        [
            Pfix::Empty,
            Pfix::ExistsY1,
            Pfix::ForallY2,
            Pfix::ExistsY1ForallY2,
            Pfix::ForallY2ExistsY1,
        ]
        .into_iter()
        .find(|p| p.items() == items)
    }

    pub fn prefix(self) -> Option<QuantPrefix> {
        let items = self.items();
        if items.is_empty() {
            None
        } else {
            Some(QuantPrefix::new(items.to_vec()).unwrap())
        }
    }
}

/// A strategic-operator argument after resolution: a number, or one of the
/// agent variables left open for an enclosing quantifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrfArg {
    Value(u64),
    Open(AgentVar),
}

impl PrfArg {
    fn term(self) -> LinTerm {
        match self {
            PrfArg::Value(n) => LinTerm::constant(n as i64),
            PrfArg::Open(v) => LinTerm::var(agent_var(v)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PrfEncoding {
    /// Availability resolved, idle counters folded into `<=`, and only the
    /// counters of the guard union quantified.
    #[default]
    Simplified,
    /// One `k` and one `l` per action plus the idle pair, with availability
    /// implications and sum equations.
    Verbatim,
}

pub fn agent_var(v: AgentVar) -> Var {
    match v {
        AgentVar::Y1 => Var::named("y1"),
        AgentVar::Y2 => Var::named("y2"),
    }
}

fn sum(vars: &[Var]) -> LinTerm {
    vars.iter().fold(LinTerm::zero(), |acc, v| acc + LinTerm::var(*v))
}

/// The formula whose truth places `s` in the `(t1, t2)`-controllable
/// pre-image of `q`.
pub fn build_prf(m: &HdmasModel, s: usize, t1: PrfArg, t2: PrfArg, q: &StateSet, enc: PrfEncoding) -> PresFormula {
    let grd = guard_union(m, s, q);
    let acts = m.actions();
    let k = |i: usize| Var::named(&format!("k_{}", acts.name(i)));
    let l = |i: usize| Var::named(&format!("l_{}", acts.name(i)));
    let split = |g: &PresFormula, idx: &[usize]| {
        idx.iter().fold(g.clone(), |g, &i| {
            let t = LinTerm::var(k(i)) + LinTerm::var(l(i));
            substitute(&g, acts.counter(i), &t).expect("guards are quantifier-free")
        })
    };
    match enc {
        PrfEncoding::Simplified => {
            let grd = simplify(&grd);
            let used: Vec<usize> = (0..acts.len())
                .filter(|i| m.avail(s).contains(i) && grd_mentions(&grd, acts.counter(*i)))
                .collect();
            if used.is_empty() {
                // Zero agents on every action is always a legal split.
                return grd;
            }
            let ks: Vec<Var> = used.iter().map(|i| k(*i)).collect();
            let ls: Vec<Var> = used.iter().map(|i| l(*i)).collect();
            let inner = PresFormula::forall_many(
                &ls,
                PresFormula::implies(PresFormula::le(sum(&ls), t2.term()), split(&grd, &used)),
            );
            PresFormula::exists_many(&ks, PresFormula::and(vec![PresFormula::le(sum(&ks), t1.term()), inner]))
        }
        PrfEncoding::Verbatim => {
            let all: Vec<usize> = (0..acts.len()).collect();
            let avail = |v: &dyn Fn(usize) -> Var| {
                all.iter()
                    .map(|&i| {
                        let d = if m.avail(s).contains(&i) {
                            PresFormula::True
                        } else {
                            PresFormula::False
                        };
                        PresFormula::implies(PresFormula::ne(LinTerm::var(v(i)), LinTerm::zero()), d)
                    })
                    .collect::<Vec<_>>()
            };
            let (ke, le) = (Var::named("k_eps"), Var::named("l_eps"));
            let mut ks: Vec<Var> = all.iter().map(|i| k(*i)).collect();
            let mut ls: Vec<Var> = all.iter().map(|i| l(*i)).collect();
            let ksum = sum(&ks) + LinTerm::var(ke);
            let lsum = sum(&ls) + LinTerm::var(le);
            ks.push(ke);
            ls.push(le);
            let mut lhs = avail(&l);
            lhs.push(PresFormula::eq(lsum, t2.term()));
            let inner = PresFormula::forall_many(&ls, PresFormula::implies(PresFormula::and(lhs), split(&grd, &all)));
            let mut outer = avail(&k);
            outer.push(PresFormula::eq(ksum, t1.term()));
            outer.push(inner);
            PresFormula::exists_many(&ks, PresFormula::and(outer))
        }
    }
}

fn grd_mentions(g: &PresFormula, v: Var) -> bool {
    hdmas_presburger::free_vars(g).contains(&v)
}

/// Wraps `phi` in the given quantifiers over `y1`/`y2`, outermost first.
pub fn quantify(prefix: &[(Quantifier, AgentVar)], phi: PresFormula) -> PresFormula {
    prefix.iter().rev().fold(phi, |acc, (q, v)| match q {
        Quantifier::Exists => PresFormula::exists(agent_var(*v), acc),
        Quantifier::Forall => PresFormula::forall(agent_var(*v), acc),
    })
}

/// Outcome of a fixpoint computation; `trace[0]` is the initial `Z`, then
/// one entry per loop iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixpointRun {
    pub result: StateSet,
    pub trace: Vec<StateSet>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub decide_calls: u64,
    pub prf_cache_hits: u64,
    pub extension_cache_hits: u64,
}

type PrfKey = (usize, PrfArg, PrfArg, StateSet, Vec<(Quantifier, AgentVar)>);

/// Model checker for one model, memoizing prf verdicts and subformula
/// extensions.
pub struct Engine<'m> {
    model: &'m HdmasModel,
    encoding: PrfEncoding,
    prf_cache: Mutex<HashMap<PrfKey, bool>>,
    ext_cache: Mutex<HashMap<(StateFormula, Assignment), StateSet>>,
    stats: Mutex<EngineStats>,
}

impl<'m> Engine<'m> {
    pub fn new(model: &'m HdmasModel) -> Engine<'m> {
        Engine::with_encoding(model, PrfEncoding::Simplified)
    }

    pub fn with_encoding(model: &'m HdmasModel, encoding: PrfEncoding) -> Engine<'m> {
        Engine {
            model,
            encoding,
            prf_cache: Mutex::new(HashMap::new()),
            ext_cache: Mutex::new(HashMap::new()),
            stats: Mutex::new(EngineStats::default()),
        }
    }

    pub fn model(&self) -> &'m HdmasModel {
        self.model
    }

    pub fn stats(&self) -> EngineStats {
        *self.stats.lock().unwrap()
    }

    fn resolve(&self, t: Term, prefix: &[(Quantifier, AgentVar)], theta: &Assignment) -> Result<PrfArg, EngineError> {
        if let Some(v) = t.agent_var() {
            if prefix.iter().any(|(_, w)| *w == v) {
                return Ok(PrfArg::Open(v));
            }
        }
        theta
            .value(t)
            .map(PrfArg::Value)
            .ok_or_else(|| EngineError::UnassignedParameter(t.to_string()))
    }

    /// The closed formula decided for state `s`.
    pub fn prf_formula(
        &self,
        s: usize,
        t1: Term,
        t2: Term,
        q: &StateSet,
        theta: &Assignment,
        prefix: &[(Quantifier, AgentVar)],
    ) -> Result<PresFormula, EngineError> {
        let a1 = self.resolve(t1, prefix, theta)?;
        let a2 = self.resolve(t2, prefix, theta)?;
        Ok(quantify(prefix, build_prf(self.model, s, a1, a2, q, self.encoding)))
    }

    pub fn pre_image(
        &self,
        t1: Term,
        t2: Term,
        q: &StateSet,
        theta: &Assignment,
        pfix: Pfix,
    ) -> Result<StateSet, EngineError> {
        self.quantified_pre_image(t1, t2, q, theta, pfix.items())
    }

    /// Pre-image under an arbitrary quantifier prefix over `y1`/`y2`; with a
    /// normal-form prefix this is exactly [`Engine::pre_image`].
    pub fn quantified_pre_image(
        &self,
        t1: Term,
        t2: Term,
        q: &StateSet,
        theta: &Assignment,
        prefix: &[(Quantifier, AgentVar)],
    ) -> Result<StateSet, EngineError> {
        let a1 = self.resolve(t1, prefix, theta)?;
        let a2 = self.resolve(t2, prefix, theta)?;
        let n = self.model.state_count();
        let verdicts: Vec<Result<bool, EngineError>> = (0..n)
            .into_par_iter()
            .map(|s| {
                let key = (s, a1, a2, q.clone(), prefix.to_vec());
                if let Some(v) = self.prf_cache.lock().unwrap().get(&key) {
                    self.stats.lock().unwrap().prf_cache_hits += 1;
                    return Ok(*v);
                }
                let phi = quantify(prefix, build_prf(self.model, s, a1, a2, q, self.encoding));
                let v = decide(&phi)?;
                self.stats.lock().unwrap().decide_calls += 1;
                self.prf_cache.lock().unwrap().insert(key, v);
                Ok(v)
            })
            .collect();
        let mut out = StateSet::empty(n);
        for (s, v) in verdicts.into_iter().enumerate() {
            if v? {
                out.insert(s);
            }
        }
        Ok(out)
    }

    pub fn g_fixpoint(
        &self,
        t1: Term,
        t2: Term,
        psi: &StateFormula,
        theta: &Assignment,
        pfix: Pfix,
    ) -> Result<FixpointRun, EngineError> {
        let q = self.global_mc(psi, theta)?;
        let mut w = self.model.all_states();
        let mut z = q.clone();
        let mut trace = vec![z.clone()];
        while !w.is_subset(&z) {
            w = z;
            z = self.pre_image(t1, t2, &w, theta, pfix)?.intersection(&q);
            trace.push(z.clone());
        }
        Ok(FixpointRun { result: z, trace })
    }

    pub fn u_fixpoint(
        &self,
        t1: Term,
        t2: Term,
        psi1: &StateFormula,
        psi2: &StateFormula,
        theta: &Assignment,
        pfix: Pfix,
    ) -> Result<FixpointRun, EngineError> {
        let q1 = self.global_mc(psi1, theta)?;
        let q2 = self.global_mc(psi2, theta)?;
        let mut w = self.model.no_states();
        let mut z = q2.clone();
        let mut trace = vec![z.clone()];
        while !z.is_subset(&w) {
            w = z;
            z = q2.union(&self.pre_image(t1, t2, &w, theta, pfix)?.intersection(&q1));
            trace.push(z.clone());
        }
        Ok(FixpointRun { result: z, trace })
    }

    /// The extension of a normal-form formula.
    pub fn global_mc(&self, phi: &StateFormula, theta: &Assignment) -> Result<StateSet, EngineError> {
        if !is_normal_form(phi) {
            return Err(EngineError::NotNormalForm(phi.to_string()));
        }
        self.extension(phi, theta)
    }

    fn extension(&self, phi: &StateFormula, theta: &Assignment) -> Result<StateSet, EngineError> {
        let key = (phi.clone(), theta.restrict(&phi.free_terms()));
        if let Some(z) = self.ext_cache.lock().unwrap().get(&key) {
            self.stats.lock().unwrap().extension_cache_hits += 1;
            return Ok(z.clone());
        }
        let z = match phi {
            StateFormula::Top => self.model.all_states(),
            StateFormula::Prop(p) => {
                if self.model.prop_index(p).is_none() {
                    return Err(EngineError::UnknownProposition(p.clone()));
                }
                self.model.prop_extension(p)
            }
            StateFormula::Not(a) => self.extension(a, theta)?.complement(),
            StateFormula::And(a, b) => self.extension(a, theta)?.intersection(&self.extension(b, theta)?),
            StateFormula::Or(a, b) => self.extension(a, theta)?.union(&self.extension(b, theta)?),
            StateFormula::Coop(t1, t2, chi) => self.strategic(*t1, *t2, chi, theta, Pfix::Empty)?,
            StateFormula::Quant(q, body) => match (&**body, Pfix::from_prefix(Some(q))) {
                (StateFormula::Coop(t1, t2, chi), Some(pfix)) => self.strategic(*t1, *t2, chi, theta, pfix)?,
                _ => return Err(EngineError::NotNormalForm(phi.to_string())),
            },
        };
        self.ext_cache.lock().unwrap().insert(key, z.clone());
        Ok(z)
    }

    fn strategic(
        &self,
        t1: Term,
        t2: Term,
        chi: &PathFormula,
        theta: &Assignment,
        pfix: Pfix,
    ) -> Result<StateSet, EngineError> {
        match chi {
            PathFormula::Next(psi) => {
                let q = self.extension(psi, theta)?;
                self.pre_image(t1, t2, &q, theta, pfix)
            }
            PathFormula::Globally(psi) => Ok(self.g_fixpoint(t1, t2, psi, theta, pfix)?.result),
            PathFormula::Until(a, b) => Ok(self.u_fixpoint(t1, t2, a, b, theta, pfix)?.result),
        }
    }

    /// The extension of any well-formed formula, through its normal form.
    pub fn extension_of(&self, phi: &StateFormula, theta: &Assignment) -> Result<StateSet, EngineError> {
        let phi = check_syntax(phi).map_err(EngineError::Syntax)?;
        self.global_mc(&nf(&phi), theta)
    }

    pub fn check(&self, s: usize, phi: &StateFormula, theta: &Assignment) -> Result<bool, EngineError> {
        Ok(self.extension_of(phi, theta)?.contains(s))
    }
}

pub fn pre_image(
    m: &HdmasModel,
    t1: Term,
    t2: Term,
    q: &StateSet,
    theta: &Assignment,
    pfix: Pfix,
) -> Result<StateSet, EngineError> {
    Engine::new(m).pre_image(t1, t2, q, theta, pfix)
}

pub fn g_fixpoint(
    m: &HdmasModel,
    t1: Term,
    t2: Term,
    psi: &StateFormula,
    theta: &Assignment,
    pfix: Pfix,
) -> Result<FixpointRun, EngineError> {
    Engine::new(m).g_fixpoint(t1, t2, psi, theta, pfix)
}

pub fn u_fixpoint(
    m: &HdmasModel,
    t1: Term,
    t2: Term,
    psi1: &StateFormula,
    psi2: &StateFormula,
    theta: &Assignment,
    pfix: Pfix,
) -> Result<FixpointRun, EngineError> {
    Engine::new(m).u_fixpoint(t1, t2, psi1, psi2, theta, pfix)
}

pub fn global_mc(m: &HdmasModel, phi: &StateFormula, theta: &Assignment) -> Result<StateSet, EngineError> {
    Engine::new(m).global_mc(phi, theta)
}

pub fn check(m: &HdmasModel, s: usize, phi: &StateFormula, theta: &Assignment) -> Result<bool, EngineError> {
    Engine::new(m).check(s, phi, theta)
}
