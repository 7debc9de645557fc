//! Explicit-enumeration semantics for formulas with concrete coalition sizes.
//!
//! Used as ground truth against the symbolic engine, so nothing here goes
//! through Presburger reasoning: every split of the controllable agents is
//! tried against every split of the others, and successors are found by
//! evaluating guards on the resulting counts.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::logic::{Assignment, PathFormula, StateFormula, Term};
use crate::model::{distributions, oplus, successor, ActionDistribution, HdmasModel, ModelError};
use crate::stateset::StateSet;

pub const DEFAULT_ENUM_CAP: u64 = 1_000_000;
pub const ENUM_CAP_ENV: &str = "HDMAS_ENUM_CAP";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("state {state}: {pairs} distribution pairs exceed the enumeration cap of {cap}")]
    EnumerationCapExceeded { state: String, pairs: u128, cap: u64 },
    #[error("the oracle only handles formulas without agent quantifiers: {0}")]
    Quantified(String),
    #[error("no value assigned to {0}")]
    UnassignedParameter(String),
    #[error("unknown proposition '{0}'")]
    UnknownProposition(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The cap from `HDMAS_ENUM_CAP`, or the default.
pub fn enum_cap() -> u64 {
    std::env::var(ENUM_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_ENUM_CAP)
}

/// Number of distributions of `n` agents over `k` counters.
fn count_distributions(n: u64, k: usize) -> u128 {
    if k == 0 {
        return u128::from(n == 0);
    }
    // binomial(n + k - 1, k - 1), multiplicatively
    let k = (k - 1) as u128;
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc.saturating_mul(n as u128 + i) / i;
    }
    acc
}

pub struct Oracle<'m> {
    model: &'m HdmasModel,
    cap: u64,
}

impl<'m> Oracle<'m> {
    pub fn new(model: &'m HdmasModel) -> Oracle<'m> {
        Oracle::with_cap(model, enum_cap())
    }

    pub fn with_cap(model: &'m HdmasModel, cap: u64) -> Oracle<'m> {
        Oracle { model, cap }
    }

    /// States where some split of `c` agents forces every outcome into `q`,
    /// whatever `n` further agents do.
    pub fn pre_image(&self, c: u64, n: u64, q: &StateSet) -> Result<StateSet, OracleError> {
        let m = self.model;
        let verdicts: Vec<Result<bool, OracleError>> =
            (0..m.state_count()).into_par_iter().map(|s| self.state_in_pre(s, c, n, q)).collect();
        let mut out = StateSet::empty(m.state_count());
        for (s, v) in verdicts.into_iter().enumerate() {
            if v? {
                out.insert(s);
            }
        }
        Ok(out)
    }

    fn state_in_pre(&self, s: usize, c: u64, n: u64, q: &StateSet) -> Result<bool, OracleError> {
        let m = self.model;
        let k = m.domain(s).len();
        let pairs = count_distributions(c, k).saturating_mul(count_distributions(n, k));
        if pairs > self.cap as u128 {
            return Err(OracleError::EnumerationCapExceeded {
                state: m.state_name(s).to_string(),
                pairs,
                cap: self.cap,
            });
        }
        let others: Vec<ActionDistribution> = distributions(m, s, n).collect();
        let mut memo: HashMap<Vec<u64>, usize> = HashMap::new();
        for mine in distributions(m, s, c) {
            let mut forced = true;
            for theirs in &others {
                let joint = oplus(&mine, theirs)?;
                let next = match memo.get(joint.counts()) {
                    Some(t) => *t,
                    None => {
                        let t = successor(m, s, &joint)?;
                        memo.insert(joint.counts().to_vec(), t);
                        t
                    }
                };
                if !q.contains(next) {
                    forced = false;
                    break;
                }
            }
            if forced {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn value(&self, t: Term, theta: &Assignment) -> Result<u64, OracleError> {
        theta.value(t).ok_or_else(|| OracleError::UnassignedParameter(t.to_string()))
    }

    /// The extension of a quantifier-free formula.
    pub fn global_mc(&self, phi: &StateFormula, theta: &Assignment) -> Result<StateSet, OracleError> {
        let m = self.model;
        Ok(match phi {
            StateFormula::Top => m.all_states(),
            StateFormula::Prop(p) => {
                if m.prop_index(p).is_none() {
                    return Err(OracleError::UnknownProposition(p.clone()));
                }
                m.prop_extension(p)
            }
            StateFormula::Not(a) => self.global_mc(a, theta)?.complement(),
            StateFormula::And(a, b) => self.global_mc(a, theta)?.intersection(&self.global_mc(b, theta)?),
            StateFormula::Or(a, b) => self.global_mc(a, theta)?.union(&self.global_mc(b, theta)?),
            StateFormula::Quant(..) => return Err(OracleError::Quantified(phi.to_string())),
            StateFormula::Coop(t1, t2, chi) => {
                let c = self.value(*t1, theta)?;
                let n = self.value(*t2, theta)?;
                match &**chi {
                    PathFormula::Next(psi) => self.pre_image(c, n, &self.global_mc(psi, theta)?)?,
                    PathFormula::Globally(psi) => {
                        let q = self.global_mc(psi, theta)?;
                        let mut z = q.clone();
                        loop {
                            let next = self.pre_image(c, n, &z)?.intersection(&q);
                            if next == z {
                                break z;
                            }
                            z = next;
                        }
                    }
                    PathFormula::Until(a, b) => {
                        let q1 = self.global_mc(a, theta)?;
                        let q2 = self.global_mc(b, theta)?;
                        let mut z = q2.clone();
                        loop {
                            let next = q2.union(&self.pre_image(c, n, &z)?.intersection(&q1));
                            if next == z {
                                break z;
                            }
                            z = next;
                        }
                    }
                }
            }
        })
    }
}

pub fn concrete_pre_image(m: &HdmasModel, c: u64, n: u64, q: &StateSet) -> Result<StateSet, OracleError> {
    Oracle::new(m).pre_image(c, n, q)
}

pub fn concrete_global_mc(m: &HdmasModel, phi: &StateFormula, theta: &Assignment) -> Result<StateSet, OracleError> {
    Oracle::new(m).global_mc(phi, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_model;
    use crate::logic::build::*;
    use crate::logic::{AgentVar, QuantPrefix, Quantifier};

    fn fig2() -> HdmasModel {
        parse_model(include_str!("../fixtures/fig2.hdmas")).unwrap().model
    }

    #[test]
    fn example_pre_images() {
        let m = fig2();
        let s1 = m.state_index("s1").unwrap();
        let q = m.states_named(&["s2", "s3", "s4"]);
        assert!(concrete_pre_image(&m, 7, 5, &q).unwrap().contains(s1));
        assert!(!concrete_pre_image(&m, 0, 11, &q).unwrap().contains(s1));
        for c in 0..4 {
            assert_eq!(concrete_pre_image(&m, c, 0, &m.all_states()).unwrap(), m.all_states());
        }
    }

    #[test]
    fn quantifier_free_checks() {
        let m = fig2();
        let th = Assignment::new();
        let s1 = m.state_index("s1").unwrap();
        let x = coop(n(7), n(5), next(prop("p")));
        assert!(concrete_global_mc(&m, &x, &th).unwrap().contains(s1));
        assert_eq!(concrete_global_mc(&m, &prop("p"), &th).unwrap(), m.states_named(&["s2", "s3", "s4"]));
        assert_eq!(concrete_global_mc(&m, &StateFormula::Top, &th).unwrap(), m.all_states());
        let q = quant(QuantPrefix::one(Quantifier::Exists, AgentVar::Y1), coop(Term::Y1, n(1), next(prop("p"))));
        assert!(matches!(concrete_global_mc(&m, &q, &th), Err(OracleError::Quantified(_))));
    }

    #[test]
    fn cap_is_enforced() {
        let m = fig2();
        let o = Oracle::with_cap(&m, 10);
        let err = o.pre_image(5, 5, &m.all_states()).unwrap_err();
        assert!(matches!(err, OracleError::EnumerationCapExceeded { .. }), "{err}");
        assert_eq!(count_distributions(3, 4), 20);
        assert_eq!(count_distributions(0, 1), 1);
        assert_eq!(count_distributions(4, 0), 0);
    }
}
