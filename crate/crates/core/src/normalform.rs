//! Rewriting into normal form: `pqe` removes quantifier patterns that are
//! decided by monotonicity, `push` moves a prefix down to the strategic
//! operators it binds, `nf` composes both bottom-up.

use crate::logic::{subst_path, AgentVar, PathFormula, QuantPrefix, Quantifier, StateFormula, Term};

use AgentVar::{Y1, Y2};
use Quantifier::{Exists, Forall};

/// Partial quantifier elimination.
pub fn pqe(phi: &StateFormula) -> StateFormula {
    match phi {
        StateFormula::Top | StateFormula::Prop(_) => phi.clone(),
        StateFormula::Not(a) => StateFormula::Not(Box::new(pqe(a))),
        StateFormula::And(a, b) => StateFormula::And(Box::new(pqe(a)), Box::new(pqe(b))),
        StateFormula::Or(a, b) => StateFormula::Or(Box::new(pqe(a)), Box::new(pqe(b))),
        StateFormula::Coop(t1, t2, chi) => StateFormula::Coop(*t1, *t2, Box::new(pqe_path(chi))),
        StateFormula::Quant(q, body) => {
            if let StateFormula::Coop(t1, t2, chi) = &**body {
                if let Some(r) = pqe_pattern(q, *t1, *t2, chi) {
                    return r;
                }
            }
            StateFormula::Quant(q.clone(), Box::new(pqe(body)))
        }
    }
}

fn pqe_path(chi: &PathFormula) -> PathFormula {
    chi.map_states(pqe)
}

fn pqe_pattern(q: &QuantPrefix, t1: Term, t2: Term, chi: &PathFormula) -> Option<StateFormula> {
    let coop = |a: Term, b: Term, c: PathFormula| StateFormula::Coop(a, b, Box::new(c));
    let zero = Term::Nat(0);
    let both = t1 == Term::Y1 && t2 == Term::Y2;
    let out = match q.items() {
        [(Forall, Y1)] if t1 == Term::Y1 => coop(zero, t2, subst_path(&pqe_path(chi), Term::Y1, 0)),
        [(Exists, Y2)] if t2 == Term::Y2 => coop(t1, zero, subst_path(&pqe_path(chi), Term::Y2, 0)),
        [(Forall, Y1), (Exists, Y2)] | [(Exists, Y2), (Forall, Y1)] if both => {
            let c = subst_path(&subst_path(&pqe_path(chi), Term::Y1, 0), Term::Y2, 0);
            coop(zero, zero, c)
        }
        [(Forall, Y1), (Forall, Y2)] | [(Forall, Y2), (Forall, Y1)] if both => StateFormula::Quant(
            QuantPrefix::one(Forall, Y2),
            Box::new(coop(zero, Term::Y2, subst_path(&pqe_path(chi), Term::Y1, 0))),
        ),
        [(Exists, Y1), (Exists, Y2)] | [(Exists, Y2), (Exists, Y1)] if both => StateFormula::Quant(
            QuantPrefix::one(Exists, Y1),
            Box::new(coop(Term::Y1, zero, subst_path(&pqe_path(chi), Term::Y2, 0))),
        ),
        _ => return None,
    };
    Some(out)
}

/// Pushes the prefix `q` into a state formula.
pub fn push(q: &QuantPrefix, phi: &StateFormula) -> StateFormula {
    match phi {
        StateFormula::Top | StateFormula::Prop(_) => phi.clone(),
        StateFormula::Not(a) => StateFormula::Not(Box::new(push(&q.dual(), a))),
        StateFormula::And(a, b) => StateFormula::And(Box::new(push(q, a)), Box::new(push(q, b))),
        StateFormula::Or(a, b) => StateFormula::Or(Box::new(push(q, a)), Box::new(push(q, b))),
        StateFormula::Coop(t1, t2, chi) => {
            let inner = StateFormula::Coop(*t1, *t2, Box::new(push_path(q, chi)));
            // The quantifiers of q whose variable is the matching argument.
            let matched = q.retain(|v| match v {
                Y1 => *t1 == Term::Y1,
                Y2 => *t2 == Term::Y2,
            });
            match matched {
                Some(m) => StateFormula::Quant(m, Box::new(inner)),
                None => inner,
            }
        }
        StateFormula::Quant(inner, body) => {
            // A two-quantifier node Q1 v1 Q2 v2 ψ is read as Q1 v1 (Q2 v2 ψ).
            let (qk, k) = inner.items()[0];
            let rest = match inner.items() {
                [_, second] => StateFormula::Quant(QuantPrefix::one(second.0, second.1), body.clone()),
                _ => (**body).clone(),
            };
            let merged = match q.items() {
                [(_, i)] if *i == k => QuantPrefix::one(qk, k),
                [(qi, i)] => QuantPrefix::two(*qi, *i, qk, k),
                [(_, i), (qj, j)] if *i == k => QuantPrefix::two(*qj, *j, qk, k),
                [(qi, i), _] => QuantPrefix::two(*qi, *i, qk, k),
                _ => unreachable!("prefixes have one or two items"),
            };
            push(&merged, &rest)
        }
    }
}

fn push_path(q: &QuantPrefix, chi: &PathFormula) -> PathFormula {
    chi.map_states(|s| push(q, s))
}

/// Normal form: `pqe(push(Q, nf(ψ)))` at every quantifier node.
pub fn nf(phi: &StateFormula) -> StateFormula {
    match phi {
        StateFormula::Top | StateFormula::Prop(_) => phi.clone(),
        StateFormula::Not(a) => StateFormula::Not(Box::new(nf(a))),
        StateFormula::And(a, b) => StateFormula::And(Box::new(nf(a)), Box::new(nf(b))),
        StateFormula::Or(a, b) => StateFormula::Or(Box::new(nf(a)), Box::new(nf(b))),
        StateFormula::Coop(t1, t2, chi) => StateFormula::Coop(*t1, *t2, Box::new(chi.map_states(nf))),
        StateFormula::Quant(q, body) => pqe(&push(q, &nf(body))),
    }
}
