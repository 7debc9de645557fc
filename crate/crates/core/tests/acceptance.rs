//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use hdmas_core::engine::{Engine, Pfix};
use hdmas_core::frontend::parse_model;
use hdmas_core::logic::build::*;
use hdmas_core::logic::{subst_term, AgentVar, Assignment, PathFormula, QuantPrefix, Quantifier, StateFormula, Term};
use hdmas_core::model::{check_wellformed, counter_var, HdmasModel};
use hdmas_core::normalform::{nf, push};
use hdmas_core::oracle::Oracle;
use hdmas_core::presburger::{decide, evaluate, LinTerm, PresFormula, Valuation, Var};
use hdmas_core::StateSet;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use AgentVar::{Y1, Y2};
use Quantifier::{Exists, Forall};

const FIG2: &str = include_str!("../fixtures/fig2.hdmas");
const FORTRESS: &str = include_str!("../fixtures/fortress.hdmas");

const SEED: u64 = 0x5eed_2024;
const CORPUS_FIG2: usize = 70;
const CORPUS_FORTRESS: usize = 40;
const QE_FORMULAS: usize = 240;
/// Window for the bounded expansion of agent quantifiers. Holding `G p` at
/// s2 of fig2 takes 13 agents (#a1 > 5, #a3 > #a1), so 12 is too small.
const WINDOW: u64 = 16;

fn load(src: &str) -> HdmasModel {
    parse_model(src).expect("fixture parses").model
}

fn names(m: &HdmasModel, z: &StateSet) -> String {
    format!("{{{}}}", m.names_of(z).join(","))
}

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict { ok, detail: detail.into() }
}

fn th() -> Assignment {
    Assignment::new()
}

fn q1(q: Quantifier, v: AgentVar) -> QuantPrefix {
    QuantPrefix::one(q, v)
}

fn q2(a: Quantifier, v: AgentVar, b: Quantifier, w: AgentVar) -> QuantPrefix {
    QuantPrefix::two(a, v, b, w)
}

fn c1_wellformedness() -> Verdict {
    let start = Instant::now();
    let m = load(FIG2);
    let report = check_wellformed(&m);
    let all_pass = report.is_wellformed() && report.states.len() == 6;

    // g2 with `#a3 > 2` overlaps g1 at #a3 = 3.
    let mutated_src = FIG2.replace("#a3 > 3;", "#a3 > 2;");
    let mutated = load(&mutated_src);
    let r = check_wellformed(&mutated);
    let s1 = &r.states[0];
    let mut witnessed = false;
    if let Some(cx) = &s1.determinism.counterexample {
        // The valuation must satisfy both guards out of s1.
        let mut val = Valuation::new();
        for (k, v) in cx {
            val.set(Var::named(k), *v);
        }
        for a in ["a1", "a2", "a3", "eps"] {
            if val.get(counter_var(a)).is_none() {
                val.set(counter_var(a), 0);
            }
        }
        let g = |to: &str| mutated.guard(0, mutated.state_index(to).unwrap()).unwrap().clone();
        witnessed = evaluate(&g("s2"), &val).unwrap() && evaluate(&g("s3"), &val).unwrap();
    }
    let others_ok = r.states.iter().skip(1).all(|s| s.passed());
    let elapsed = start.elapsed();
    let ok = all_pass && !s1.determinism.passed && witnessed && others_ok && elapsed < Duration::from_secs(10);
    verdict(
        ok,
        format!(
            "fig2 all 4 checks x 6 states: {all_pass}; mutation flagged at s1 with witness {:?}: {witnessed}; {:.2?} (< 10s)",
            s1.determinism.counterexample, elapsed
        ),
    )
}

fn c2_prf_example() -> Verdict {
    let start = Instant::now();
    let m = load(FIG2);
    let e = Engine::new(&m);
    let f = quant(q2(Exists, Y1, Forall, Y2), coop(Term::Y1, Term::Y2, next(or(prop("p"), prop("q")))));
    let z = e.extension_of(&f, &th()).unwrap();
    let want = m.states_named(&["s2", "s4", "s5", "s6"]);
    let elapsed = start.elapsed();
    verdict(
        z == want && elapsed < Duration::from_secs(30),
        format!("extension {} (want {}); {:.2?} (< 30s)", names(&m, &z), names(&m, &want), elapsed),
    )
}

fn gp() -> StateFormula {
    quant(q2(Forall, Y2, Exists, Y1), coop(Term::Y1, Term::Y2, globally(prop("p"))))
}

fn gq() -> StateFormula {
    quant(q1(Forall, Y2), coop(n(0), Term::Y2, globally(prop("q"))))
}

fn c3_example_memberships() -> Verdict {
    let m = load(FIG2);
    let e = Engine::new(&m);
    let s1 = m.state_index("s1").unwrap();
    let s4 = m.state_index("s4").unwrap();
    let a = e.check(s1, &coop(n(7), n(5), next(prop("p"))), &th()).unwrap();
    let b = e.check(s1, &quant(q1(Exists, Y1), coop(Term::Y1, n(11), next(prop("p")))), &th()).unwrap();
    let c = e.check(s4, &coop(n(7), n(4), next(gp())), &th()).unwrap();
    verdict(a && !b && c, format!("s1 in <<7,5>>X p: {a}; s1 in Ey1<<y1,11>>X p: {b}; s4 in <<7,4>>X(...G p): {c}"))
}

fn trace_names(m: &HdmasModel, t: &[StateSet]) -> Vec<Vec<String>> {
    t.iter().map(|z| m.names_of(z)).collect()
}

fn strs(v: &[&[&str]]) -> Vec<Vec<String>> {
    v.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect()
}

fn c4_g_trace() -> Verdict {
    let m = load(FIG2);
    let e = Engine::new(&m);
    let run = e.g_fixpoint(Term::Y1, Term::Y2, &prop("p"), &th(), Pfix::ForallY2ExistsY1).unwrap();
    let got = trace_names(&m, &run.trace);
    // Initial Q, then one entry per iteration.
    let want = strs(&[&["s2", "s3", "s4"], &["s2", "s4"], &["s2", "s4"]]);
    let ext = e.extension_of(&gp(), &th()).unwrap();
    let outer = e.extension_of(&coop(n(7), n(4), next(gp())), &th()).unwrap();
    let ok = got == want && ext == m.states_named(&["s2", "s4"]) && outer == m.states_named(&["s4", "s5"]);
    verdict(ok, format!("trace {got:?}; extension {}; outer {}", names(&m, &ext), names(&m, &outer)))
}

fn c5_u_trace() -> Verdict {
    let m = load(FIG2);
    let e = Engine::new(&m);
    let g = e.g_fixpoint(n(0), Term::Y2, &prop("q"), &th(), Pfix::ForallY2).unwrap();
    let g_got = trace_names(&m, &g.trace);
    let g_want = strs(&[&["s5", "s6"], &["s6"], &["s6"]]);
    let u = e.u_fixpoint(Term::Y1, n(10), &gp(), &gq(), &th(), Pfix::ExistsY1).unwrap();
    let u_got = trace_names(&m, &u.trace);
    let u_want = strs(&[&["s6"], &["s4", "s6"], &["s2", "s4", "s6"], &["s2", "s4", "s6"]]);
    let phi = coop(n(6), n(3), next(quant(q1(Exists, Y1), coop(Term::Y1, n(10), until(gp(), gq())))));
    let fin = e.extension_of(&phi, &th()).unwrap();
    let ok = g_got == g_want && u_got == u_want && fin == m.states_named(&["s1", "s4", "s5", "s6"]);
    verdict(ok, format!("G trace {g_got:?}; U trace {u_got:?}; final {}", names(&m, &fin)))
}

fn c6_normal_forms() -> Verdict {
    let y1 = Term::Y1;
    let y2 = Term::Y2;
    let a1 = q1(Forall, Y1);
    let left = coop(
        y1,
        n(5),
        until(
            quant(q1(Forall, Y2), coop(y1, y2, next(prop("p1")))),
            quant(q1(Exists, Y2), coop(y1, y2, eventually(prop("p2")))),
        ),
    );
    let right = quant(
        q1(Exists, Y1),
        and(
            quant(q1(Forall, Y2), coop(y1, y2, eventually(prop("p3")))),
            not(quant(q1(Forall, Y2), coop(n(3), y2, next(prop("p1"))))),
        ),
    );
    let phi = or(left, right);

    let right_nf = and(
        quant(q2(Exists, Y1, Forall, Y2), coop(y1, y2, eventually(prop("p3")))),
        not(quant(q1(Forall, Y2), coop(n(3), y2, next(prop("p1"))))),
    );
    let push_want = or(
        quant(
            a1.clone(),
            coop(
                y1,
                n(5),
                until(
                    quant(q2(Forall, Y1, Forall, Y2), coop(y1, y2, next(prop("p1")))),
                    quant(q2(Forall, Y1, Exists, Y2), coop(y1, y2, eventually(prop("p2")))),
                ),
            ),
        ),
        right_nf.clone(),
    );
    // ∀y1∃y2<<y1,y2>>F p2 reduces to <<0,0>>F p2.
    let nf_want = or(
        coop(
            n(0),
            n(5),
            until(quant(q1(Forall, Y2), coop(n(0), y2, next(prop("p1")))), coop(n(0), n(0), eventually(prop("p2")))),
        ),
        right_nf,
    );
    let pushed = push(&a1, &phi);
    let normal = nf(&quant(a1, phi));
    let push_ok = pushed == push_want;
    let nf_ok = normal == nf_want;

    let declared = [
        coop(n(3), n(1), next(coop(n(3), n(2), next(coop(n(3), n(3), next(not(prop("captured")))))))),
        quant(q1(Exists, Y1), coop(y1, n(4), globally(not(prop("captured"))))),
    ];
    let ident = declared.iter().all(|f| nf(f) == *f);
    verdict(
        push_ok && nf_ok && ident,
        format!("push: {push_ok}; nf: {nf_ok}; identity on declared normal forms: {ident}"),
    )
}

/// Random concrete closed formulas with at most `depth` nested strategic operators.
fn gen_formula(rng: &mut StdRng, depth: u32, props: &[&str], budget: &mut u32) -> StateFormula {
    *budget = budget.saturating_sub(1);
    if depth > 0 && *budget > 0 && rng.gen_bool(0.5) {
        let (c, k) = (rng.gen_range(0..=5), rng.gen_range(0..=5));
        let chi = match rng.gen_range(0..4) {
            0 => next(gen_formula(rng, depth - 1, props, budget)),
            1 => globally(gen_formula(rng, depth - 1, props, budget)),
            2 => eventually(gen_formula(rng, depth - 1, props, budget)),
            _ => {
                let a = gen_formula(rng, depth - 1, props, budget);
                until(a, gen_formula(rng, depth - 1, props, budget))
            }
        };
        return coop(n(c), n(k), chi);
    }
    if *budget == 0 {
        return prop(props[rng.gen_range(0..props.len())]);
    }
    match rng.gen_range(0..6) {
        0..=2 => prop(props[rng.gen_range(0..props.len())]),
        3 => not(gen_formula(rng, depth, props, budget)),
        4 => {
            let a = gen_formula(rng, depth, props, budget);
            and(a, gen_formula(rng, depth, props, budget))
        }
        _ => {
            let a = gen_formula(rng, depth, props, budget);
            or(a, gen_formula(rng, depth, props, budget))
        }
    }
}

fn corpus(seed: u64, count: usize, props: &[&str]) -> Vec<StateFormula> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let depth = rng.gen_range(1..=3);
            let mut budget = 10;
            // Root is always strategic so that every formula exercises the engine.
            loop {
                let f = gen_formula(&mut rng, depth, props, &mut budget);
                if matches!(f, StateFormula::Coop(..)) {
                    break f;
                }
                budget = 10;
            }
        })
        .collect()
}

fn corpora() -> Vec<(&'static str, HdmasModel, Vec<StateFormula>)> {
    vec![
        ("fig2", load(FIG2), corpus(SEED, CORPUS_FIG2, &["p", "q"])),
        ("fortress", load(FORTRESS), corpus(SEED + 1, CORPUS_FORTRESS, &["captured"])),
    ]
}

fn c7_oracle_equivalence() -> Verdict {
    let mut total = 0;
    let mut bad = Vec::new();
    for (name, m, fs) in corpora() {
        let e = Engine::new(&m);
        let o = Oracle::new(&m);
        for f in &fs {
            total += 1;
            let a = e.extension_of(f, &th()).unwrap();
            let b = o.global_mc(f, &th()).unwrap();
            if a != b {
                bad.push(format!("{name}: {f}: engine {} oracle {}", names(&m, &a), names(&m, &b)));
            }
        }
    }
    verdict(
        total >= 100 && bad.is_empty(),
        format!("{total} formulas, {} discrepancies {:?}", bad.len(), bad.first()),
    )
}

/// Strategic nodes in pre-order, with whether they sit under an even number of negations.
fn coop_positions(phi: &StateFormula) -> Vec<(bool, u64, u64)> {
    fn walk(phi: &StateFormula, pos: bool, out: &mut Vec<(bool, u64, u64)>) {
        match phi {
            StateFormula::Top | StateFormula::Prop(_) => {}
            StateFormula::Not(a) => walk(a, !pos, out),
            StateFormula::And(a, b) | StateFormula::Or(a, b) => {
                walk(a, pos, out);
                walk(b, pos, out);
            }
            StateFormula::Quant(_, a) => walk(a, pos, out),
            StateFormula::Coop(t1, t2, chi) => {
                let v = |t: &Term| match t {
                    Term::Nat(k) => *k,
                    _ => unreachable!("concrete corpus"),
                };
                out.push((pos, v(t1), v(t2)));
                chi.for_each_state(|s| walk(s, pos, out));
            }
        }
    }
    let mut out = Vec::new();
    walk(phi, true, &mut out);
    out
}

/// Replaces the terms of the `target`-th strategic node.
fn retarget(phi: &StateFormula, target: usize, c: u64, k: u64) -> StateFormula {
    fn go(phi: &StateFormula, target: usize, idx: &mut usize, c: u64, k: u64) -> StateFormula {
        match phi {
            StateFormula::Top | StateFormula::Prop(_) => phi.clone(),
            StateFormula::Not(a) => not(go(a, target, idx, c, k)),
            StateFormula::And(a, b) => {
                let a = go(a, target, idx, c, k);
                and(a, go(b, target, idx, c, k))
            }
            StateFormula::Or(a, b) => {
                let a = go(a, target, idx, c, k);
                or(a, go(b, target, idx, c, k))
            }
            StateFormula::Quant(q, a) => quant(q.clone(), go(a, target, idx, c, k)),
            StateFormula::Coop(t1, t2, chi) => {
                let here = *idx == target;
                *idx += 1;
                let chi = chi.map_states(|s| go(s, target, idx, c, k));
                if here {
                    coop(n(c), n(k), chi)
                } else {
                    coop(*t1, *t2, chi)
                }
            }
        }
    }
    go(phi, target, &mut 0, c, k)
}

fn c8_monotonicity() -> Verdict {
    let mut checks = 0;
    let mut bad = Vec::new();
    for (name, m, fs) in corpora() {
        let e = Engine::new(&m);
        for f in &fs {
            let base = e.extension_of(f, &th()).unwrap();
            for (i, (pos, c, k)) in coop_positions(f).into_iter().enumerate() {
                // Growing the coalition or shrinking the opposition can only help
                // at positive positions, and only hurt at negative ones.
                let variants =
                    (c + 1..=c + 3).map(|c2| (c2, k)).chain((0..k).map(|k2| (c, k2)));
                for (c2, k2) in variants {
                    checks += 1;
                    let g = retarget(f, i, c2, k2);
                    let z = e.extension_of(&g, &th()).unwrap();
                    let ok = if pos { base.is_subset(&z) } else { z.is_subset(&base) };
                    if !ok {
                        bad.push(format!("{name}: {f} node {i} -> <<{c2},{k2}>>"));
                    }
                }
            }
        }
    }
    verdict(bad.is_empty(), format!("{checks} inclusions checked, {} violations {:?}", bad.len(), bad.first()))
}

fn c9_fixpoints() -> Verdict {
    let m = load(FIG2);
    let e = Engine::new(&m);
    let ext = |f: &StateFormula| e.extension_of(f, &th()).unwrap();
    let bodies = [prop("p"), prop("q"), not(prop("p")), or(prop("p"), prop("q")), coop(n(1), n(1), next(prop("p")))];
    let pairs = [
        (prop("p"), prop("q")),
        (not(prop("q")), prop("q")),
        (Top(), prop("p")),
        (or(prop("p"), prop("q")), coop(n(2), n(0), next(prop("q")))),
    ];
    let mut checks = 0;
    let mut bad = Vec::new();
    let mut eq = |item: usize, lhs: StateFormula, rhs: StateFormula| {
        checks += 1;
        if ext(&lhs) != ext(&rhs) {
            bad.push(format!("item {item}: {lhs}"));
        }
    };
    let g_rhs = |phi: &StateFormula, op: &dyn Fn(PathFormula) -> StateFormula| {
        and(phi.clone(), op(next(op(globally(phi.clone())))))
    };
    let u_rhs = |psi: &StateFormula, phi: &StateFormula, op: &dyn Fn(PathFormula) -> StateFormula| {
        or(phi.clone(), and(psi.clone(), op(next(op(until(psi.clone(), phi.clone()))))))
    };
    for a in 0..=4 {
        for b in 0..=4 {
            let op = move |chi| coop(n(a), n(b), chi);
            for phi in &bodies {
                eq(1, op(globally(phi.clone())), g_rhs(phi, &op));
            }
            for (psi, phi) in &pairs {
                eq(2, op(until(psi.clone(), phi.clone())), u_rhs(psi, phi, &op));
            }
        }
    }
    for t in 0..=4 {
        let ey1 = move |chi| quant(q1(Exists, Y1), coop(Term::Y1, n(t), chi));
        let ay2 = move |chi| quant(q1(Forall, Y2), coop(n(t), Term::Y2, chi));
        for phi in &bodies {
            eq(3, ey1(globally(phi.clone())), g_rhs(phi, &ey1));
            eq(4, ay2(globally(phi.clone())), g_rhs(phi, &ay2));
        }
        for (psi, phi) in &pairs {
            eq(5, ey1(until(psi.clone(), phi.clone())), u_rhs(psi, phi, &ey1));
            eq(6, ay2(until(psi.clone(), phi.clone())), u_rhs(psi, phi, &ay2));
        }
    }
    let ae = |chi| quant(q2(Forall, Y2, Exists, Y1), coop(Term::Y1, Term::Y2, chi));
    let ea = |chi| quant(q2(Exists, Y1, Forall, Y2), coop(Term::Y1, Term::Y2, chi));
    for phi in &bodies {
        eq(7, ae(globally(phi.clone())), g_rhs(phi, &ae));
        eq(8, ea(globally(phi.clone())), g_rhs(phi, &ea));
    }
    for (psi, phi) in &pairs {
        eq(9, ae(until(psi.clone(), phi.clone())), u_rhs(psi, phi, &ae));
        eq(10, ea(until(psi.clone(), phi.clone())), u_rhs(psi, phi, &ea));
    }
    verdict(bad.is_empty(), format!("{checks} equalities over items 1-10, {} violations {:?}", bad.len(), bad.first()))
}

#[allow(non_snake_case)]
fn Top() -> StateFormula {
    StateFormula::Top
}

/// Extension of `Q body` computed by expanding each quantifier over
/// `0..=WINDOW` with concrete values, independently of the rewriting.
fn bounded(e: &Engine, prefix: &[(Quantifier, AgentVar)], body: &StateFormula) -> StateSet {
    match prefix.split_first() {
        None => e.extension_of(body, &th()).unwrap(),
        Some(((q, v), rest)) => {
            let mut parts = (0..=WINDOW).map(|k| bounded(e, rest, &subst_term(body, v.term(), k)));
            let first = parts.next().unwrap();
            parts.fold(first, |acc, z| match q {
                Exists => acc.union(&z),
                Forall => acc.intersection(&z),
            })
        }
    }
}

fn c10_pqe_equivalences() -> Verdict {
    let m = load(FIG2);
    let e = Engine::new(&m);
    let base: Vec<PathFormula> = vec![
        next(prop("p")),
        globally(prop("p")),
        until(prop("p"), prop("q")),
        eventually(prop("q")),
        next(or(prop("p"), prop("q"))),
    ];
    let mut checks = 0;
    let mut bad = Vec::new();
    let mut check = |item: usize, prefix: &[(Quantifier, AgentVar)], body: StateFormula, rhs: StateFormula| {
        checks += 1;
        let lhs = bounded(&e, prefix, &body);
        let r = e.extension_of(&rhs, &th()).unwrap();
        if lhs != r {
            bad.push(format!("item {item}: {body} under {prefix:?}: {} vs {}", names(e.model(), &lhs), names(e.model(), &r)));
        }
    };
    let z = |chi: &PathFormula, v: AgentVar| {
        let sub = subst_term(&coop(n(0), n(0), chi.clone()), v.term(), 0);
        match sub {
            StateFormula::Coop(_, _, c) => *c,
            _ => unreachable!(),
        }
    };
    for t in [0u64, 1, 3] {
        let mut y1_chis = base.clone();
        y1_chis.push(next(coop(Term::Y1, n(2), next(prop("p")))));
        for chi in &y1_chis {
            // ∀y1 <<y1,t>>χ ≡ <<0,t>>χ[0/y1]
            check(1, &[(Forall, Y1)], coop(Term::Y1, n(t), chi.clone()), coop(n(0), n(t), z(chi, Y1)));
        }
        let mut y2_chis = base.clone();
        y2_chis.push(next(coop(n(1), Term::Y2, next(prop("q")))));
        for chi in &y2_chis {
            // ∃y2 <<t,y2>>χ ≡ <<t,0>>χ[0/y2]
            check(2, &[(Exists, Y2)], coop(n(t), Term::Y2, chi.clone()), coop(n(t), n(0), z(chi, Y2)));
        }
    }
    let mut both = base.clone();
    both.push(next(coop(Term::Y1, Term::Y2, next(prop("p")))));
    for chi in &both {
        let body = coop(Term::Y1, Term::Y2, chi.clone());
        let zz = z(&z(chi, Y1), Y2);
        check(3, &[(Forall, Y1), (Exists, Y2)], body.clone(), coop(n(0), n(0), zz.clone()));
        check(4, &[(Exists, Y2), (Forall, Y1)], body.clone(), coop(n(0), n(0), zz));
        let a = quant(q1(Forall, Y2), coop(n(0), Term::Y2, z(chi, Y1)));
        check(5, &[(Forall, Y2), (Forall, Y1)], body.clone(), a.clone());
        check(6, &[(Forall, Y1), (Forall, Y2)], body.clone(), a);
        let b = quant(q1(Exists, Y1), coop(Term::Y1, n(0), z(chi, Y2)));
        check(7, &[(Exists, Y1), (Exists, Y2)], body.clone(), b.clone());
        check(8, &[(Exists, Y2), (Exists, Y1)], body, b);
    }
    verdict(
        bad.is_empty(),
        format!("{checks} equalities over items 1-8 (window 0..={WINDOW}), {} violations {:?}", bad.len(), bad.first()),
    )
}

/// A linear atom `c·x + k  op  0` over at most three variables.
#[derive(Clone, Copy)]
struct Atom {
    c: [i64; 3],
    k: i64,
    op: u8,
}

impl Atom {
    fn holds(&self, x: &[i64; 3]) -> bool {
        let v = self.c[0] * x[0] + self.c[1] * x[1] + self.c[2] * x[2] + self.k;
        match self.op {
            0 => v == 0,
            1 => v < 0,
            2 => v <= 0,
            3 => v != 0,
            _ => v >= 0,
        }
    }
}

/// Quantifier-free matrix: a tree of atoms under and/or/not.
enum Qf {
    Atom(Atom),
    And(Vec<Qf>),
    Or(Vec<Qf>),
    Not(Box<Qf>),
}

impl Qf {
    fn holds(&self, x: &[i64; 3]) -> bool {
        match self {
            Qf::Atom(a) => a.holds(x),
            Qf::And(xs) => xs.iter().all(|q| q.holds(x)),
            Qf::Or(xs) => xs.iter().any(|q| q.holds(x)),
            Qf::Not(q) => !q.holds(x),
        }
    }

    fn atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Qf::Atom(a) => out.push(a),
            Qf::And(xs) | Qf::Or(xs) => xs.iter().for_each(|q| q.atoms(out)),
            Qf::Not(q) => q.atoms(out),
        }
    }

    fn to_pres(&self, vars: &[Var]) -> PresFormula {
        match self {
            Qf::Atom(a) => {
                let t = LinTerm::from_parts(a.c.iter().copied().zip(vars.iter().copied()), a.k);
                let zero = LinTerm::zero();
                match a.op {
                    0 => PresFormula::eq(t, zero),
                    1 => PresFormula::lt(t, zero),
                    2 => PresFormula::le(t, zero),
                    3 => PresFormula::ne(t, zero),
                    _ => PresFormula::ge(t, zero),
                }
            }
            Qf::And(xs) => PresFormula::and(xs.iter().map(|q| q.to_pres(vars)).collect()),
            Qf::Or(xs) => PresFormula::or(xs.iter().map(|q| q.to_pres(vars)).collect()),
            Qf::Not(q) => PresFormula::not(q.to_pres(vars)),
        }
    }
}

fn gen_qf(rng: &mut StdRng, nvars: usize, depth: u32) -> Qf {
    if depth == 0 || rng.gen_bool(0.35) {
        let mut c = [0i64; 3];
        for ci in c.iter_mut().take(nvars) {
            *ci = rng.gen_range(-5..=5);
        }
        return Qf::Atom(Atom { c, k: rng.gen_range(-20..=20), op: rng.gen_range(0..5) });
    }
    let width = rng.gen_range(2..=3);
    match rng.gen_range(0..5) {
        0 | 1 => Qf::And((0..width).map(|_| gen_qf(rng, nvars, depth - 1)).collect()),
        2 | 3 => Qf::Or((0..width).map(|_| gen_qf(rng, nvars, depth - 1)).collect()),
        _ => Qf::Not(Box::new(gen_qf(rng, nvars, depth - 1))),
    }
}

/// lcm of the absolute coefficients plus the largest absolute constant.
fn cooper_bound(q: &Qf) -> i64 {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    let mut atoms = Vec::new();
    q.atoms(&mut atoms);
    let mut l = 1;
    let mut k = 0;
    for a in atoms {
        for c in a.c {
            if c != 0 {
                l = l / gcd(l, c.abs()) * c.abs();
            }
        }
        k = k.max(a.k.abs());
    }
    l + k
}

fn brute(q: &Qf, nvars: usize, bound: i64, exists: bool) -> bool {
    fn go(q: &Qf, i: usize, nvars: usize, bound: i64, exists: bool, x: &mut [i64; 3]) -> bool {
        if i == nvars {
            return q.holds(x);
        }
        for v in 0..=bound {
            x[i] = v;
            if go(q, i + 1, nvars, bound, exists, x) == exists {
                return exists;
            }
        }
        !exists
    }
    go(q, 0, nvars, bound, exists, &mut [0; 3])
}

fn c11_qe_soundness() -> Verdict {
    let mut rng = StdRng::seed_from_u64(SEED + 11);
    let vars = [Var::named("qx"), Var::named("qy"), Var::named("qz")];
    let mut bad = Vec::new();
    let mut widened = 0;
    for _ in 0..QE_FORMULAS {
        let nvars = rng.gen_range(1..=3);
        let exists = rng.gen_bool(0.5);
        let qf = gen_qf(&mut rng, nvars, 2);
        let body = qf.to_pres(&vars);
        let vs = &vars[..nvars];
        let closed = if exists { PresFormula::exists_many(vs, body) } else { PresFormula::forall_many(vs, body) };
        let got = decide(&closed).unwrap();
        let b = cooper_bound(&qf);
        // The single-variable bound is complete for one variable; blocks of
        // several variables are searched on a doubled window.
        let window = if nvars == 1 { b } else { 2 * b };
        let want = brute(&qf, nvars, window, exists);
        if nvars > 1 && brute(&qf, nvars, b, exists) != want {
            widened += 1;
        }
        if got != want {
            bad.push(format!("{} {closed}", if exists { "E" } else { "A" }));
        }
    }
    verdict(
        bad.is_empty(),
        format!(
            "{QE_FORMULAS} formulas, {} disagreements {:?}; {widened} multi-variable cases needed the widened window",
            bad.len(),
            bad.first()
        ),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 11] = [
        ("01 well-formedness and determinism counterexample", c1_wellformedness),
        ("02 prf example extension", c2_prf_example),
        ("03 example memberships", c3_example_memberships),
        ("04 G fixpoint trace", c4_g_trace),
        ("05 U fixpoint trace", c5_u_trace),
        ("06 push and nf fixtures", c6_normal_forms),
        ("07 engine = oracle on corpus", c7_oracle_equivalence),
        ("08 monotonicity on corpus", c8_monotonicity),
        ("09 fixpoint equivalences", c9_fixpoints),
        ("10 quantifier-pattern equivalences", c10_pqe_equivalences),
        ("11 decide vs brute force", c11_qe_soundness),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        if !v.ok {
            failed += 1;
        }
        let tag = if v.ok { "PASS" } else { "FAIL" };
        println!("{tag} {name} [{:.2?}]: {}", start.elapsed(), v.detail);
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
