use hdmas_core::engine::{Engine, Pfix};
use hdmas_core::frontend::{parse_formula, parse_formula_unchecked, parse_model};
use hdmas_core::logic::build::*;
use hdmas_core::logic::{
    check_syntax, is_normal_form, subst_term, AgentVar, Assignment, PathFormula, QuantPrefix, Quantifier, StateFormula,
    Term,
};
use hdmas_core::normalform::nf;
use hdmas_core::StateSet;
use proptest::prelude::*;

use AgentVar::{Y1, Y2};
use Quantifier::{Exists, Forall};

const WINDOW: u64 = 16;
const Z1: u64 = 2;

fn prefixes() -> Vec<QuantPrefix> {
    let mut out = Vec::new();
    for q in [Exists, Forall] {
        for v in [Y1, Y2] {
            out.push(QuantPrefix::one(q, v));
            for q2 in [Exists, Forall] {
                let w = if v == Y1 { Y2 } else { Y1 };
                out.push(QuantPrefix::two(q, v, q2, w));
            }
        }
    }
    out
}

fn arb_formula() -> impl Strategy<Value = StateFormula> {
    let leaf = prop_oneof![Just(prop("p")), Just(prop("q")), Just(StateFormula::Top)];
    let first = prop_oneof![(0u64..4).prop_map(Term::Nat), Just(Term::Y1), Just(Term::Param(1))];
    let second = prop_oneof![(0u64..4).prop_map(Term::Nat), Just(Term::Y2), Just(Term::Param(1))];
    leaf.prop_recursive(5, 24, 2, move |inner| {
        let path = prop_oneof![
            inner.clone().prop_map(next),
            inner.clone().prop_map(globally),
            inner.clone().prop_map(eventually),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| until(a, b)),
        ];
        // Quantifier bodies mostly start with a strategic operator on the
        // bound variables; otherwise the quantifier is usually vacuous.
        let bound_first = prop_oneof![Just(Term::Y1), (0u64..4).prop_map(Term::Nat)];
        let bound_second = prop_oneof![Just(Term::Y2), (0u64..4).prop_map(Term::Nat)];
        let bound_body = (bound_first, bound_second, path.clone(), inner.clone(), 0u8..3).prop_map(
            |(a, b, chi, other, shape)| match shape {
                0 => coop(a, b, chi),
                1 => and(coop(a, b, chi), other),
                _ => or(other, coop(a, b, chi)),
            },
        );
        prop_oneof![
            1 => inner.clone().prop_map(not),
            2 => (inner.clone(), inner.clone()).prop_map(|(a, b)| and(a, b)),
            2 => (inner.clone(), inner.clone()).prop_map(|(a, b)| or(a, b)),
            3 => (first.clone(), second.clone(), path).prop_map(|(a, b, chi)| coop(a, b, chi)),
            1 => (prop::sample::select(prefixes()), inner).prop_map(|(q, a)| quant(q, a)),
            3 => (prop::sample::select(prefixes()), bound_body).prop_map(|(q, a)| quant(q, a)),
        ]
    })
}

fn arb_checked() -> impl Strategy<Value = StateFormula> {
    arb_formula().prop_filter_map("syntax check", |f| check_syntax(&f).ok())
}

fn quantified_vars(f: &StateFormula) -> usize {
    let mut k = 0;
    f.visit(&mut |g| {
        if let StateFormula::Quant(q, _) = g {
            k += q.items().len();
        }
    });
    k
}

/// Closed formulas (after fixing z1) with few quantified variables, so that
/// the windowed semantics stays cheap.
fn arb_closed() -> impl Strategy<Value = StateFormula> {
    arb_checked().prop_filter("closed and small", |f| {
        f.free_terms().iter().all(|t| *t == Term::Param(1)) && quantified_vars(f) <= 2
    })
}

/// Direct semantics: agent quantifiers range over a finite window, strategic
/// operators with concrete terms go through one-step pre-images.
///
/// A quantifier nested under `depth` others gets `WINDOW * 4^depth`, so that
/// an inner opponent can always outnumber an outer coalition drawn from its
/// window (fixture coefficients are at most 3).
fn windowed(e: &Engine, phi: &StateFormula, depth: u32) -> StateSet {
    let m = e.model();
    let th = Assignment::new();
    match phi {
        StateFormula::Top => m.all_states(),
        StateFormula::Prop(p) => m.prop_extension(p),
        StateFormula::Not(a) => windowed(e, a, depth).complement(),
        StateFormula::And(a, b) => windowed(e, a, depth).intersection(&windowed(e, b, depth)),
        StateFormula::Or(a, b) => windowed(e, a, depth).union(&windowed(e, b, depth)),
        StateFormula::Quant(q, body) => {
            let (qk, v) = q.items()[0];
            let rest = match q.items() {
                [_, (q2, w)] => quant(QuantPrefix::one(*q2, *w), (**body).clone()),
                _ => (**body).clone(),
            };
            let mut acc: Option<StateSet> = None;
            for k in 0..=WINDOW * 4u64.pow(depth) {
                let z = windowed(e, &subst_term(&rest, v.term(), k), depth + 1);
                acc = Some(match (acc, qk) {
                    (None, _) => z,
                    (Some(a), Exists) => a.union(&z),
                    (Some(a), Forall) => a.intersection(&z),
                });
            }
            acc.unwrap()
        }
        StateFormula::Coop(t1, t2, chi) => {
            let pre = |q: &StateSet| e.pre_image(*t1, *t2, q, &th, Pfix::Empty).unwrap();
            match &**chi {
                PathFormula::Next(a) => pre(&windowed(e, a, depth)),
                PathFormula::Globally(a) => {
                    let q = windowed(e, a, depth);
                    let mut z = q.clone();
                    loop {
                        let next = pre(&z).intersection(&q);
                        if next == z {
                            break z;
                        }
                        z = next;
                    }
                }
                PathFormula::Until(a, b) => {
                    let (q1, q2) = (windowed(e, a, depth), windowed(e, b, depth));
                    let mut z = q2.clone();
                    loop {
                        let next = q2.union(&pre(&z).intersection(&q1));
                        if next == z {
                            break z;
                        }
                        z = next;
                    }
                }
            }
        }
    }
}

/// Normal forms keep at most one prefix node above each strategic operator,
/// so they are at most twice as large. Growth beyond the input size happens
/// and is reported rather than treated as a failure.
#[test]
fn nf_size_on_a_sample() {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::TestRunner;
    let mut runner = TestRunner::deterministic();
    let strat = arb_checked();
    let (mut worst, mut grew) = (0.0f64, 0);
    let mut example = None;
    for _ in 0..2000 {
        let f = strat.new_tree(&mut runner).unwrap().current();
        let g = nf(&f);
        assert!(g.size() <= 2 * f.size(), "{f} -> {g}");
        if g.size() > f.size() {
            grew += 1;
            example.get_or_insert_with(|| format!("{f} -> {g}"));
        }
        worst = worst.max(g.size() as f64 / f.size() as f64);
    }
    println!("nf size: max ratio {worst:.2}, {grew}/2000 larger than the input, e.g. {example:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn display_parses_back(f in arb_formula()) {
        let text = f.to_string();
        let (g, _) = parse_formula_unchecked(&text).map_err(|d| TestCaseError::fail(format!("{d}: {text}")))?;
        prop_assert_eq!(g, f);
    }

    #[test]
    fn checked_formulas_pass_the_checking_parser(f in arb_checked()) {
        prop_assert!(parse_formula(&f.to_string()).is_ok());
    }

    #[test]
    fn nf_is_closed_and_idempotent(f in arb_checked()) {
        let g = nf(&f);
        prop_assert!(is_normal_form(&g), "{} -> {}", f, g);
        prop_assert_eq!(nf(&g), g.clone());
        prop_assert!(check_syntax(&g).is_ok());
        prop_assert!(g.size() <= 2 * f.size(), "{} -> {}", f, g);
    }

    #[test]
    fn normal_forms_are_fixed(f in arb_checked().prop_filter("in normal form", is_normal_form)) {
        prop_assert_eq!(nf(&f), f);
    }

    #[test]
    fn parser_never_panics(toks in prop::collection::vec(prop::sample::select(vec![
        "<<", ">>", ",", "(", ")", "!", "&", "|", "->", "<->", "E", "A", "y1", "y2", "z1", "3",
        "X", "G", "F", "U", "p", "q", "true", "false", " ", "&&", "#", "<", ">",
    ]), 0..24)) {
        let _ = parse_formula(&toks.concat());
        let _ = parse_formula(&toks.join(" "));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn nf_preserves_windowed_semantics(f in arb_closed()) {
        let m = parse_model(include_str!("../fixtures/fig2.hdmas")).unwrap().model;
        let e = Engine::new(&m);
        let g = subst_term(&f, Term::Param(1), Z1);
        let th = Assignment::new().with_param(1, Z1);
        prop_assert_eq!(e.extension_of(&f, &th).unwrap(), windowed(&e, &g, 0), "{}", f);
    }
}

