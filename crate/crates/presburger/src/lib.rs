//! Presburger arithmetic over the natural numbers.
//!
//! Linear terms and formulas ([`LinTerm`], [`PresFormula`]), evaluation
//! under a [`Valuation`], and a decision procedure built on Cooper-style
//! quantifier elimination ([`decide`], [`eliminate_exists`]).

pub mod cooper;
mod dnf;
pub mod formula;
pub mod simplify;
pub mod syntax;
pub mod term;

pub use cooper::{decide, decide_with_stats, eliminate_exists, is_valid, negate, search_bound, DecideError, QeStats};
pub use formula::{evaluate, free_vars, is_nnf, substitute, to_nnf, EvalError, PresAtom, PresFormula, SubstError, Valuation};
pub use simplify::simplify;
pub use syntax::{parse_formula, SyntaxError};
pub use term::{LinTerm, Var};
