//! Text input: the model format, the formula syntax and the verification driver.

pub mod formula_syntax;
pub mod model_dsl;
pub mod run;

pub use formula_syntax::{parse_formula, parse_formula_unchecked, SpanTree};
pub use model_dsl::{parse_model, print_model, Diagnostic, DiagnosticKind, LineIndex, ModelDocument};
pub use run::{run, Command, FormulaSource, OutputFormat, RunConfig, RunOutcome, VerifyMode};
