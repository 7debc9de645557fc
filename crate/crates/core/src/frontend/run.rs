//! The verification driver behind the command-line tool.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde_json::json;

use crate::engine::{Engine, EngineError, Pfix};
use crate::logic::{Assignment, PathFormula, StateFormula, Term};
use crate::model::{check_wellformed, HdmasModel};
use crate::normalform::nf;
use crate::oracle::{Oracle, OracleError};

use super::formula_syntax::parse_formula;
use super::model_dsl::{parse_model, Diagnostic, DiagnosticKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 1;
pub const EXIT_SEMANTIC: i32 = 2;
pub const EXIT_NOT_IN_EXTENSION: i32 = 3;
pub const EXIT_CAP: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Plain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormulaSource {
    Text(String),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum VerifyMode {
    /// Symbolic global model checking.
    #[default]
    Symbolic,
    /// Explicit enumeration; only for formulas without agent quantifiers.
    Oracle,
    DumpNf,
    /// The pre-image formula of the first strategic operator at a state.
    DumpPrf(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    CheckModel {
        model: PathBuf,
    },
    Verify {
        model: PathBuf,
        formula: FormulaSource,
        assign: Vec<(String, u64)>,
        state: Option<String>,
        mode: VerifyMode,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub command: Command,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl RunOutcome {
    fn fail(code: i32, message: impl Into<String>) -> RunOutcome {
        let mut stderr = message.into();
        if !stderr.ends_with('\n') {
            stderr.push('\n');
        }
        RunOutcome {
            exit_code: code,
            stdout: String::new(),
            stderr,
        }
    }

    fn ok(stdout: String) -> RunOutcome {
        RunOutcome {
            exit_code: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }
}

/// `file:line:col: kind: message`, then the offending line with a caret.
pub fn render_diagnostic(origin: &str, src: &str, d: &Diagnostic) -> String {
    let mut out = format!("{origin}:{d}\n");
    if let Some(line) = src.lines().nth(d.line - 1) {
        let width = src[d.span.clone()].lines().next().map(|l| l.chars().count()).unwrap_or(0).max(1);
        let _ = writeln!(out, "  {line}");
        let _ = writeln!(out, "  {}{}", " ".repeat(d.col - 1), "^".repeat(width));
    }
    out
}

fn diagnostics_outcome(origin: &str, src: &str, diags: &[Diagnostic]) -> RunOutcome {
    let code = if diags.iter().any(|d| d.kind == DiagnosticKind::Syntax) {
        EXIT_PARSE
    } else {
        EXIT_SEMANTIC
    };
    let text: String = diags.iter().map(|d| render_diagnostic(origin, src, d)).collect();
    RunOutcome::fail(code, text)
}

fn read(path: &PathBuf) -> Result<String, RunOutcome> {
    std::fs::read_to_string(path)
        .map_err(|e| RunOutcome::fail(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))
}

fn load_model(path: &PathBuf) -> Result<HdmasModel, RunOutcome> {
    let src = read(path)?;
    parse_model(&src)
        .map(|d| d.model)
        .map_err(|diags| diagnostics_outcome(&path.display().to_string(), &src, &diags))
}

pub fn run(config: &RunConfig) -> RunOutcome {
    let result = match &config.command {
        Command::CheckModel { model } => check_model(model, config.format),
        Command::Verify {
            model,
            formula,
            assign,
            state,
            mode,
        } => verify(model, formula, assign, state.as_deref(), mode, config.format),
    };
    result.unwrap_or_else(|o| o)
}

fn check_model(path: &PathBuf, format: OutputFormat) -> Result<RunOutcome, RunOutcome> {
    let m = load_model(path)?;
    let report = check_wellformed(&m);
    let stdout = match format {
        OutputFormat::Plain => report.render_plain(),
        OutputFormat::Json => {
            let v = json!({
                "schema": 1,
                "wellformed": report.is_wellformed(),
                "states": report.states,
            });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("report serializes"))
        }
    };
    let exit_code = if report.is_wellformed() { EXIT_OK } else { EXIT_SEMANTIC };
    Ok(RunOutcome {
        exit_code,
        stdout,
        stderr: String::new(),
    })
}

fn parse_assignment(assign: &[(String, u64)]) -> Result<Assignment, RunOutcome> {
    let mut theta = Assignment::new();
    for (k, v) in assign {
        match k.as_str() {
            "y1" => theta.set_var(crate::logic::AgentVar::Y1, *v),
            "y2" => theta.set_var(crate::logic::AgentVar::Y2, *v),
            _ => match k.strip_prefix('z').and_then(|i| i.parse().ok()) {
                Some(i) => theta.set_param(i, *v),
                None => {
                    return Err(RunOutcome::fail(
                        EXIT_SEMANTIC,
                        format!("cannot assign to '{k}': expected y1, y2 or zN"),
                    ))
                }
            },
        }
    }
    Ok(theta)
}

/// The first strategic operator in `phi`, with the prefix right above it.
fn first_strategic(phi: &StateFormula) -> Option<(Pfix, Term, Term, &PathFormula)> {
    match phi {
        StateFormula::Top | StateFormula::Prop(_) => None,
        StateFormula::Not(a) => first_strategic(a),
        StateFormula::And(a, b) | StateFormula::Or(a, b) => first_strategic(a).or_else(|| first_strategic(b)),
        StateFormula::Coop(t1, t2, chi) => Some((Pfix::Empty, *t1, *t2, chi)),
        StateFormula::Quant(q, body) => match (&**body, Pfix::from_prefix(Some(q))) {
            (StateFormula::Coop(t1, t2, chi), Some(p)) => Some((p, *t1, *t2, chi)),
            _ => first_strategic(body),
        },
    }
}

fn engine_failure(e: EngineError) -> RunOutcome {
    RunOutcome::fail(EXIT_SEMANTIC, format!("error: {e}"))
}

fn verify(
    model_path: &PathBuf,
    formula: &FormulaSource,
    assign: &[(String, u64)],
    state: Option<&str>,
    mode: &VerifyMode,
    format: OutputFormat,
) -> Result<RunOutcome, RunOutcome> {
    let m = load_model(model_path)?;
    let report = check_wellformed(&m);
    if !report.is_wellformed() {
        return Err(RunOutcome::fail(
            EXIT_SEMANTIC,
            format!("model is not well-formed:\n{}", report.render_plain()),
        ));
    }

    let (text, origin) = match formula {
        FormulaSource::Text(t) => (t.clone(), "formula".to_string()),
        FormulaSource::File(p) => (read(p)?, p.display().to_string()),
    };
    let phi = parse_formula(text.trim_end()).map_err(|d| diagnostics_outcome(&origin, &text, &d))?;
    for p in phi.props() {
        if m.prop_index(&p).is_none() {
            return Err(RunOutcome::fail(EXIT_SEMANTIC, format!("error: unknown proposition '{p}'")));
        }
    }
    let theta = parse_assignment(assign)?;
    let local = match state {
        None => None,
        Some(name) => match m.state_index(name) {
            Some(s) => Some(s),
            None => return Err(RunOutcome::fail(EXIT_SEMANTIC, format!("error: unknown state '{name}'"))),
        },
    };
    let normal = nf(&phi);

    let (extension, engine_name) = match mode {
        VerifyMode::DumpNf => {
            return Ok(RunOutcome::ok(match format {
                OutputFormat::Plain => format!("{normal}\n"),
                OutputFormat::Json => format!(
                    "{}\n",
                    json!({"schema": 1, "formula": phi.to_string(), "normal_form": normal.to_string()})
                ),
            }))
        }
        VerifyMode::DumpPrf(name) => return dump_prf(&m, &normal, &theta, name, format),
        VerifyMode::Oracle => {
            let z = Oracle::new(&m).global_mc(&phi, &theta).map_err(|e| {
                let code = match e {
                    OracleError::EnumerationCapExceeded { .. } => EXIT_CAP,
                    _ => EXIT_SEMANTIC,
                };
                RunOutcome::fail(code, format!("error: {e}"))
            })?;
            (z, "oracle")
        }
        VerifyMode::Symbolic => (
            Engine::new(&m).global_mc(&normal, &theta).map_err(engine_failure)?,
            "symbolic",
        ),
    };

    let names = m.names_of(&extension);
    let stdout = match format {
        OutputFormat::Json => {
            let per_state: serde_json::Map<String, serde_json::Value> = (0..m.state_count())
                .map(|s| (m.state_name(s).to_string(), json!(extension.contains(s))))
                .collect();
            let mut v = json!({
                "schema": 1,
                "formula": phi.to_string(),
                "normal_form": normal.to_string(),
                "assignment": theta.to_json(),
                "engine": engine_name,
                "extension": names,
                "per_state": per_state,
            });
            if let Some(s) = local {
                v["state"] = json!(m.state_name(s));
                v["holds"] = json!(extension.contains(s));
            }
            format!("{}\n", serde_json::to_string_pretty(&v).expect("json"))
        }
        OutputFormat::Plain => {
            let mut out = format!("extension: {{{}}}\n", names.join(", "));
            if let Some(s) = local {
                let verdict = if extension.contains(s) { "holds" } else { "does not hold" };
                let _ = writeln!(out, "{}: {verdict}", m.state_name(s));
            }
            out
        }
    };
    let exit_code = match local {
        Some(s) if !extension.contains(s) => EXIT_NOT_IN_EXTENSION,
        _ => EXIT_OK,
    };
    Ok(RunOutcome {
        exit_code,
        stdout,
        stderr: String::new(),
    })
}

fn dump_prf(
    m: &HdmasModel,
    normal: &StateFormula,
    theta: &Assignment,
    state: &str,
    format: OutputFormat,
) -> Result<RunOutcome, RunOutcome> {
    let Some(s) = m.state_index(state) else {
        return Err(RunOutcome::fail(EXIT_SEMANTIC, format!("error: unknown state '{state}'")));
    };
    let Some((pfix, t1, t2, chi)) = first_strategic(normal) else {
        return Err(RunOutcome::fail(EXIT_SEMANTIC, "error: the formula has no strategic operator"));
    };
    let engine = Engine::new(m);
    let target = match chi {
        PathFormula::Next(psi) | PathFormula::Globally(psi) => psi,
        PathFormula::Until(_, psi2) => psi2,
    };
    let q = engine.global_mc(target, theta).map_err(engine_failure)?;
    let prf = engine
        .prf_formula(s, t1, t2, &q, theta, pfix.items())
        .map_err(engine_failure)?;
    let holds = hdmas_presburger::decide(&prf).map_err(|e| engine_failure(e.into()))?;
    Ok(RunOutcome::ok(match format {
        OutputFormat::Plain => format!("{prf}\n"),
        OutputFormat::Json => format!(
            "{}\n",
            json!({
                "schema": 1,
                "state": state,
                "target": m.names_of(&q),
                "prf": prf.to_string(),
                "holds": holds,
            })
        ),
    }))
}
