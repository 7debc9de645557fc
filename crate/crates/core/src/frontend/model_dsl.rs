//! Text format for models.
//!
//! ```text
//! actions a1 a2 a3;
//! props p q;
//! state s1 { avail: a1 a2 a3; label: ; }
//! guard s1 -> s2 : #a1 >= 2*#a2 && #a3 <= 3;
//! guard s1 -> s1 : else;
//! ```
//!
//! `#` followed by a letter or `_` is a counter reference; any other `#`
//! starts a comment running to the end of the line. The idle action is
//! implicit and available everywhere. `else` stands for the conjunction of
//! the negated other guards leaving the same state.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;

use hdmas_presburger::{free_vars, parse_formula, PresFormula};

use crate::model::{ActionRef, ActionTable, HdmasModel, ModelError, IDLE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    Syntax,
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub line: usize,
    pub col: usize,
    pub span: Range<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            DiagnosticKind::Syntax => "syntax error",
            DiagnosticKind::Semantic => "error",
        };
        write!(f, "{}:{}: {}: {}", self.line, self.col, kind, self.message)
    }
}

/// Maps byte offsets to 1-based line and column (in characters).
pub struct LineIndex<'a> {
    src: &'a str,
    starts: Vec<usize>,
}

impl<'a> LineIndex<'a> {
    pub fn new(src: &'a str) -> LineIndex<'a> {
        let mut starts = vec![0];
        starts.extend(src.match_indices('\n').map(|(i, _)| i + 1));
        LineIndex { src, starts }
    }

    pub fn locate(&self, offset: usize) -> (usize, usize) {
        let line = self.starts.partition_point(|s| *s <= offset) - 1;
        let col = self.src[self.starts[line]..offset.min(self.src.len())].chars().count();
        (line + 1, col + 1)
    }

    pub fn diagnostic(&self, kind: DiagnosticKind, span: Range<usize>, message: impl Into<String>) -> Diagnostic {
        let (line, col) = self.locate(span.start);
        Diagnostic {
            kind,
            line,
            col,
            span,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeclKind {
    Actions,
    Props,
    State,
    Guard,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeclSpan {
    pub kind: DeclKind,
    pub name: String,
    pub span: Range<usize>,
}

/// A parsed model with the source it came from.
#[derive(Debug, Clone)]
pub struct ModelDocument {
    pub source: String,
    pub model: HdmasModel,
    pub spans: Vec<DeclSpan>,
}

enum GuardBody {
    Else,
    Formula(PresFormula, Range<usize>),
}

struct RawGuard {
    from: (String, Range<usize>),
    to: (String, Range<usize>),
    body: GuardBody,
    span: Range<usize>,
}

struct RawState {
    name: String,
    name_span: Range<usize>,
    avail: Vec<(String, Range<usize>)>,
    label: Vec<(String, Range<usize>)>,
    span: Range<usize>,
}

/// Blanks out comments, keeping byte offsets intact.
fn strip_comments(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    let mut in_comment = false;
    let mut chars = src.char_indices().peekable();
    while let Some((_, c)) = chars.next() {
        if c == '\n' {
            in_comment = false;
            out.push(c);
            continue;
        }
        if !in_comment && c == '#' {
            let next = chars.peek().map(|(_, n)| *n);
            if !next.is_some_and(|n| n.is_ascii_alphabetic() || n == '_') {
                in_comment = true;
            }
        }
        if in_comment {
            out.extend(std::iter::repeat_n(' ', c.len_utf8()));
        } else {
            out.push(c);
        }
    }
    out
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
    lines: &'a LineIndex<'a>,
}

type PResult<T> = Result<T, Diagnostic>;

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.text.len()
    }

    fn error<T>(&self, span: Range<usize>, msg: impl Into<String>) -> PResult<T> {
        Err(self.lines.diagnostic(DiagnosticKind::Syntax, span, msg))
    }

    fn describe_next(&self) -> String {
        match self.text[self.pos..].chars().next() {
            None => "end of input".into(),
            Some(c) => format!("'{c}'"),
        }
    }

    fn ident(&mut self) -> Option<(String, Range<usize>)> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        if !rest.chars().next().is_some_and(hdmas_presburger::syntax::is_ident_start) {
            return None;
        }
        let n = hdmas_presburger::syntax::ident_len(rest);
        let span = self.pos..self.pos + n;
        self.pos += n;
        Some((rest[..n].to_string(), span))
    }

    fn expect_ident(&mut self, what: &str) -> PResult<(String, Range<usize>)> {
        match self.ident() {
            Some(x) => Ok(x),
            None => {
                let found = self.describe_next();
                self.error(self.pos..self.pos + 1, format!("expected {what}, found {found}"))
            }
        }
    }

    fn eat(&mut self, p: &str) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(p) {
            self.pos += p.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> PResult<()> {
        if self.eat(p) {
            Ok(())
        } else {
            let found = self.describe_next();
            self.error(self.pos..self.pos + 1, format!("expected '{p}', found {found}"))
        }
    }

    fn names_until(&mut self, end: &str) -> PResult<Vec<(String, Range<usize>)>> {
        let mut out = Vec::new();
        loop {
            if self.eat(end) {
                return Ok(out);
            }
            match self.ident() {
                Some(x) => out.push(x),
                None => {
                    let found = self.describe_next();
                    return self.error(self.pos..self.pos + 1, format!("expected a name or '{end}', found {found}"));
                }
            }
        }
    }
}

/// Parses a model document; guards are checked against availability at their
/// source state.
pub fn parse_model(src: &str) -> Result<ModelDocument, Vec<Diagnostic>> {
    let clean = strip_comments(src);
    let lines = LineIndex::new(src);
    let mut cur = Cursor {
        text: &clean,
        pos: 0,
        lines: &lines,
    };
    let mut actions: Vec<(String, Range<usize>)> = Vec::new();
    let mut props: Vec<(String, Range<usize>)> = Vec::new();
    let mut states: Vec<RawState> = Vec::new();
    let mut guards: Vec<RawGuard> = Vec::new();
    let mut spans = Vec::new();

    while !cur.at_end() {
        let start = cur.pos;
        let (kw, kw_span) = cur.expect_ident("a declaration").map_err(|d| vec![d])?;
        match kw.as_str() {
            "actions" | "props" => {
                let names = cur.names_until(";").map_err(|d| vec![d])?;
                let kind = if kw == "actions" { DeclKind::Actions } else { DeclKind::Props };
                spans.push(DeclSpan {
                    kind,
                    name: kw.clone(),
                    span: start..cur.pos,
                });
                if kw == "actions" {
                    actions.extend(names);
                } else {
                    props.extend(names);
                }
            }
            "state" => {
                let st = parse_state(&mut cur, start).map_err(|d| vec![d])?;
                spans.push(DeclSpan {
                    kind: DeclKind::State,
                    name: st.name.clone(),
                    span: st.span.clone(),
                });
                states.push(st);
            }
            "guard" => {
                let g = parse_guard(&mut cur, start, src).map_err(|d| vec![d])?;
                spans.push(DeclSpan {
                    kind: DeclKind::Guard,
                    name: format!("{} -> {}", g.from.0, g.to.0),
                    span: g.span.clone(),
                });
                guards.push(g);
            }
            other => {
                return Err(vec![lines.diagnostic(
                    DiagnosticKind::Syntax,
                    kw_span,
                    format!("unknown declaration '{other}'"),
                )])
            }
        }
    }

    let model = assemble(&lines, &actions, &props, &states, &guards)?;
    Ok(ModelDocument {
        source: src.to_string(),
        model,
        spans,
    })
}

fn parse_state(cur: &mut Cursor, start: usize) -> PResult<RawState> {
    let (name, name_span) = cur.expect_ident("a state name")?;
    cur.expect("{")?;
    let mut avail = None;
    let mut label = None;
    loop {
        if cur.eat("}") {
            break;
        }
        let (attr, span) = cur.expect_ident("'avail', 'label' or '}'")?;
        cur.expect(":")?;
        let names = cur.names_until(";")?;
        let slot = match attr.as_str() {
            "avail" => &mut avail,
            "label" => &mut label,
            _ => return cur.error(span, format!("unknown state attribute '{attr}'")),
        };
        if slot.is_some() {
            return cur.error(span, format!("'{attr}' given twice for state {name}"));
        }
        *slot = Some(names);
    }
    Ok(RawState {
        name,
        name_span,
        avail: avail.unwrap_or_default(),
        label: label.unwrap_or_default(),
        span: start..cur.pos,
    })
}

fn parse_guard(cur: &mut Cursor, start: usize, src: &str) -> PResult<RawGuard> {
    let from = cur.expect_ident("a source state")?;
    cur.expect("->")?;
    let to = cur.expect_ident("a target state")?;
    cur.expect(":")?;
    cur.skip_ws();
    let body_start = cur.pos;
    let Some(len) = cur.text[body_start..].find(';') else {
        return cur.error(body_start..cur.text.len(), "guard is missing its terminating ';'");
    };
    let raw = &cur.text[body_start..body_start + len];
    cur.pos = body_start + len + 1;
    let trimmed = raw.trim_end();
    let body_span = body_start..body_start + trimmed.len();
    let body = if trimmed == "else" {
        GuardBody::Else
    } else {
        match parse_formula(trimmed) {
            Ok(f) => GuardBody::Formula(f, body_span),
            Err(e) => {
                let at = body_start + e.offset;
                let end = (at + 1).min(src.len().max(at));
                return cur.error(at..end, e.message);
            }
        }
    };
    Ok(RawGuard {
        from,
        to,
        body,
        span: start..cur.pos,
    })
}

fn assemble(
    lines: &LineIndex,
    actions: &[(String, Range<usize>)],
    props: &[(String, Range<usize>)],
    states: &[RawState],
    guards: &[RawGuard],
) -> Result<HdmasModel, Vec<Diagnostic>> {
    let sem = |span: Range<usize>, msg: String| lines.diagnostic(DiagnosticKind::Semantic, span, msg);
    let mut diags = Vec::new();

    let mut seen = BTreeSet::new();
    for (a, span) in actions {
        if a == IDLE {
            diags.push(sem(span.clone(), format!("'{IDLE}' is the implicit idle action")));
        } else if !seen.insert(a.as_str()) {
            diags.push(sem(span.clone(), format!("duplicate action '{a}'")));
        }
    }
    let mut seen = BTreeSet::new();
    for (p, span) in props {
        if !seen.insert(p.as_str()) {
            diags.push(sem(span.clone(), format!("duplicate proposition '{p}'")));
        }
    }
    let mut seen = BTreeSet::new();
    for st in states {
        if !seen.insert(st.name.as_str()) {
            diags.push(sem(st.name_span.clone(), format!("duplicate state '{}'", st.name)));
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }

    let table = ActionTable::new(actions.iter().map(|(a, _)| a.clone()).collect()).expect("names checked");
    let mut model = HdmasModel::new(
        states.iter().map(|s| s.name.clone()).collect(),
        table.clone(),
        props.iter().map(|(p, _)| p.clone()).collect(),
    )
    .expect("names checked");

    for (i, st) in states.iter().enumerate() {
        let mut avail = Vec::new();
        for (a, span) in &st.avail {
            match table.index_of(a) {
                Some(k) => avail.push(k),
                None if a == IDLE => {}
                None => diags.push(sem(span.clone(), format!("unknown action '{a}'"))),
            }
        }
        model.set_avail(i, &avail, true);
        let mut label = Vec::new();
        for (p, span) in &st.label {
            match model.prop_index(p) {
                Some(k) => label.push(k),
                None => diags.push(sem(span.clone(), format!("unknown proposition '{p}'"))),
            }
        }
        model.set_label(i, &label);
    }

    let mut explicit: BTreeMap<usize, Vec<(usize, PresFormula)>> = BTreeMap::new();
    let mut elses: BTreeMap<usize, (usize, Range<usize>)> = BTreeMap::new();
    let mut pairs = BTreeSet::new();
    for g in guards {
        let from = model.state_index(&g.from.0);
        let to = model.state_index(&g.to.0);
        if from.is_none() {
            diags.push(sem(g.from.1.clone(), format!("unknown state '{}'", g.from.0)));
        }
        if to.is_none() {
            diags.push(sem(g.to.1.clone(), format!("unknown state '{}'", g.to.0)));
        }
        let (Some(from), Some(to)) = (from, to) else { continue };
        if !pairs.insert((from, to)) {
            diags.push(sem(g.span.clone(), format!("second guard for {} -> {}", g.from.0, g.to.0)));
            continue;
        }
        match &g.body {
            GuardBody::Else => {
                if elses.insert(from, (to, g.span.clone())).is_some() {
                    diags.push(sem(g.span.clone(), format!("second 'else' guard leaving {}", g.from.0)));
                }
            }
            GuardBody::Formula(f, body_span) => {
                let mut ok = true;
                for v in free_vars(f) {
                    let name = v.name();
                    let at = locate_in(lines.src, body_span, &name);
                    match table.action_of(v) {
                        Some(ActionRef::Act(k)) if model.avail(from).contains(&k) => {}
                        Some(ActionRef::Act(_)) => {
                            ok = false;
                            diags.push(sem(
                                at,
                                format!("counter {name} is not available at state {}", g.from.0),
                            ));
                        }
                        Some(ActionRef::Idle) => {
                            ok = false;
                            diags.push(sem(at, "guards cannot use the idle counter #eps".into()));
                        }
                        None => {
                            ok = false;
                            diags.push(sem(at, format!("'{name}' is not an action counter")));
                        }
                    }
                }
                if ok {
                    explicit.entry(from).or_default().push((to, f.clone()));
                }
            }
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }

    for (from, list) in &explicit {
        for (to, f) in list {
            install(&mut model, *from, *to, f.clone()).map_err(|e| vec![sem(0..0, e.to_string())])?;
        }
    }
    for (from, (to, _)) in &elses {
        let others: Vec<PresFormula> = explicit
            .get(from)
            .map(|l| l.iter().map(|(_, f)| PresFormula::not(f.clone())).collect())
            .unwrap_or_default();
        let g = if others.is_empty() {
            PresFormula::True
        } else {
            PresFormula::and(others)
        };
        install(&mut model, *from, *to, g).map_err(|e| vec![sem(0..0, e.to_string())])?;
    }
    Ok(model)
}

fn install(m: &mut HdmasModel, from: usize, to: usize, g: PresFormula) -> Result<(), ModelError> {
    m.set_guard(from, to, g)
}

fn locate_in(src: &str, body: &Range<usize>, needle: &str) -> Range<usize> {
    match src[body.clone()].find(needle) {
        Some(i) => body.start + i..body.start + i + needle.len(),
        None => body.clone(),
    }
}

/// Renders a model in the text format; `parse_model` reads it back to an
/// equal model.
pub fn print_model(m: &HdmasModel) -> String {
    let mut out = String::new();
    out.push_str(&format!("actions {};\n", m.actions().names().join(" ")).replace(" ;", ";"));
    out.push_str(&format!("props {};\n", m.props().join(" ")).replace(" ;", ";"));
    for s in 0..m.state_count() {
        let avail: Vec<&str> = m.avail(s).iter().map(|i| m.actions().name(*i)).collect();
        let label: Vec<&str> = m.label(s).iter().map(|p| m.props()[*p].as_str()).collect();
        out.push_str(&format!(
            "state {} {{ avail: {}; label: {}; }}\n",
            m.state_name(s),
            avail.join(" "),
            label.join(" ")
        ));
    }
    for s in 0..m.state_count() {
        for t in 0..m.state_count() {
            if let Some(g) = m.guard(s, t) {
                out.push_str(&format!("guard {} -> {} : {};\n", m.state_name(s), m.state_name(t), g));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
# two states
actions a1 a2;
props p;
state s { avail: a1 a2; label: ; }
state t { avail: a1; label: p; }   # only a1 at t
guard s -> t : #a1 > #a2;
guard s -> s : else;
guard t -> t : true;
";

    #[test]
    fn parses_small_model() {
        let doc = parse_model(SMALL).unwrap();
        let m = &doc.model;
        assert_eq!(m.state_count(), 2);
        assert_eq!(m.avail(1), &[0]);
        assert_eq!(m.prop_extension("p"), m.states_named(&["t"]));
        assert_eq!(
            m.guard(0, 0).unwrap(),
            &PresFormula::not(parse_formula("#a1 > #a2").unwrap())
        );
        assert_eq!(doc.spans.len(), 7);
    }

    #[test]
    fn print_then_parse_round_trips() {
        let m = parse_model(SMALL).unwrap().model;
        let again = parse_model(&print_model(&m)).unwrap().model;
        assert_eq!(again, m);
    }

    #[test]
    fn unavailable_counter_is_pointed_at() {
        let src = SMALL.replace("guard t -> t : true;", "guard t -> t : #a2 >= 0;");
        let errs = parse_model(&src).unwrap_err();
        assert_eq!(errs.len(), 1);
        let d = &errs[0];
        assert_eq!(d.kind, DiagnosticKind::Semantic);
        assert_eq!(d.line, 8);
        assert_eq!(d.col, 16);
        assert!(d.message.contains("not available"), "{d}");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let errs = parse_model("actions a1;\nstate s { avail: a1 }\n").unwrap_err();
        assert_eq!(errs[0].kind, DiagnosticKind::Syntax);
        assert_eq!((errs[0].line, errs[0].col), (2, 21));
        let errs = parse_model("actions a1;\nstate s { avail: a1; }\nguard s -> s : #a1 >= ;\n").unwrap_err();
        assert_eq!((errs[0].line, errs[0].col), (3, 22));
    }

    #[test]
    fn semantic_errors() {
        let errs = parse_model("actions a1 a1;").unwrap_err();
        assert!(errs[0].message.contains("duplicate"));
        let errs = parse_model("actions a1;\nstate s { avail: a1; }\nguard s -> s : #eps = 0;").unwrap_err();
        assert!(errs[0].message.contains("idle"));
        let errs = parse_model("state s { }\nguard s -> s : else;\nguard s -> u : else;").unwrap_err();
        assert!(errs[0].message.contains("unknown state"));
    }
}
