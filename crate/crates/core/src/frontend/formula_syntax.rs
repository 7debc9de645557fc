//! Concrete syntax for state formulas.
//!
//! ```text
//! phi  ::= phi <-> phi | phi -> phi | phi | phi | phi & phi | unary
//! unary ::= ! unary | Q y unary | <<t,t>> path | ( phi ) | true | false | ident
//! Q    ::= E | A
//! path ::= X unary | G unary | F unary | ( phi U phi )
//! t    ::= 0, 1, ... | y1 | y2 | z0, z1, ...
//! ```
//!
//! `&&` and `||` are accepted for `&` and `|`. A run of quantifiers over two
//! distinct variables forms one prefix. Quantifier and temporal bodies are
//! unary: `E y1 <<y1,2>> X p & q` reads as `(E y1 <<y1,2>> X p) & q`.

use std::ops::Range;

use crate::logic::{check_syntax, AgentVar, NodePath, PathFormula, QuantPrefix, Quantifier, StateFormula, Term};

use super::model_dsl::{Diagnostic, DiagnosticKind, LineIndex};

/// Source spans mirroring the formula tree, children in node-path order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanTree {
    pub span: Range<usize>,
    pub children: Vec<SpanTree>,
}

impl SpanTree {
    fn leaf(span: Range<usize>) -> SpanTree {
        SpanTree {
            span,
            children: Vec::new(),
        }
    }

    pub fn at(&self, path: &NodePath) -> &SpanTree {
        let mut cur = self;
        for i in &path.0 {
            match cur.children.get(*i) {
                Some(c) => cur = c,
                None => break,
            }
        }
        cur
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u64),
    Punct(&'static str),
}

const PUNCT: [&str; 12] = ["<->", "<<", ">>", "->", "&&", "||", "&", "|", "!", ",", "(", ")"];

fn tokenize(src: &str, lines: &LineIndex) -> Result<Vec<(Tok, Range<usize>)>, Diagnostic> {
    let mut out = Vec::new();
    let mut i = 0;
    let bytes = src.as_bytes();
    while i < src.len() {
        let c = src[i..].chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if let Some(p) = PUNCT.iter().find(|p| src[i..].starts_with(**p)) {
            out.push((Tok::Punct(p), i..i + p.len()));
            i += p.len();
            continue;
        }
        if c.is_ascii_digit() {
            let n = src[i..].bytes().take_while(u8::is_ascii_digit).count();
            let text = &src[i..i + n];
            let v = text
                .parse()
                .map_err(|_| lines.diagnostic(DiagnosticKind::Syntax, i..i + n, format!("number {text} is too large")))?;
            out.push((Tok::Num(v), i..i + n));
            i += n;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let n = bytes[i..]
                .iter()
                .take_while(|b| b.is_ascii_alphanumeric() || **b == b'_' || **b == b'\'')
                .count();
            out.push((Tok::Ident(src[i..i + n].to_string()), i..i + n));
            i += n;
            continue;
        }
        return Err(lines.diagnostic(
            DiagnosticKind::Syntax,
            i..i + c.len_utf8(),
            format!("unexpected character '{c}'"),
        ));
    }
    Ok(out)
}

const KEYWORDS: [&str; 8] = ["E", "A", "X", "G", "F", "U", "true", "false"];

struct Parser<'a> {
    toks: Vec<(Tok, Range<usize>)>,
    pos: usize,
    end: usize,
    lines: &'a LineIndex<'a>,
}

type Node = (StateFormula, SpanTree);
type PResult<T> = Result<T, Diagnostic>;

fn join(a: &Range<usize>, b: &Range<usize>) -> Range<usize> {
    a.start.min(b.start)..a.end.max(b.end)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn span(&self) -> Range<usize> {
        match self.toks.get(self.pos) {
            Some((_, s)) => s.clone(),
            None => self.end..self.end,
        }
    }

    fn last_end(&self) -> usize {
        self.pos.checked_sub(1).map(|i| self.toks[i].1.end).unwrap_or(0)
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let found = match self.peek() {
            None => "end of input".to_string(),
            Some(Tok::Ident(s)) => format!("'{s}'"),
            Some(Tok::Num(n)) => format!("'{n}'"),
            Some(Tok::Punct(p)) => format!("'{p}'"),
        };
        Err(self
            .lines
            .diagnostic(DiagnosticKind::Syntax, self.span(), format!("{}, found {found}", msg.into())))
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Punct(q)) if *q == p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_ident(&mut self, w: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(q)) if q == w) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.error(format!("expected '{p}'"))
        }
    }

    fn formula(&mut self) -> PResult<Node> {
        let lhs = self.implication()?;
        if self.eat_punct("<->") {
            let rhs = self.formula()?;
            return Ok(iff(lhs, rhs));
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> PResult<Node> {
        let lhs = self.disjunction()?;
        if self.eat_punct("->") {
            let rhs = self.implication()?;
            return Ok(implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> PResult<Node> {
        let mut acc = self.conjunction()?;
        while self.eat_punct("|") || self.eat_punct("||") {
            let rhs = self.conjunction()?;
            acc = binary(acc, rhs, |a, b| StateFormula::Or(Box::new(a), Box::new(b)));
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> PResult<Node> {
        let mut acc = self.unary()?;
        while self.eat_punct("&") || self.eat_punct("&&") {
            let rhs = self.unary()?;
            acc = binary(acc, rhs, |a, b| StateFormula::And(Box::new(a), Box::new(b)));
        }
        Ok(acc)
    }

    fn agent_var(&mut self) -> PResult<AgentVar> {
        let v = match self.peek() {
            Some(Tok::Ident(s)) if s == "y1" => AgentVar::Y1,
            Some(Tok::Ident(s)) if s == "y2" => AgentVar::Y2,
            _ => return self.error("expected y1 or y2 after a quantifier"),
        };
        self.pos += 1;
        Ok(v)
    }

    fn quantifier(&mut self) -> Option<Quantifier> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == "E" => Some(Quantifier::Exists),
            Some(Tok::Ident(s)) if s == "A" => Some(Quantifier::Forall),
            _ => None,
        }
    }

    fn unary(&mut self) -> PResult<Node> {
        let start = self.span().start;
        if self.eat_punct("!") {
            let (a, sa) = self.unary()?;
            let span = start..sa.span.end;
            return Ok((StateFormula::Not(Box::new(a)), SpanTree { span, children: vec![sa] }));
        }
        if let Some(q) = self.quantifier() {
            self.pos += 1;
            let v = self.agent_var()?;
            let mut items = vec![(q, v)];
            if let Some(q2) = self.quantifier() {
                let save = self.pos;
                self.pos += 1;
                match self.agent_var() {
                    Ok(v2) if v2 != v => items.push((q2, v2)),
                    Ok(_) => self.pos = save,
                    Err(e) => return Err(e),
                }
            }
            let (body, sb) = self.unary()?;
            let prefix = QuantPrefix::new(items).expect("distinct variables");
            let span = start..sb.span.end;
            return Ok((StateFormula::Quant(prefix, Box::new(body)), SpanTree { span, children: vec![sb] }));
        }
        if self.eat_punct("<<") {
            let t1 = self.term()?;
            self.expect_punct(",")?;
            let t2 = self.term()?;
            self.expect_punct(">>")?;
            let (chi, sp) = self.path()?;
            let span = start..sp.span.end;
            return Ok((StateFormula::Coop(t1, t2, Box::new(chi)), SpanTree { span, children: vec![sp] }));
        }
        if self.eat_punct("(") {
            let (f, mut s) = self.formula()?;
            self.expect_punct(")")?;
            s.span = start..self.last_end();
            return Ok((f, s));
        }
        let span = self.span();
        match self.peek().cloned() {
            Some(Tok::Ident(w)) if w == "true" => {
                self.pos += 1;
                Ok((StateFormula::Top, SpanTree::leaf(span)))
            }
            Some(Tok::Ident(w)) if w == "false" => {
                self.pos += 1;
                let top = SpanTree::leaf(span.clone());
                Ok((
                    StateFormula::Not(Box::new(StateFormula::Top)),
                    SpanTree {
                        span,
                        children: vec![top],
                    },
                ))
            }
            Some(Tok::Ident(w)) if !KEYWORDS.contains(&w.as_str()) && w != "y1" && w != "y2" => {
                self.pos += 1;
                Ok((StateFormula::Prop(w), SpanTree::leaf(span)))
            }
            _ => self.error("expected a formula"),
        }
    }

    fn path(&mut self) -> PResult<(PathFormula, SpanTree)> {
        let start = self.span().start;
        for (kw, make) in [
            ("X", PathFormula::Next as fn(Box<StateFormula>) -> PathFormula),
            ("G", PathFormula::Globally),
        ] {
            if self.eat_ident(kw) {
                let (a, sa) = self.unary()?;
                let span = start..sa.span.end;
                return Ok((make(Box::new(a)), SpanTree { span, children: vec![sa] }));
            }
        }
        if self.eat_ident("F") {
            let (b, sb) = self.unary()?;
            let span = start..sb.span.end;
            let top = SpanTree::leaf(start..start + 1);
            return Ok((
                PathFormula::Until(Box::new(StateFormula::Top), Box::new(b)),
                SpanTree {
                    span,
                    children: vec![top, sb],
                },
            ));
        }
        if self.eat_punct("(") {
            let (a, sa) = self.formula()?;
            if !self.eat_ident("U") {
                return self.error("expected 'U'");
            }
            let (b, sb) = self.formula()?;
            self.expect_punct(")")?;
            let span = start..self.last_end();
            return Ok((
                PathFormula::Until(Box::new(a), Box::new(b)),
                SpanTree {
                    span,
                    children: vec![sa, sb],
                },
            ));
        }
        self.error("expected X, G, F or '(' after a strategic operator")
    }

    fn term(&mut self) -> PResult<Term> {
        let t = match self.peek() {
            Some(Tok::Num(n)) => Term::Nat(*n),
            Some(Tok::Ident(s)) if s == "y1" => Term::Y1,
            Some(Tok::Ident(s)) if s == "y2" => Term::Y2,
            Some(Tok::Ident(s)) if s.len() > 1 && s.starts_with('z') && s[1..].bytes().all(|b| b.is_ascii_digit()) => {
                match s[1..].parse() {
                    Ok(i) => Term::Param(i),
                    Err(_) => return self.error("parameter index too large"),
                }
            }
            _ => return self.error("expected a number, y1, y2 or a parameter zN"),
        };
        self.pos += 1;
        Ok(t)
    }
}

fn binary(a: Node, b: Node, make: impl FnOnce(StateFormula, StateFormula) -> StateFormula) -> Node {
    let span = join(&a.1.span, &b.1.span);
    (
        make(a.0, b.0),
        SpanTree {
            span,
            children: vec![a.1, b.1],
        },
    )
}

fn negated(a: Node) -> Node {
    let span = a.1.span.clone();
    (
        StateFormula::Not(Box::new(a.0)),
        SpanTree {
            span,
            children: vec![a.1],
        },
    )
}

fn implies(a: Node, b: Node) -> Node {
    binary(negated(a), b, |x, y| StateFormula::Or(Box::new(x), Box::new(y)))
}

fn iff(a: Node, b: Node) -> Node {
    let forward = implies(a.clone(), b.clone());
    let backward = implies(b, a);
    binary(forward, backward, |x, y| StateFormula::And(Box::new(x), Box::new(y)))
}

/// Parses without the validity checks.
pub fn parse_formula_unchecked(src: &str) -> Result<(StateFormula, SpanTree), Diagnostic> {
    let lines = LineIndex::new(src);
    let toks = tokenize(src, &lines)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: src.len(),
        lines: &lines,
    };
    let node = p.formula()?;
    if p.pos < p.toks.len() {
        return p.error("expected end of formula");
    }
    Ok(node)
}

/// Parses and validates a state formula; vacuous quantifiers are dropped.
pub fn parse_formula(src: &str) -> Result<StateFormula, Vec<Diagnostic>> {
    let (phi, spans) = parse_formula_unchecked(src).map_err(|d| vec![d])?;
    let lines = LineIndex::new(src);
    check_syntax(&phi).map_err(|issues| {
        issues
            .iter()
            .map(|i| lines.diagnostic(DiagnosticKind::Semantic, spans.at(i.path()).span.clone(), i.to_string()))
            .collect()
    })
}
