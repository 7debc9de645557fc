//! Concrete syntax for guards.
//!
//! ```text
//! formula := disj ("->" formula)?
//! disj    := conj ("||" conj)*
//! conj    := unary ("&&" unary)*
//! unary   := "!" unary | "true" | "false" | "(" formula ")" | cmp
//!          | ("exists" | "forall") IDENT "." formula
//! cmp     := sum ("=" | "!=" | "<" | "<=" | ">" | ">=") sum
//! sum     := prod ("+" prod)*
//! prod    := INT ("*" factor)? | factor ("*" INT)?
//! factor  := "#" IDENT | IDENT | "(" sum ")"
//! ```
//!
//! Counter references `#name` become the variable named `#name`. Derived
//! comparisons are rewritten into `=`/`<` at parse time.

use std::fmt;

use num_bigint::BigInt;
use thiserror::Error;

use crate::formula::PresFormula;
use crate::term::{LinTerm, Var};

/// A parse failure at a byte offset of the input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at byte {offset}")]
pub struct SyntaxError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Counter(String),
    Ident(String),
    Op(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Int(n) => write!(f, "{n}"),
            Tok::Counter(c) => write!(f, "#{c}"),
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Op(o) => write!(f, "{o}"),
        }
    }
}

const OPS: [&str; 18] = [
    "->", "&&", "||", "<=", ">=", "!=", "<", ">", "=", "!", "(", ")", "+", "*", ".", "-", "|", ",",
];

/// Identifier characters; `-` is allowed inside a name when followed by
/// another name character.
pub fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub fn ident_len(s: &str) -> usize {
    let b = s.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        let inner_dash = c == '-' && i > 0 && i + 1 < b.len() && (b[i + 1] as char).is_ascii_alphanumeric();
        if c.is_ascii_alphanumeric() || c == '_' || c == '\'' || inner_dash {
            i += 1;
        } else {
            break;
        }
    }
    i
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, SyntaxError> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < src.len() {
        let rest = &src[i..];
        let c = rest.chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if c.is_ascii_digit() {
            let n = rest.bytes().take_while(|b| b.is_ascii_digit()).count();
            out.push((Tok::Int(rest[..n].parse().unwrap()), i));
            i += n;
            continue;
        }
        if c == '#' {
            let n = ident_len(&rest[1..]);
            if n == 0 || !is_ident_start(rest[1..].chars().next().unwrap()) {
                return Err(SyntaxError {
                    offset: i,
                    message: "expected a name after '#'".into(),
                });
            }
            out.push((Tok::Counter(rest[1..1 + n].to_string()), i));
            i += 1 + n;
            continue;
        }
        if is_ident_start(c) {
            let n = ident_len(rest);
            out.push((Tok::Ident(rest[..n].to_string()), i));
            i += n;
            continue;
        }
        match OPS.iter().find(|op| rest.starts_with(**op)) {
            Some(op) if *op != "-" && *op != "|" && *op != "," => {
                out.push((Tok::Op(op), i));
                i += op.len();
            }
            _ => {
                return Err(SyntaxError {
                    offset: i,
                    message: format!("unexpected character '{c}'"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn eat(&mut self, op: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Op(o)) if *o == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: &str) -> Result<(), SyntaxError> {
        if self.eat(op) {
            Ok(())
        } else {
            match self.peek() {
                Some(t) => self.err(format!("expected '{op}', found '{t}'")),
                None => self.err(format!("expected '{op}', found end of input")),
            }
        }
    }

    fn formula(&mut self) -> Result<PresFormula, SyntaxError> {
        let lhs = self.disj()?;
        if self.eat("->") {
            let rhs = self.formula()?;
            return Ok(PresFormula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disj(&mut self) -> Result<PresFormula, SyntaxError> {
        let mut parts = vec![self.conj()?];
        while self.eat("||") {
            parts.push(self.conj()?);
        }
        Ok(PresFormula::or(parts))
    }

    fn conj(&mut self) -> Result<PresFormula, SyntaxError> {
        let mut parts = vec![self.unary()?];
        while self.eat("&&") {
            parts.push(self.unary()?);
        }
        Ok(PresFormula::and(parts))
    }

    fn unary(&mut self) -> Result<PresFormula, SyntaxError> {
        if self.eat("!") {
            return Ok(PresFormula::not(self.unary()?));
        }
        match self.peek().cloned() {
            Some(Tok::Ident(w)) if w == "true" => {
                self.pos += 1;
                Ok(PresFormula::True)
            }
            Some(Tok::Ident(w)) if w == "false" => {
                self.pos += 1;
                Ok(PresFormula::False)
            }
            Some(Tok::Ident(w)) if w == "exists" || w == "forall" => {
                self.pos += 1;
                let v = match self.peek().cloned() {
                    Some(Tok::Ident(n)) => Var::named(&n),
                    Some(Tok::Counter(n)) => Var::named(&format!("#{n}")),
                    _ => return self.err("expected a variable after quantifier"),
                };
                self.pos += 1;
                self.expect(".")?;
                let body = self.formula()?;
                Ok(if w == "exists" {
                    PresFormula::exists(v, body)
                } else {
                    PresFormula::forall(v, body)
                })
            }
            Some(Tok::Op("(")) => {
                let save = self.pos;
                if let Ok(c) = self.comparison() {
                    return Ok(c);
                }
                self.pos = save;
                self.pos += 1;
                let f = self.formula()?;
                self.expect(")")?;
                Ok(f)
            }
            _ => self.comparison(),
        }
    }

    fn comparison(&mut self) -> Result<PresFormula, SyntaxError> {
        let lhs = self.sum()?;
        let op = match self.peek() {
            Some(Tok::Op(o)) if ["=", "!=", "<", "<=", ">", ">="].contains(o) => *o,
            Some(t) => return self.err(format!("expected a comparison, found '{t}'")),
            None => return self.err("expected a comparison, found end of input"),
        };
        self.pos += 1;
        let rhs = self.sum()?;
        Ok(match op {
            "=" => PresFormula::eq(lhs, rhs),
            "!=" => PresFormula::ne(lhs, rhs),
            "<" => PresFormula::lt(lhs, rhs),
            "<=" => PresFormula::le(lhs, rhs),
            ">" => PresFormula::gt(lhs, rhs),
            _ => PresFormula::ge(lhs, rhs),
        })
    }

    fn sum(&mut self) -> Result<LinTerm, SyntaxError> {
        let mut t = self.prod()?;
        while self.eat("+") {
            t = t + self.prod()?;
        }
        Ok(t)
    }

    fn prod(&mut self) -> Result<LinTerm, SyntaxError> {
        if let Some(Tok::Int(n)) = self.peek().cloned() {
            self.pos += 1;
            if self.eat("*") {
                return Ok(self.factor()?.scale(&n));
            }
            return Ok(LinTerm::constant(n));
        }
        let f = self.factor()?;
        if self.eat("*") {
            match self.peek().cloned() {
                Some(Tok::Int(n)) => {
                    self.pos += 1;
                    return Ok(f.scale(&n));
                }
                _ => return self.err("multiplication needs a constant factor"),
            }
        }
        Ok(f)
    }

    fn factor(&mut self) -> Result<LinTerm, SyntaxError> {
        match self.peek().cloned() {
            Some(Tok::Counter(n)) => {
                self.pos += 1;
                Ok(LinTerm::var(Var::named(&format!("#{n}"))))
            }
            Some(Tok::Ident(n)) if !["true", "false", "exists", "forall"].contains(&n.as_str()) => {
                self.pos += 1;
                Ok(LinTerm::var(Var::named(&n)))
            }
            Some(Tok::Op("(")) => {
                self.pos += 1;
                let t = self.sum()?;
                self.expect(")")?;
                Ok(t)
            }
            Some(Tok::Int(_)) => self.err("multiplication needs a counter factor"),
            Some(t) => self.err(format!("expected a term, found '{t}'")),
            None => self.err("expected a term, found end of input"),
        }
    }
}

/// Parses a guard or closed formula in the concrete syntax.
pub fn parse_formula(src: &str) -> Result<PresFormula, SyntaxError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: src.len(),
    };
    let f = p.formula()?;
    if let Some(t) = p.peek() {
        return p.err(format!("unexpected '{t}' after formula"));
    }
    Ok(f)
}
