//! Predicate language for filter stages.
//!
//! ```text
//! expr    := or
//! or      := and ("or" and)*
//! and     := unary ("and" unary)*
//! unary   := "not" unary | "(" expr ")" | compare
//! compare := ATTR OP NUMBER            OP := < | <= | > | >= | ==
//! ```
//!
//! An attribute name resolves to its whole-document score. Span-list
//! attributes resolve to their span count, or to their largest span score
//! when written with a `.max_score` suffix.

use std::fmt;

use crate::error::{Result, SieveError};

/// How an attribute's spans collapse into one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Score,
    Count,
    MaxScore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttrKind {
    /// One span covering the whole document.
    WholeDocument,
    /// Zero or more spans.
    SpanList,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttrRef {
    pub name: String,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl CmpOp {
    fn apply(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Compare { attr: AttrRef, op: CmpOp, value: f64 },
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Not(Box<Expr>),
}

/// A parsed predicate that remembers its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    source: String,
    expr: Expr,
    /// Source text of each top-level conjunct.
    clauses: Vec<(String, Expr)>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Op(CmpOp),
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(usize, usize, Tok)>> {
    let err = |position, message: String| SieveError::PolicySyntax { position, message };
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => {
                i += 1;
                out.push((start, i, Tok::LParen));
            }
            b')' => {
                i += 1;
                out.push((start, i, Tok::RParen));
            }
            b'<' | b'>' | b'=' => {
                let two = bytes.get(i + 1) == Some(&b'=');
                let op = match (c, two) {
                    (b'<', false) => CmpOp::Lt,
                    (b'<', true) => CmpOp::Le,
                    (b'>', false) => CmpOp::Gt,
                    (b'>', true) => CmpOp::Ge,
                    (b'=', true) => CmpOp::Eq,
                    _ => return Err(err(start, "expected `==`".into())),
                };
                i += if two { 2 } else { 1 };
                out.push((start, i, Tok::Op(op)));
            }
            b'0'..=b'9' | b'-' | b'+' | b'.' => {
                i += 1;
                while i < bytes.len() {
                    let d = bytes[i];
                    let exp_sign = (d == b'-' || d == b'+') && matches!(bytes[i - 1], b'e' | b'E');
                    if d.is_ascii_digit() || d == b'.' || d == b'e' || d == b'E' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let text = &src[start..i];
                let v: f64 = text
                    .parse()
                    .map_err(|_| err(start, format!("invalid number `{text}`")))?;
                if !v.is_finite() {
                    return Err(err(start, format!("number `{text}` is not finite")));
                }
                out.push((start, i, Tok::Num(v)));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || matches!(bytes[i], b'_' | b'.' | b':' | b'-'))
                {
                    i += 1;
                }
                out.push((start, i, Tok::Ident(src[start..i].to_string())));
            }
            _ => {
                let ch = src[i..].chars().next().unwrap();
                return Err(err(start, format!("unexpected character {ch:?}")));
            }
        }
    }
    Ok(out)
}

struct Parser<'a, F> {
    src: &'a str,
    toks: Vec<(usize, usize, Tok)>,
    pos: usize,
    resolve: F,
    unknown: Vec<String>,
}

impl<F: Fn(&str) -> Option<AttrKind>> Parser<'_, F> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.2)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.src.len(), |t| t.0)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(SieveError::PolicySyntax {
            position: self.offset(),
            message: message.into(),
        })
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn or(&mut self) -> Result<Expr> {
        let mut items = vec![self.and()?];
        while self.keyword("or") {
            self.pos += 1;
            items.push(self.and()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Expr::Or(items) })
    }

    fn and(&mut self) -> Result<Expr> {
        let mut items = vec![self.unary()?];
        while self.keyword("and") {
            self.pos += 1;
            items.push(self.unary()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Expr::And(items) })
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.keyword("not") {
            self.pos += 1;
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let e = self.or()?;
            if self.peek() != Some(&Tok::RParen) {
                return self.err("expected `)`");
            }
            self.pos += 1;
            return Ok(e);
        }
        self.compare()
    }

    fn compare(&mut self) -> Result<Expr> {
        let name = match self.peek() {
            Some(Tok::Ident(s)) if !matches!(s.as_str(), "and" | "or" | "not") => s.clone(),
            _ => return self.err("expected an attribute name"),
        };
        self.pos += 1;
        let op = match self.peek() {
            Some(Tok::Op(op)) => *op,
            _ => return self.err("expected a comparison operator"),
        };
        self.pos += 1;
        let value = match self.peek() {
            Some(Tok::Num(v)) => *v,
            _ => return self.err("expected a number"),
        };
        self.pos += 1;
        let attr = self.attr_ref(&name);
        Ok(Expr::Compare { attr, op, value })
    }

    fn attr_ref(&mut self, name: &str) -> AttrRef {
        if let Some(base) = name.strip_suffix(".max_score") {
            if (self.resolve)(base).is_some() {
                return AttrRef {
                    name: base.to_string(),
                    aggregate: Aggregate::MaxScore,
                };
            }
        }
        let aggregate = match (self.resolve)(name) {
            Some(AttrKind::WholeDocument) => Aggregate::Score,
            Some(AttrKind::SpanList) => Aggregate::Count,
            None => {
                if !self.unknown.iter().any(|u| u == name) {
                    self.unknown.push(name.to_string());
                }
                Aggregate::Score
            }
        };
        AttrRef {
            name: name.to_string(),
            aggregate,
        }
    }
}

impl Predicate {
    /// Parses `src`, resolving attribute names with `resolve`. Every unknown
    /// name is reported together.
    pub fn parse(src: &str, resolve: impl Fn(&str) -> Option<AttrKind>) -> Result<Self> {
        let toks = lex(src)?;
        let mut p = Parser {
            src,
            toks,
            pos: 0,
            resolve,
            unknown: Vec::new(),
        };
        if p.toks.is_empty() {
            return p.err("empty predicate");
        }
        // top-level conjuncts, with their source ranges
        let mut clauses = Vec::new();
        let mut items = Vec::new();
        loop {
            let start = p.offset();
            let e = p.unary()?;
            let end = p.toks[p.pos - 1].1;
            clauses.push((src[start..end].to_string(), e.clone()));
            items.push(e);
            if p.keyword("and") {
                p.pos += 1;
            } else {
                break;
            }
        }
        let mut expr = if items.len() == 1 { items.pop().unwrap() } else { Expr::And(items) };
        if p.keyword("or") {
            clauses.clear();
            let mut alts = vec![expr];
            while p.keyword("or") {
                p.pos += 1;
                alts.push(p.and()?);
            }
            expr = Expr::Or(alts);
            clauses.push((src.trim().to_string(), expr.clone()));
        }
        if p.pos != p.toks.len() {
            return p.err("unexpected trailing input");
        }
        if !p.unknown.is_empty() {
            return Err(SieveError::UnknownAttributes(p.unknown));
        }
        Ok(Predicate {
            source: src.to_string(),
            expr,
            clauses,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// Source text and expression of each top-level `and` operand.
    pub fn clauses(&self) -> &[(String, Expr)] {
        &self.clauses
    }

    pub fn attributes(&self) -> Vec<&AttrRef> {
        let mut out = Vec::new();
        collect(&self.expr, &mut out);
        out
    }

    pub fn eval(&self, lookup: &mut impl FnMut(&AttrRef) -> Result<f64>) -> Result<bool> {
        eval(&self.expr, lookup)
    }
}

fn collect<'a>(e: &'a Expr, out: &mut Vec<&'a AttrRef>) {
    match e {
        Expr::Compare { attr, .. } => out.push(attr),
        Expr::And(v) | Expr::Or(v) => v.iter().for_each(|e| collect(e, out)),
        Expr::Not(e) => collect(e, out),
    }
}

pub fn eval(e: &Expr, lookup: &mut impl FnMut(&AttrRef) -> Result<f64>) -> Result<bool> {
    Ok(match e {
        Expr::Compare { attr, op, value } => op.apply(lookup(attr)?, *value),
        Expr::And(v) => {
            for e in v {
                if !eval(e, lookup)? {
                    return Ok(false);
                }
            }
            true
        }
        Expr::Or(v) => {
            for e in v {
                if eval(e, lookup)? {
                    return Ok(true);
                }
            }
            false
        }
        Expr::Not(e) => !eval(e, lookup)?,
    })
}
