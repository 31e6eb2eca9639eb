//! Text and JSON rendering of series, and a parser for the text form.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use serde_json::{json, Value};

use super::{Mono, SeriesError, SparseSeries, VarRole, VarTable};
use crate::coefficients::{Coeff, CoefficientRing, Q};

impl<C: Coeff> SparseSeries<C> {
    /// Monomial part of a term as `a^2*b`, empty for the unit monomial.
    pub(crate) fn mono_string(&self, m: &Mono) -> String {
        let mut parts = Vec::new();
        let order = self.display_order();
        for i in order {
            let e = m[i];
            if e == 0 {
                continue;
            }
            let name = &self.vars.get(i).name;
            if e == 1 {
                parts.push(name.clone());
            } else {
                parts.push(format!("{name}^{e}"));
            }
        }
        parts.join("*")
    }

    /// Generators first, then series variables, each in table order.
    fn display_order(&self) -> Vec<usize> {
        let t = &self.vars;
        let mut idx: Vec<usize> = (0..t.len()).filter(|&i| t.get(i).role == VarRole::Generator).collect();
        idx.extend((0..t.len()).filter(|&i| t.get(i).role == VarRole::Series));
        idx
    }

    /// Renders the terms in the given order.
    pub fn format_terms(&self, terms: &[(&Mono, &C)]) -> String {
        if terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (n, (m, c)) in terms.iter().enumerate() {
            let negative = c.is_negative();
            let abs = if negative { c.neg() } else { (*c).clone() };
            if n == 0 {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            let mono = self.mono_string(m);
            if mono.is_empty() {
                out.push_str(&abs.to_string());
            } else if abs.is_one() {
                out.push_str(&mono);
            } else {
                out.push_str(&format!("{abs}*{mono}"));
            }
        }
        out
    }

    /// Generator exponents of `m`, by name.
    pub(crate) fn generator_map(&self, m: &Mono) -> BTreeMap<String, i32> {
        self.vars
            .iter()
            .zip(m.iter())
            .filter(|(v, &e)| v.role == VarRole::Generator && e != 0)
            .map(|(v, &e)| (v.name.clone(), e))
            .collect()
    }

    pub(crate) fn series_map(&self, m: &Mono) -> BTreeMap<String, i32> {
        self.vars
            .iter()
            .zip(m.iter())
            .filter(|(v, &e)| v.role == VarRole::Series && e != 0)
            .map(|(v, &e)| (v.name.clone(), e))
            .collect()
    }

    /// Canonical JSON term list.
    pub fn terms_json(&self) -> Value {
        let terms: Vec<Value> = self
            .sorted_terms()
            .into_iter()
            .map(|(m, c)| {
                json!({
                    "coeff": c.scalar_json(&self.generator_map(m)),
                    "exps": self.series_map(m),
                })
            })
            .collect();
        Value::Array(terms)
    }

    /// Terms plus the variable table and bound.
    pub fn to_json(&self) -> Value {
        let vars: Vec<Value> = self
            .vars
            .iter()
            .map(|v| {
                json!({
                    "name": v.name,
                    "degree": v.degree,
                    "cap": v.cap,
                    "role": v.role,
                })
            })
            .collect();
        json!({
            "vars": vars,
            "bound": self.bound,
            "text": self.to_string(),
            "terms": self.terms_json(),
        })
    }
}

impl<C: Coeff> fmt::Display for SparseSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.sorted_terms();
        f.write_str(&self.format_terms(&terms))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("unexpected character {ch:?} at offset {pos}")]
    UnexpectedChar { ch: char, pos: usize },
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("expected {expected} at offset {pos}")]
    Expected { expected: &'static str, pos: usize },
    #[error("exponent must be a non-negative integer at offset {0}")]
    BadExponent(usize),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Sym(char),
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, ch) = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].1.is_ascii_digit() {
                j += 1;
            }
            let s: String = chars[i..j].iter().map(|c| c.1).collect();
            out.push((Tok::Num(s.parse().expect("digits")), pos));
            i = j;
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].1.is_ascii_alphanumeric() || chars[j].1 == '_') {
                j += 1;
            }
            out.push((Tok::Ident(chars[i..j].iter().map(|c| c.1).collect()), pos));
            i = j;
        } else if "+-*/^()".contains(ch) {
            out.push((Tok::Sym(ch), pos));
            i += 1;
        } else {
            return Err(ParseError::UnexpectedChar { ch, pos });
        }
    }
    Ok(out)
}

struct Parser<'a, C: Coeff> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    ring: &'a Arc<CoefficientRing>,
    vars: &'a Arc<VarTable>,
    bound: Option<i64>,
    _c: std::marker::PhantomData<C>,
}

impl<C: Coeff> Parser<'_, C> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(usize::MAX)
    }

    fn expr(&mut self) -> Result<SparseSeries<C>, ParseError> {
        let mut acc = SparseSeries::zero(self.ring, self.vars, self.bound);
        let mut sign = 1;
        if let Some(Tok::Sym(c @ ('+' | '-'))) = self.peek() {
            sign = if *c == '-' { -1 } else { 1 };
            self.pos += 1;
        }
        loop {
            let t = self.term()?;
            acc = if sign < 0 { &acc - &t } else { &acc + &t };
            match self.peek() {
                Some(Tok::Sym('+')) => sign = 1,
                Some(Tok::Sym('-')) => sign = -1,
                _ => return Ok(acc),
            }
            self.pos += 1;
        }
    }

    fn term(&mut self) -> Result<SparseSeries<C>, ParseError> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(Tok::Sym('*')) => {
                    self.pos += 1;
                    let f = self.power()?;
                    acc = &acc * &f;
                }
                Some(Tok::Sym('/')) => {
                    self.pos += 1;
                    let at = self.offset();
                    match self.peek().cloned() {
                        Some(Tok::Num(n)) => {
                            self.pos += 1;
                            let inv = Q::new(BigInt::from(1), n);
                            let c = C::from_rational(&inv, self.ring).map_err(SeriesError::from)?;
                            acc = acc.scale(&c);
                        }
                        _ => return Err(ParseError::Expected { expected: "integer divisor", pos: at }),
                    }
                }
                Some(Tok::Num(_)) | Some(Tok::Ident(_)) | Some(Tok::Sym('(')) => {
                    let f = self.power()?;
                    acc = &acc * &f;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<SparseSeries<C>, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Sym('^')) = self.peek() {
            self.pos += 1;
            let at = self.offset();
            let neg = if let Some(Tok::Sym('-')) = self.peek() {
                self.pos += 1;
                true
            } else {
                false
            };
            match self.peek().cloned() {
                Some(Tok::Num(n)) => {
                    self.pos += 1;
                    let e: u32 = n.try_into().map_err(|_| ParseError::BadExponent(at))?;
                    if neg {
                        // only monomials with generator bases may carry negative powers
                        if base.len() != 1 || base.iter().any(|(m, _)| self.vars.weight(m) != 0) {
                            return Err(ParseError::BadExponent(at));
                        }
                        let (m, c) = base.iter().next().unwrap();
                        let mm: Mono = m.iter().map(|x| -x * e as i32).collect();
                        let mut cc = c.inverse().map_err(SeriesError::from)?;
                        let step = cc.clone();
                        for _ in 1..e {
                            cc = cc.mul(&step);
                        }
                        let mut out = SparseSeries::zero(self.ring, self.vars, self.bound);
                        out.add_term(mm, cc);
                        return Ok(out);
                    }
                    Ok(base.pow(e))
                }
                _ => Err(ParseError::BadExponent(at)),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<SparseSeries<C>, ParseError> {
        let at = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                let c = C::from_rational(&Q::from_integer(n), self.ring).map_err(SeriesError::from)?;
                Ok(SparseSeries::constant(self.ring, self.vars, c, self.bound))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(SparseSeries::var(self.ring, self.vars, &name, self.bound)?)
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(Tok::Sym(')')) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(ParseError::Expected { expected: "')'", pos: self.offset() }),
                }
            }
            Some(_) => Err(ParseError::Expected { expected: "number, variable or '('", pos: at }),
            None => Err(ParseError::UnexpectedEnd),
        }
    }
}

/// Parse `text` such as `2*v_2^2*y^3 + (v_1^3 + v_2) z^3 - 1/2*x` into a series.
/// Juxtaposition multiplies; `^` takes a (possibly negative, for generator
/// monomials) integer exponent.
pub fn parse_series<C: Coeff>(
    text: &str,
    ring: &Arc<CoefficientRing>,
    vars: &Arc<VarTable>,
    bound: Option<i64>,
) -> Result<SparseSeries<C>, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, ring, vars, bound, _c: std::marker::PhantomData };
    let out = p.expr()?;
    if p.pos != p.toks.len() {
        let (tok, pos) = &p.toks[p.pos];
        let ch = match tok {
            Tok::Sym(c) => *c,
            Tok::Ident(s) => s.chars().next().unwrap_or('?'),
            Tok::Num(_) => '#',
        };
        return Err(ParseError::UnexpectedChar { ch, pos: *pos });
    }
    Ok(out)
}
