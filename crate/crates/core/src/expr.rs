//! Exact symbolic-numeric expressions for math spans.
//!
//! Domain bounds, face locators and parameter values are parsed into a small
//! expression tree and, where the frame needs it, reduced to an affine form
//! with exact rational coefficients. Topology decisions (adjacency, face
//! coincidence) are made on these rationals so that no floating point
//! tolerance ever enters the geometry.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("unexpected character '{0}' in expression")]
    UnexpectedChar(char),
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("unexpected token '{0}'")]
    UnexpectedToken(String),
    #[error("expression '{0}' is not affine in its symbols")]
    NotAffine(String),
    #[error("symbol '{0}' has no numeric value")]
    Unbound(String),
    #[error("division by zero")]
    DivisionByZero,
}

/// Exact rational number used throughout the geometry.
pub type Rational = BigRational;

/// Normalizes a symbol written with light LaTeX markup to the plain form
/// used as a binding key: `T_{\rm in}` → `T_in`, `T_\infty` → `T_inf`.
pub fn normalize_symbol(raw: &str) -> String {
    let mut s = raw.replace("\\rm", "").replace("\\mathrm", "").replace("\\infty", "inf");
    s.retain(|c| !matches!(c, '{' | '}' | '\\') && !c.is_whitespace());
    s
}

/// Parses a decimal literal (`23`, `-0.05`, `1e-3`, `10.0`) exactly.
pub fn parse_number(text: &str) -> Option<Rational> {
    let t = text.trim();
    if t.is_empty() {
        return None;
    }
    let (neg, body) = match t.as_bytes()[0] {
        b'-' => (true, t[1..].trim_start()),
        b'+' => (false, t[1..].trim_start()),
        _ => (false, t),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = BigRational::from_integer(numer);
    if scale >= 0 {
        value *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -value } else { value })
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Best-effort exact rational for a finite `f64` (used only when numbers
/// arrive from outside the text, e.g. programmatic templates).
pub fn from_f64(v: f64) -> Option<Rational> {
    BigRational::from_float(v)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(Rational),
    Sym(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Op(char),
}

fn lex(src: &str) -> Result<Vec<Tok>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() || c == '{' || c == '}' {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent only when followed by digits, so `2e` stays 2·e
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '-' || chars[j] == '+') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push(Tok::Num(chars[start..i].iter().collect()));
        } else if c.is_alphabetic() || c == '\\' {
            let start = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                if d.is_alphanumeric() || d == '\\' {
                    i += 1;
                } else if (d == '_' || d == '^') && i + 1 < chars.len() {
                    i += 1;
                    if chars[i] == '{' {
                        // braced subscript: copy through the closing brace
                        while i < chars.len() && chars[i] != '}' {
                            i += 1;
                        }
                        i += 1;
                    }
                } else {
                    break;
                }
            }
            let raw: String = chars[start..i.min(chars.len())].iter().collect();
            out.push(Tok::Ident(normalize_symbol(&raw)));
        } else if "+-*/()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(ExprError::UnexpectedChar(c));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.product()?;
            lhs = if op == '+' { Expr::Add(lhs.into(), rhs.into()) } else { Expr::Sub(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Op('*')) => {
                    self.pos += 1;
                    lhs = Expr::Mul(lhs.into(), self.unary()?.into());
                }
                Some(Tok::Op('/')) => {
                    self.pos += 1;
                    lhs = Expr::Div(lhs.into(), self.unary()?.into());
                }
                // implicit multiplication: `2L`, `k_b(T_in - T_out)`, `(...)a`
                Some(Tok::Num(_)) | Some(Tok::Ident(_)) | Some(Tok::Op('(')) => {
                    lhs = Expr::Mul(lhs.into(), self.unary()?.into());
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Expr::Neg(self.unary()?.into()))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.next() {
            Some(Tok::Num(n)) => parse_number(&n).map(Expr::Num).ok_or(ExprError::UnexpectedToken(n)),
            Some(Tok::Ident(s)) => Ok(Expr::Sym(s)),
            Some(Tok::Op('(')) => {
                let e = self.sum()?;
                match self.next() {
                    Some(Tok::Op(')')) => Ok(e),
                    Some(t) => Err(ExprError::UnexpectedToken(format!("{t:?}"))),
                    None => Err(ExprError::UnexpectedEnd),
                }
            }
            Some(t) => Err(ExprError::UnexpectedToken(format!("{t:?}"))),
            None => Err(ExprError::UnexpectedEnd),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let toks = lex(src)?;
        let mut p = Parser { toks, pos: 0 };
        let e = p.sum()?;
        match p.next() {
            None => Ok(e),
            Some(t) => Err(ExprError::UnexpectedToken(format!("{t:?}"))),
        }
    }

    /// Symbols in first-occurrence order.
    pub fn symbols(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e {
                Expr::Num(_) => {}
                Expr::Sym(s) => {
                    if !out.contains(s) {
                        out.push(s.clone())
                    }
                }
                Expr::Neg(a) => walk(a, out),
                Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    pub fn to_affine(&self) -> Result<Affine, ExprError> {
        match self {
            Expr::Num(n) => Ok(Affine::constant(n.clone())),
            Expr::Sym(s) => Ok(Affine::symbol(s)),
            Expr::Neg(a) => Ok(a.to_affine()?.scale(&-Rational::one())),
            Expr::Add(a, b) => Ok(a.to_affine()?.add(&b.to_affine()?)),
            Expr::Sub(a, b) => Ok(a.to_affine()?.sub(&b.to_affine()?)),
            Expr::Mul(a, b) => {
                let (a, b) = (a.to_affine()?, b.to_affine()?);
                if a.is_constant() {
                    Ok(b.scale(&a.constant))
                } else if b.is_constant() {
                    Ok(a.scale(&b.constant))
                } else {
                    Err(ExprError::NotAffine(format!("{a} * {b}")))
                }
            }
            Expr::Div(a, b) => {
                let (a, b) = (a.to_affine()?, b.to_affine()?);
                if !b.is_constant() {
                    return Err(ExprError::NotAffine(format!("{a} / {b}")));
                }
                if b.constant.is_zero() {
                    return Err(ExprError::DivisionByZero);
                }
                Ok(a.scale(&b.constant.recip()))
            }
        }
    }
}

/// `constant + Σ coeff·symbol`, exact.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Affine {
    pub constant: Rational,
    pub terms: BTreeMap<String, Rational>,
}

impl Affine {
    pub fn constant(c: Rational) -> Self {
        Affine { constant: c, terms: BTreeMap::new() }
    }

    pub fn zero() -> Self {
        Self::constant(Rational::zero())
    }

    pub fn symbol(s: &str) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(s.to_string(), Rational::one());
        Affine { constant: Rational::zero(), terms }
    }

    pub fn parse(src: &str) -> Result<Self, ExprError> {
        Expr::parse(src)?.to_affine()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().map(String::as_str)
    }

    fn normalized(mut self) -> Self {
        self.terms.retain(|_, c| !c.is_zero());
        self
    }

    pub fn add(&self, other: &Affine) -> Affine {
        let mut out = self.clone();
        out.constant += &other.constant;
        for (s, c) in &other.terms {
            *out.terms.entry(s.clone()).or_insert_with(Rational::zero) += c;
        }
        out.normalized()
    }

    pub fn sub(&self, other: &Affine) -> Affine {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, k: &Rational) -> Affine {
        Affine { constant: &self.constant * k, terms: self.terms.iter().map(|(s, c)| (s.clone(), c * k)).collect() }.normalized()
    }

    /// Substitutes numeric values for every symbol.
    pub fn eval<F>(&self, lookup: F) -> Result<Rational, ExprError>
    where
        F: Fn(&str) -> Option<Rational>,
    {
        let mut v = self.constant.clone();
        for (s, c) in &self.terms {
            let x = lookup(s).ok_or_else(|| ExprError::Unbound(s.clone()))?;
            v += c * x;
        }
        Ok(v)
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (s, c) in &self.terms {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            if mag.is_one() {
                write!(f, "{s}")?;
            } else {
                write!(f, "{}{s}", fmt_rational(&mag))?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", fmt_rational(&self.constant))
        } else if !self.constant.is_zero() {
            let sign = if self.constant.is_negative() { '-' } else { '+' };
            write!(f, " {sign} {}", fmt_rational(&self.constant.abs()))
        } else {
            Ok(())
        }
    }
}

impl Serialize for Affine {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Serializes an exact value as a JSON number.
pub fn serialize_rational<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(to_f64(r))
}

/// Decimal rendering when the denominator is a power of ten-friendly value,
/// fraction otherwise.
pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        return r.to_integer().to_string();
    }
    let mut den = r.denom().clone();
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    for p in [&two, &five] {
        while (&den % p).is_zero() {
            den /= p;
        }
    }
    if den.is_one() {
        let v = to_f64(r);
        let s = format!("{v}");
        if parse_number(&s).as_ref() == Some(r) {
            return s;
        }
    }
    format!("{}/{}", r.numer(), r.denom())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Less,
    LessEq,
    Equal,
    Greater,
    GreaterEq,
}

/// Splits `0 < x < L_f` into its expressions and relations. A single
/// equation `x = 0` yields two expressions and one relation.
pub fn parse_relation_chain(src: &str) -> Result<(Vec<Expr>, Vec<Relation>), ExprError> {
    let src = src.replace("\\leq", "<=").replace("\\le", "<=").replace("\\geq", ">=").replace("\\ge", ">=");
    let mut exprs = Vec::new();
    let mut rels = Vec::new();
    let mut current = String::new();
    let mut chars = src.chars().peekable();
    while let Some(c) = chars.next() {
        if !matches!(c, '<' | '>' | '=') {
            current.push(c);
            continue;
        }
        let or_equal = c != '=' && chars.next_if_eq(&'=').is_some();
        let rel = match (c, or_equal) {
            ('<', true) => Relation::LessEq,
            ('<', false) => Relation::Less,
            ('>', true) => Relation::GreaterEq,
            ('>', false) => Relation::Greater,
            _ => Relation::Equal,
        };
        exprs.push(Expr::parse(&current)?);
        rels.push(rel);
        current.clear();
    }
    exprs.push(Expr::parse(&current)?);
    Ok((exprs, rels))
}
