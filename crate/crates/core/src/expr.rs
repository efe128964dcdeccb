//! Scalar expressions in the decision variables, with exact gradients by
//! forward-mode differentiation over the tree.
//!
//! Grammar (ASCII operators, whitespace ignored):
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := ('-')? atom ('^' integer)?
//! atom   := number | ident | func '(' expr ')' | '(' expr ')'
//! ident  := 'x' positive-integer
//! func   := 'sqrt' | 'exp' | 'log' | 'sin' | 'cos'
//! ```
//!
//! Only smooth primitives are admitted; `abs`, `min` and `max` are rejected
//! as unknown identifiers.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }
}

/// Expression tree. `Var` holds a zero-based index (`x1` is `Var(0)`).
/// Literals are finite and non-negative; negation is always a `Neg` node,
/// which keeps printing and parsing mutually inverse.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var(usize),
    Lit(f64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Neg(Box<Expr>),
    Func(Func, Box<Expr>),
}

impl Expr {
    /// Literal constructor honouring the non-negative literal invariant.
    pub fn lit(v: f64) -> Expr {
        if v < 0.0 {
            Expr::Neg(Box::new(Expr::Lit(-v)))
        } else {
            Expr::Lit(v)
        }
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    /// One past the largest variable index referenced (0 for constants).
    pub fn var_bound(&self) -> usize {
        match self {
            Expr::Var(i) => i + 1,
            Expr::Lit(_) => 0,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.var_bound().max(b.var_bound())
            }
            Expr::Pow(a, _) | Expr::Neg(a) | Expr::Func(_, a) => a.var_bound(),
        }
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Lit(v) if *v == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("variable x{index} at byte {offset} is out of range (n = {n})")]
    VariableOutOfRange { offset: usize, index: usize, n: usize },
}

/// Parses `source` as an expression over `x1..xn`.
pub fn parse(source: &str, n: usize) -> Result<Expr, ParseError> {
    let mut p = Parser { src: source.as_bytes(), pos: 0, n };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n: usize,
}

impl Parser<'_> {
    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax { offset: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && matches!(self.src[self.pos], b' ' | b'\t' | b'\r' | b'\n') {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let negate = if self.peek() == Some(b'-') {
            self.pos += 1;
            true
        } else {
            false
        };
        let mut base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.syntax("expected integer exponent after `^`"));
            }
            let digits = core::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
            let k: u32 = digits.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: "exponent too large".to_string(),
            })?;
            base = Expr::Pow(Box::new(base), k);
        }
        Ok(if negate { Expr::Neg(Box::new(base)) } else { base })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.syntax("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            let b = *p;
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
            *p - b
        };
        let mut p = self.pos;
        let mut count = digits(&mut p);
        if p < s.len() && s[p] == b'.' {
            p += 1;
            count += digits(&mut p);
        }
        if count == 0 {
            return Err(self.syntax("malformed number"));
        }
        if p < s.len() && (s[p] == b'e' || s[p] == b'E') {
            let mut q = p + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) == 0 {
                self.pos = q;
                return Err(self.syntax("malformed exponent in number"));
            }
            p = q;
        }
        let text = core::str::from_utf8(&s[start..p]).unwrap_or("");
        let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: "malformed number".to_string(),
        })?;
        if !v.is_finite() {
            return Err(ParseError::Syntax { offset: start, message: "number overflows".to_string() });
        }
        self.pos = p;
        Ok(Expr::Lit(v))
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = core::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        if let Some(f) = Func::from_name(name) {
            if self.peek() != Some(b'(') {
                return Err(self.syntax("expected `(` after function name"));
            }
            self.pos += 1;
            let arg = self.expr()?;
            if self.peek() != Some(b')') {
                return Err(self.syntax("expected `)`"));
            }
            self.pos += 1;
            return Ok(Expr::Func(f, Box::new(arg)));
        }
        let bytes = name.as_bytes();
        if bytes.len() >= 2 && bytes[0] == b'x' && bytes[1..].iter().all(u8::is_ascii_digit) && bytes[1] != b'0' {
            let index: usize = name[1..].parse().map_err(|_| ParseError::UnknownIdentifier {
                offset: start,
                name: name.to_string(),
            })?;
            if index > self.n {
                return Err(ParseError::VariableOutOfRange { offset: start, index, n: self.n });
            }
            return Ok(Expr::Var(index - 1));
        }
        Err(ParseError::UnknownIdentifier { offset: start, name: name.to_string() })
    }
}

// Precedence levels used by the canonical printer.
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

impl Expr {
    fn level(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => SUM,
            Expr::Mul(..) | Expr::Div(..) => PRODUCT,
            Expr::Neg(..) => UNARY,
            Expr::Pow(..) => POWER,
            Expr::Var(_) | Expr::Lit(_) | Expr::Func(..) => ATOM,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min_level: u8) -> fmt::Result {
        if self.level() < min_level {
            f.write_str("(")?;
            self.write_at(f, SUM)?;
            return f.write_str(")");
        }
        match self {
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Lit(v) => write!(f, "{v:?}"),
            Expr::Add(a, b) => {
                a.write_at(f, SUM)?;
                f.write_str(" + ")?;
                b.write_at(f, PRODUCT)
            }
            Expr::Sub(a, b) => {
                a.write_at(f, SUM)?;
                f.write_str(" - ")?;
                b.write_at(f, PRODUCT)
            }
            Expr::Mul(a, b) => {
                a.write_at(f, PRODUCT)?;
                f.write_str("*")?;
                b.write_at(f, UNARY)
            }
            Expr::Div(a, b) => {
                a.write_at(f, PRODUCT)?;
                f.write_str("/")?;
                b.write_at(f, UNARY)
            }
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.write_at(f, POWER)
            }
            Expr::Pow(a, k) => {
                a.write_at(f, ATOM)?;
                write!(f, "^{k}")
            }
            Expr::Func(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write_at(f, SUM)?;
                f.write_str(")")
            }
        }
    }
}

/// Canonical printer; `parse(&e.to_string(), n) == Ok(e)` for every tree
/// that satisfies the literal invariant.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, SUM)
    }
}

/// A value together with its gradient in `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedValue {
    pub value: f64,
    pub partials: Vec<f64>,
}

impl GradedValue {
    fn constant(value: f64, n: usize) -> Self {
        GradedValue { value, partials: vec![0.0; n] }
    }

    fn map(mut self, value: f64, scale: f64) -> Self {
        self.value = value;
        for p in &mut self.partials {
            *p *= scale;
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    LogOfNonPositive,
    SqrtOfNonPositive,
    DivisionByZero,
    NonFinite,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::LogOfNonPositive => "log of non-positive argument",
            DomainKind::SqrtOfNonPositive => "sqrt of non-positive argument",
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::NonFinite => "non-finite result",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("{kind} in `{node}` (argument {argument})")]
    Domain { kind: DomainKind, node: String, argument: f64 },
    #[error("expression references x{index} but the point has {len} coordinates")]
    Dimension { index: usize, len: usize },
}

fn domain(kind: DomainKind, node: &Expr, argument: f64) -> EvalError {
    EvalError::Domain { kind, node: format!("{node}"), argument }
}

/// Value and exact gradient of `e` at `x`.
pub fn eval_grad(e: &Expr, x: &[f64]) -> Result<GradedValue, EvalError> {
    let n = x.len();
    let out = match e {
        Expr::Var(i) => {
            if *i >= n {
                return Err(EvalError::Dimension { index: i + 1, len: n });
            }
            let mut g = GradedValue::constant(x[*i], n);
            g.partials[*i] = 1.0;
            g
        }
        Expr::Lit(v) => GradedValue::constant(*v, n),
        Expr::Add(a, b) => {
            let (mut a, b) = (eval_grad(a, x)?, eval_grad(b, x)?);
            a.value += b.value;
            math::axpy(1.0, &b.partials, &mut a.partials);
            a
        }
        Expr::Sub(a, b) => {
            let (mut a, b) = (eval_grad(a, x)?, eval_grad(b, x)?);
            a.value -= b.value;
            math::axpy(-1.0, &b.partials, &mut a.partials);
            a
        }
        Expr::Mul(a, b) => {
            let (a, b) = (eval_grad(a, x)?, eval_grad(b, x)?);
            let partials = a.partials.iter().zip(&b.partials).map(|(da, db)| da * b.value + a.value * db).collect();
            GradedValue { value: a.value * b.value, partials }
        }
        Expr::Div(num, den) => {
            let (a, b) = (eval_grad(num, x)?, eval_grad(den, x)?);
            if b.value == 0.0 {
                return Err(domain(DomainKind::DivisionByZero, e, b.value));
            }
            let inv = 1.0 / b.value;
            let q = a.value * inv;
            let partials = a.partials.iter().zip(&b.partials).map(|(da, db)| (da - q * db) * inv).collect();
            GradedValue { value: q, partials }
        }
        Expr::Pow(a, k) => {
            let a = eval_grad(a, x)?;
            if *k == 0 {
                GradedValue::constant(1.0, n)
            } else {
                let lower = math::powi(a.value, k - 1);
                let v = lower * a.value;
                a.map(v, f64::from(*k) * lower)
            }
        }
        Expr::Neg(a) => {
            let a = eval_grad(a, x)?;
            let v = -a.value;
            a.map(v, -1.0)
        }
        Expr::Func(func, arg) => {
            let a = eval_grad(arg, x)?;
            let u = a.value;
            match func {
                Func::Sqrt => {
                    // the derivative blows up at 0, so 0 is outside the C¹ domain
                    if u <= 0.0 {
                        return Err(domain(DomainKind::SqrtOfNonPositive, e, u));
                    }
                    let s = math::sqrt(u);
                    a.map(s, 0.5 / s)
                }
                Func::Exp => {
                    let v = math::exp(u);
                    a.map(v, v)
                }
                Func::Log => {
                    if u <= 0.0 {
                        return Err(domain(DomainKind::LogOfNonPositive, e, u));
                    }
                    a.map(math::ln(u), 1.0 / u)
                }
                Func::Sin => a.map(math::sin(u), math::cos(u)),
                Func::Cos => a.map(math::cos(u), -math::sin(u)),
            }
        }
    };
    if !out.value.is_finite() || out.partials.iter().any(|p| !p.is_finite()) {
        return Err(domain(DomainKind::NonFinite, e, out.value));
    }
    Ok(out)
}

/// Value only; same domain rules as [`eval_grad`].
pub fn eval(e: &Expr, x: &[f64]) -> Result<f64, EvalError> {
    let v = match e {
        Expr::Var(i) => *x.get(*i).ok_or(EvalError::Dimension { index: i + 1, len: x.len() })?,
        Expr::Lit(v) => *v,
        Expr::Add(a, b) => eval(a, x)? + eval(b, x)?,
        Expr::Sub(a, b) => eval(a, x)? - eval(b, x)?,
        Expr::Mul(a, b) => eval(a, x)? * eval(b, x)?,
        Expr::Div(a, b) => {
            let (num, den) = (eval(a, x)?, eval(b, x)?);
            if den == 0.0 {
                return Err(domain(DomainKind::DivisionByZero, e, den));
            }
            num / den
        }
        Expr::Pow(a, k) => math::powi(eval(a, x)?, *k),
        Expr::Neg(a) => -eval(a, x)?,
        Expr::Func(func, arg) => {
            let u = eval(arg, x)?;
            match func {
                Func::Sqrt if u <= 0.0 => return Err(domain(DomainKind::SqrtOfNonPositive, e, u)),
                Func::Sqrt => math::sqrt(u),
                Func::Exp => math::exp(u),
                Func::Log if u <= 0.0 => return Err(domain(DomainKind::LogOfNonPositive, e, u)),
                Func::Log => math::ln(u),
                Func::Sin => math::sin(u),
                Func::Cos => math::cos(u),
            }
        }
    };
    if !v.is_finite() {
        return Err(domain(DomainKind::NonFinite, e, v));
    }
    Ok(v)
}
