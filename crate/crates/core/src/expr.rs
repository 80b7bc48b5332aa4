//! Closed-form coefficient expressions in `x` and `y`.
//!
//! Grammar: `+ - * / ^`, parentheses, numbers, `x`, `y`, `i`, `pi`, `e`,
//! named parameters and the functions `sqrt exp log sin cos sinh cosh`.
//! `^` is right-associative and binds tighter than unary minus. Values are
//! complex throughout (principal branches). Expressions differentiate
//! symbolically, so fields built from them carry exact derivatives.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::field::{Codomain, Domain, FieldFn, FieldRef, ScalarField, C64, I};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }

    fn apply(self, v: C64) -> C64 {
        match self {
            Func::Sqrt => v.sqrt(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(C64),
    X,
    Y,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Powi(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

fn c(re: f64) -> Expr {
    Expr::Const(C64::new(re, 0.0))
}

fn integer_exponent(v: C64) -> Option<i32> {
    (v.im == 0.0 && v.re.fract() == 0.0 && v.re.abs() <= 64.0).then_some(v.re as i32)
}

// Simplifying constructors.

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(p), Expr::Const(q)) => Expr::Const(p + q),
        (Expr::Const(p), e) | (e, Expr::Const(p)) if p == C64::new(0.0, 0.0) => e,
        (a, b) => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(p), Expr::Const(q)) => Expr::Const(p - q),
        (e, Expr::Const(q)) if q == C64::new(0.0, 0.0) => e,
        (Expr::Const(p), e) if p == C64::new(0.0, 0.0) => neg(e),
        (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    match (a, b) {
        (Expr::Const(p), Expr::Const(q)) => Expr::Const(p * q),
        (Expr::Const(p), _) | (_, Expr::Const(p)) if p == zero => Expr::Const(zero),
        (Expr::Const(p), e) | (e, Expr::Const(p)) if p == one => e,
        (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(p), Expr::Const(q)) => Expr::Const(p / q),
        (Expr::Const(p), _) if p == C64::new(0.0, 0.0) => Expr::Const(p),
        (e, Expr::Const(q)) if q == C64::new(1.0, 0.0) => e,
        (a, b) => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(p) => Expr::Const(-p),
        Expr::Neg(e) => *e,
        e => Expr::Neg(Box::new(e)),
    }
}

fn powi(a: Expr, k: i32) -> Expr {
    match (a, k) {
        (_, 0) => c(1.0),
        (e, 1) => e,
        (Expr::Const(p), k) => Expr::Const(p.powi(k)),
        (e, k) => Expr::Powi(Box::new(e), k),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match b {
        Expr::Const(q) => match integer_exponent(q) {
            Some(k) => powi(a, k),
            None => match a {
                Expr::Const(p) => Expr::Const(p.powc(q)),
                a => Expr::Pow(Box::new(a), Box::new(Expr::Const(q))),
            },
        },
        b => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    match a {
        Expr::Const(p) => Expr::Const(f.apply(p)),
        a => Expr::Call(f, Box::new(a)),
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        Self::parse_with(src, &HashMap::new())
    }

    /// Parses with named real parameters substituted as constants.
    pub fn parse_with(src: &str, params: &HashMap<String, f64>) -> Result<Expr> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0, params };
        let e = p.expr()?;
        match p.peek() {
            Tok { kind: Kind::End, .. } => Ok(e),
            t => Err(t.error(format!("unexpected {}", t.kind))),
        }
    }

    pub fn eval(&self, z: C64) -> C64 {
        match self {
            Expr::Const(v) => *v,
            Expr::X => C64::new(z.re, 0.0),
            Expr::Y => C64::new(z.im, 0.0),
            Expr::Add(a, b) => a.eval(z) + b.eval(z),
            Expr::Sub(a, b) => a.eval(z) - b.eval(z),
            Expr::Mul(a, b) => a.eval(z) * b.eval(z),
            Expr::Div(a, b) => a.eval(z) / b.eval(z),
            Expr::Neg(a) => -a.eval(z),
            Expr::Pow(a, b) => {
                let base = a.eval(z);
                let e = b.eval(z);
                if e.im == 0.0 && base.im == 0.0 && base.re > 0.0 {
                    C64::new(base.re.powf(e.re), 0.0)
                } else {
                    base.powc(e)
                }
            }
            Expr::Powi(a, k) => a.eval(z).powi(*k),
            Expr::Call(f, a) => f.apply(a.eval(z)),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::X | Expr::Y => false,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.is_constant() && b.is_constant()
            }
            Expr::Neg(a) | Expr::Powi(a, _) | Expr::Call(_, a) => a.is_constant(),
        }
    }

    pub fn diff(&self, v: Var) -> Expr {
        match self {
            Expr::Const(_) => c(0.0),
            Expr::X => c(if v == Var::X { 1.0 } else { 0.0 }),
            Expr::Y => c(if v == Var::Y { 1.0 } else { 0.0 }),
            Expr::Add(a, b) => add(a.diff(v), b.diff(v)),
            Expr::Sub(a, b) => sub(a.diff(v), b.diff(v)),
            Expr::Mul(a, b) => add(mul(a.diff(v), (**b).clone()), mul((**a).clone(), b.diff(v))),
            Expr::Div(a, b) => {
                let num = sub(mul(a.diff(v), (**b).clone()), mul((**a).clone(), b.diff(v)));
                div(num, powi((**b).clone(), 2))
            }
            Expr::Neg(a) => neg(a.diff(v)),
            Expr::Powi(a, k) => mul(mul(c(*k as f64), powi((**a).clone(), k - 1)), a.diff(v)),
            Expr::Pow(a, b) => {
                if b.is_constant() {
                    let e = b.eval(C64::new(0.0, 0.0));
                    let lowered = pow((**a).clone(), Expr::Const(e - 1.0));
                    mul(mul(Expr::Const(e), lowered), a.diff(v))
                } else {
                    // a^b (b' ln a + b a'/a)
                    let t1 = mul(b.diff(v), call(Func::Log, (**a).clone()));
                    let t2 = div(mul((**b).clone(), a.diff(v)), (**a).clone());
                    mul(self.clone(), add(t1, t2))
                }
            }
            Expr::Call(f, a) => {
                let inner = (**a).clone();
                let outer = match f {
                    Func::Sqrt => div(c(0.5), call(Func::Sqrt, inner)),
                    Func::Exp => call(Func::Exp, inner),
                    Func::Log => div(c(1.0), inner),
                    Func::Sin => call(Func::Cos, inner),
                    Func::Cos => neg(call(Func::Sin, inner)),
                    Func::Sinh => call(Func::Cosh, inner),
                    Func::Cosh => call(Func::Sinh, inner),
                };
                mul(outer, a.diff(v))
            }
        }
    }

    /// `dz = d/dx - i d/dy`.
    pub fn dz(&self) -> Expr {
        sub(self.diff(Var::X), mul(Expr::Const(I), self.diff(Var::Y)))
    }

    /// `dzbar = d/dx + i d/dy`.
    pub fn dzbar(&self) -> Expr {
        add(self.diff(Var::X), mul(Expr::Const(I), self.diff(Var::Y)))
    }

    pub fn field(&self, domain: Domain, codomain: Codomain) -> ScalarField {
        ScalarField::new(domain, codomain, ExprField::new(self.clone()))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) | Expr::Powi(..) => 4,
            Expr::Const(v) if v.im != 0.0 || v.re < 0.0 => 1,
            _ => 5,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Const(v) if v.im == 0.0 => write!(f, "{}", v.re),
            Expr::Const(v) if v.re == 0.0 => write!(f, "{}*i", v.im),
            Expr::Const(v) => write!(f, "{}+{}*i", v.re, v.im),
            Expr::X => f.write_str("x"),
            Expr::Y => f.write_str("y"),
            Expr::Add(a, b) => {
                wrap(f, a, 1)?;
                f.write_str(" + ")?;
                wrap(f, b, 2)
            }
            Expr::Sub(a, b) => {
                wrap(f, a, 1)?;
                f.write_str(" - ")?;
                wrap(f, b, 2)
            }
            Expr::Mul(a, b) => {
                wrap(f, a, 2)?;
                f.write_str("*")?;
                wrap(f, b, 3)
            }
            Expr::Div(a, b) => {
                wrap(f, a, 2)?;
                f.write_str("/")?;
                wrap(f, b, 3)
            }
            Expr::Neg(a) => {
                f.write_str("-")?;
                wrap(f, a, 4)
            }
            Expr::Pow(a, b) => {
                wrap(f, a, 5)?;
                f.write_str("^")?;
                wrap(f, b, 4)
            }
            Expr::Powi(a, k) => {
                wrap(f, a, 5)?;
                if *k < 0 {
                    write!(f, "^({k})")
                } else {
                    write!(f, "^{k}")
                }
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// Field backed by an expression; derivative fields are built lazily and cached.
pub struct ExprField {
    expr: Expr,
    dz: OnceLock<FieldRef>,
    dzbar: OnceLock<FieldRef>,
}

impl ExprField {
    pub fn new(expr: Expr) -> Self {
        ExprField { expr, dz: OnceLock::new(), dzbar: OnceLock::new() }
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }
}

impl FieldFn for ExprField {
    fn value(&self, z: C64) -> C64 {
        self.expr.eval(z)
    }

    fn dz(&self) -> Option<FieldRef> {
        Some(self.dz.get_or_init(|| Arc::new(ExprField::new(self.expr.dz()))).clone())
    }

    fn dzbar(&self) -> Option<FieldRef> {
        Some(self.dzbar.get_or_init(|| Arc::new(ExprField::new(self.expr.dzbar()))).clone())
    }

    fn as_constant(&self) -> Option<C64> {
        match self.expr {
            Expr::Const(v) => Some(v),
            _ => None,
        }
    }
}

// Lexer and recursive-descent parser.

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Num(v) => write!(f, "number {v}"),
            Kind::Ident(s) => write!(f, "identifier '{s}'"),
            Kind::Op(ch) => write!(f, "'{ch}'"),
            Kind::End => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Tok {
    kind: Kind,
    line: usize,
    column: usize,
}

impl Tok {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse { line: self.line, column: self.column, message: message.into() }
    }
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1, 1);
    let mut k = 0;
    while k < chars.len() {
        let ch = chars[k];
        let (l0, c0) = (line, col);
        if ch == '\n' {
            line += 1;
            col = 1;
            k += 1;
            continue;
        }
        if ch.is_whitespace() {
            col += 1;
            k += 1;
            continue;
        }
        let start = k;
        if ch.is_ascii_digit() || ch == '.' {
            while k < chars.len() && (chars[k].is_ascii_digit() || chars[k] == '.') {
                k += 1;
            }
            if k < chars.len() && (chars[k] == 'e' || chars[k] == 'E') {
                let mut j = k + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    k = j;
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                }
            }
            let text: String = chars[start..k].iter().collect();
            let v = text.parse::<f64>().map_err(|_| Error::Parse {
                line: l0,
                column: c0,
                message: format!("malformed number '{text}'"),
            })?;
            out.push(Tok { kind: Kind::Num(v), line: l0, column: c0 });
        } else if ch.is_alphabetic() || ch == '_' {
            while k < chars.len() && (chars[k].is_alphanumeric() || chars[k] == '_') {
                k += 1;
            }
            let text: String = chars[start..k].iter().collect();
            out.push(Tok { kind: Kind::Ident(text), line: l0, column: c0 });
        } else if "+-*/^()".contains(ch) {
            k += 1;
            out.push(Tok { kind: Kind::Op(ch), line: l0, column: c0 });
        } else {
            return Err(Error::Parse { line: l0, column: c0, message: format!("unexpected character '{ch}'") });
        }
        col += k - start;
    }
    out.push(Tok { kind: Kind::End, line, column: col });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Tok>,
    pos: usize,
    params: &'a HashMap<String, f64>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Tok {
        let t = self.tokens[self.pos].clone();
        if t.kind != Kind::End {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek().kind == Kind::Op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.eat(op) {
            Ok(())
        } else {
            let t = self.peek();
            Err(t.error(format!("expected '{op}', found {}", t.kind)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = add(lhs, self.term()?);
            } else if self.eat('-') {
                lhs = sub(lhs, self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = mul(lhs, self.unary()?);
            } else if self.eat('/') {
                lhs = div(lhs, self.unary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(neg(self.unary()?));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            let exponent = self.unary()?;
            return Ok(pow(base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let t = self.next();
        match &t.kind {
            Kind::Num(v) => Ok(c(*v)),
            Kind::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Kind::Ident(name) => {
                if let Some(f) = Func::from_name(name) {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(call(f, arg));
                }
                match name.as_str() {
                    "x" => Ok(Expr::X),
                    "y" => Ok(Expr::Y),
                    "i" => Ok(Expr::Const(I)),
                    "pi" => Ok(c(std::f64::consts::PI)),
                    "e" => Ok(c(std::f64::consts::E)),
                    other => match self.params.get(other) {
                        Some(v) => Ok(c(*v)),
                        None => Err(t.error(format!("unknown identifier '{other}'"))),
                    },
                }
            }
            other => Err(t.error(format!("unexpected {other}"))),
        }
    }
}
