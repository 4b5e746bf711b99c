//! A small expression language for scalar functions and planar vector
//! fields over the variables `x`, `y`.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := atom ('^' uint)?
//! atom   := number | 'x' | 'y' | func '(' expr ')' | '(' expr ')' | '-' atom
//! func   := sin | cos | exp | sqrt | log
//! ```
//!
//! Note that `^` binds to the preceding atom, so `-x^2` parses as `(-x)^2`
//! per the grammar above; write `-(x^2)` for the other reading.

use crate::geom::Vec2;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Log,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Log => "log",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Y,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Exponent is a nonnegative integer literal.
    Pow(Box<Expr>, u32),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier {name:?} at offset {offset}")]
    UnknownIdent { offset: usize, name: String },
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("square root of negative value {0}")]
    SqrtNegative(f64),
    #[error("logarithm of non-positive value {0}")]
    LogNonPositive(f64),
    #[error("division by zero")]
    DivisionByZero,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr, ParseError> {
        Parser::new(source).parse()
    }

    pub fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }

    /// Evaluate at `(p.x, p.y)` with deterministic left-to-right order.
    pub fn eval(&self, p: Vec2) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Num(c) => *c,
            Expr::X => p.x,
            Expr::Y => p.y,
            Expr::Add(a, b) => a.eval(p)? + b.eval(p)?,
            Expr::Sub(a, b) => a.eval(p)? - b.eval(p)?,
            Expr::Mul(a, b) => a.eval(p)? * b.eval(p)?,
            Expr::Div(a, b) => {
                let num = a.eval(p)?;
                let den = b.eval(p)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                num / den
            }
            Expr::Pow(a, k) => a.eval(p)?.powi(*k as i32),
            Expr::Neg(a) => -a.eval(p)?,
            Expr::Call(f, a) => {
                let v = a.eval(p)?;
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Sqrt => {
                        if v < 0.0 {
                            return Err(EvalError::SqrtNegative(v));
                        }
                        v.sqrt()
                    }
                    Func::Log => {
                        if v <= 0.0 {
                            return Err(EvalError::LogNonPositive(v));
                        }
                        v.ln()
                    }
                }
            }
        })
    }

    /// Walk all division nodes, reporting denominators that vanish or change
    /// sign on a sampled box. Boundary functions should be polynomial-like
    /// near their zero set; a vanishing denominator there is a modeling bug.
    pub fn lint_division(&self, lo: Vec2, hi: Vec2, n: usize) -> Vec<String> {
        let mut warnings = Vec::new();
        self.lint_rec(lo, hi, n.max(2), &mut warnings);
        warnings
    }

    fn lint_rec(&self, lo: Vec2, hi: Vec2, n: usize, warnings: &mut Vec<String>) {
        match self {
            Expr::Num(_) | Expr::X | Expr::Y => {}
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.lint_rec(lo, hi, n, warnings);
                b.lint_rec(lo, hi, n, warnings);
            }
            Expr::Div(a, b) => {
                a.lint_rec(lo, hi, n, warnings);
                b.lint_rec(lo, hi, n, warnings);
                let mut min_abs = f64::INFINITY;
                let mut has_pos = false;
                let mut has_neg = false;
                for i in 0..n {
                    for j in 0..n {
                        let p = Vec2::new(
                            lo.x + (hi.x - lo.x) * i as f64 / (n - 1) as f64,
                            lo.y + (hi.y - lo.y) * j as f64 / (n - 1) as f64,
                        );
                        if let Ok(v) = b.eval(p) {
                            min_abs = min_abs.min(v.abs());
                            has_pos |= v > 0.0;
                            has_neg |= v < 0.0;
                        }
                    }
                }
                let scale = (hi - lo).norm().max(1.0);
                if has_pos && has_neg || min_abs < 1e-9 * scale {
                    warnings.push(format!(
                        "denominator {b} may vanish on the sampled box (min |den| = {min_abs:.3e})"
                    ));
                }
            }
            Expr::Pow(a, _) | Expr::Neg(a) | Expr::Call(_, a) => a.lint_rec(lo, hi, n, warnings),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) => write!(f, "{c}"),
            Expr::X => write!(f, "x"),
            Expr::Y => write!(f, "y"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, k) => write!(f, "{a}^{k}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn parse(mut self) -> Result<Expr, ParseError> {
        let e = self.expr()?;
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(self.syntax("unexpected trailing input"));
        }
        Ok(e)
    }

    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if op == b'+' {
                Expr::Add(Box::new(acc), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(acc), Box::new(rhs))
            };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            acc = if op == b'*' {
                Expr::Mul(Box::new(acc), Box::new(rhs))
            } else {
                Expr::Div(Box::new(acc), Box::new(rhs))
            };
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == start {
                return Err(self.syntax("expected integer exponent after '^'"));
            }
            let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let k: u32 = digits
                .parse()
                .map_err(|_| self.syntax("exponent out of range"))?;
            return Ok(Expr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.syntax("expected operand")),
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.atom()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.syntax("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(_) => Err(self.syntax("expected operand")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
        {
            self.pos += 1;
        }
        // optional exponent part: e.g. 1.5e-3
        if self.pos < self.src.len() && (self.src[self.pos] | 32) == b'e' {
            let mut probe = self.pos + 1;
            if probe < self.src.len() && (self.src[probe] == b'+' || self.src[probe] == b'-') {
                probe += 1;
            }
            if probe < self.src.len() && self.src[probe].is_ascii_digit() {
                self.pos = probe;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: format!("invalid number {text:?}"),
        })?;
        Ok(Expr::Num(value))
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match name {
            "x" => Ok(Expr::X),
            "y" => Ok(Expr::Y),
            "sin" | "cos" | "exp" | "sqrt" | "log" => {
                let func = match name {
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "exp" => Func::Exp,
                    "sqrt" => Func::Sqrt,
                    _ => Func::Log,
                };
                if self.peek() != Some(b'(') {
                    return Err(self.syntax("expected '(' after function name"));
                }
                self.pos += 1;
                let arg = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.syntax("expected ')'"));
                }
                self.pos += 1;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            _ => Err(ParseError::UnknownIdent {
                offset: start,
                name: name.to_string(),
            }),
        }
    }
}

/// Flat stack program compiled from an [`Expr`]; evaluation-hot paths
/// (trajectory integration) avoid tree walking.
#[derive(Clone, Debug)]
pub struct Program {
    ops: Vec<Op>,
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Num(f64),
    X,
    Y,
    Add,
    Sub,
    Mul,
    Div,
    Pow(u32),
    Neg,
    Call(Func),
}

impl Program {
    pub fn compile(expr: &Expr) -> Program {
        let mut ops = Vec::new();
        fn emit(e: &Expr, ops: &mut Vec<Op>) {
            match e {
                Expr::Num(c) => ops.push(Op::Num(*c)),
                Expr::X => ops.push(Op::X),
                Expr::Y => ops.push(Op::Y),
                Expr::Add(a, b) => {
                    emit(a, ops);
                    emit(b, ops);
                    ops.push(Op::Add);
                }
                Expr::Sub(a, b) => {
                    emit(a, ops);
                    emit(b, ops);
                    ops.push(Op::Sub);
                }
                Expr::Mul(a, b) => {
                    emit(a, ops);
                    emit(b, ops);
                    ops.push(Op::Mul);
                }
                Expr::Div(a, b) => {
                    emit(a, ops);
                    emit(b, ops);
                    ops.push(Op::Div);
                }
                Expr::Pow(a, k) => {
                    emit(a, ops);
                    ops.push(Op::Pow(*k));
                }
                Expr::Neg(a) => {
                    emit(a, ops);
                    ops.push(Op::Neg);
                }
                Expr::Call(f, a) => {
                    emit(a, ops);
                    ops.push(Op::Call(*f));
                }
            }
        }
        emit(expr, &mut ops);
        Program { ops }
    }

    /// Fast evaluation; domain violations produce NaN rather than errors
    /// (integration code treats NaN as leaving the domain of definition).
    pub fn eval(&self, p: Vec2) -> f64 {
        let mut stack = [0.0f64; 64];
        let mut top = 0usize;
        for op in &self.ops {
            match op {
                Op::Num(c) => {
                    stack[top] = *c;
                    top += 1;
                }
                Op::X => {
                    stack[top] = p.x;
                    top += 1;
                }
                Op::Y => {
                    stack[top] = p.y;
                    top += 1;
                }
                Op::Add => {
                    top -= 1;
                    stack[top - 1] += stack[top];
                }
                Op::Sub => {
                    top -= 1;
                    stack[top - 1] -= stack[top];
                }
                Op::Mul => {
                    top -= 1;
                    stack[top - 1] *= stack[top];
                }
                Op::Div => {
                    top -= 1;
                    stack[top - 1] /= stack[top];
                }
                Op::Pow(k) => stack[top - 1] = stack[top - 1].powi(*k as i32),
                Op::Neg => stack[top - 1] = -stack[top - 1],
                Op::Call(f) => {
                    let v = stack[top - 1];
                    stack[top - 1] = match f {
                        Func::Sin => v.sin(),
                        Func::Cos => v.cos(),
                        Func::Exp => v.exp(),
                        Func::Sqrt => v.sqrt(),
                        Func::Log => v.ln(),
                    };
                }
            }
        }
        debug_assert_eq!(top, 1);
        stack[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_disk_boundary() {
        let e = Expr::parse("1 - x^2 - y^2").unwrap();
        assert_eq!(e.eval(Vec2::new(0.0, 0.0)).unwrap(), 1.0);
        assert_eq!(e.eval(Vec2::new(0.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn parses_product() {
        let e = Expr::parse("sin(x)*y").unwrap();
        let v = e.eval(Vec2::new(1.0, 2.0)).unwrap();
        assert!((v - 2.0 * 1f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn syntax_error_offset() {
        match Expr::parse("x +") {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        match Expr::parse("x + z") {
            Err(ParseError::UnknownIdent { offset, name }) => {
                assert_eq!(offset, 4);
                assert_eq!(name, "z");
            }
            other => panic!("expected unknown identifier, got {other:?}"),
        }
    }

    #[test]
    fn exp_constant() {
        let e = Expr::parse("exp(x)").unwrap();
        let v = e.eval(Vec2::new(1.0, 0.0)).unwrap();
        assert!((v - std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        let e = Expr::parse("sqrt(x)").unwrap();
        assert_eq!(
            e.eval(Vec2::new(-1.0, 0.0)),
            Err(EvalError::SqrtNegative(-1.0))
        );
        let e = Expr::parse("log(x)").unwrap();
        assert!(e.eval(Vec2::new(0.0, 0.0)).is_err());
        let e = Expr::parse("1 / x").unwrap();
        assert_eq!(e.eval(Vec2::new(0.0, 0.0)), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn numbers_with_exponents() {
        let e = Expr::parse("1.5e-3 + 2e2").unwrap();
        assert!((e.eval(Vec2::default()).unwrap() - 200.0015).abs() < 1e-12);
    }

    #[test]
    fn pow_binds_to_atom() {
        // Per the grammar, -x^2 is (-x)^2.
        let e = Expr::parse("-x^2").unwrap();
        assert_eq!(e.eval(Vec2::new(3.0, 0.0)).unwrap(), 9.0);
    }

    #[test]
    fn division_lint_flags_vanishing_denominator() {
        let e = Expr::parse("1 / (x - y)").unwrap();
        let warnings = e.lint_division(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0), 16);
        assert_eq!(warnings.len(), 1);
        let safe = Expr::parse("1 / (2 + x)").unwrap();
        assert!(safe
            .lint_division(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0), 16)
            .is_empty());
    }

    #[test]
    fn program_matches_tree_eval() {
        let e = Expr::parse("sin(x)*y + exp(x*y) - (x + 2)^3 / (y + 5)").unwrap();
        let prog = Program::compile(&e);
        for i in 0..20 {
            let p = Vec2::new(-1.0 + 0.1 * i as f64, 0.3 * i as f64 - 2.0);
            let tree = e.eval(p).unwrap();
            assert!((tree - prog.eval(p)).abs() <= 1e-12 * (1.0 + tree.abs()));
        }
    }
}
