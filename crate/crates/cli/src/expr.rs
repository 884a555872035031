//! Arithmetic expressions in one variable `x`.
//!
//! Grammar (`^` binds tighter than unary minus and is right associative):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'x' | func '(' expr (',' expr)? ')' | '(' expr ')'
//! func  := exp | sin | cos | sqrt | pow
//! ```

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cannot parse expression at byte {}: {}",
            self.pos, self.msg
        )
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Sqrt(Box<Expr>),
    /// Only produced by differentiation.
    Ln(Box<Expr>),
}

use Expr::*;

fn b(e: Expr) -> Box<Expr> {
    Box::new(e)
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Num(v) => *v,
            X => x,
            Neg(a) => -a.eval(x),
            Add(a, c) => a.eval(x) + c.eval(x),
            Sub(a, c) => a.eval(x) - c.eval(x),
            Mul(a, c) => a.eval(x) * c.eval(x),
            Div(a, c) => a.eval(x) / c.eval(x),
            Pow(a, c) => a.eval(x).powf(c.eval(x)),
            Exp(a) => a.eval(x).exp(),
            Sin(a) => a.eval(x).sin(),
            Cos(a) => a.eval(x).cos(),
            Sqrt(a) => a.eval(x).sqrt(),
            Ln(a) => a.eval(x).ln(),
        }
    }

    fn is_const(&self) -> bool {
        match self {
            Num(_) => true,
            X => false,
            Neg(a) | Exp(a) | Sin(a) | Cos(a) | Sqrt(a) | Ln(a) => a.is_const(),
            Add(a, c) | Sub(a, c) | Mul(a, c) | Div(a, c) | Pow(a, c) => {
                a.is_const() && c.is_const()
            }
        }
    }

    /// Symbolic derivative with respect to `x`.
    pub fn derivative(&self) -> Expr {
        if self.is_const() {
            return Num(0.0);
        }
        match self {
            Num(_) => Num(0.0),
            X => Num(1.0),
            Neg(a) => neg(a.derivative()),
            Add(a, c) => add(a.derivative(), c.derivative()),
            Sub(a, c) => sub(a.derivative(), c.derivative()),
            Mul(a, c) => add(
                mul(a.derivative(), (**c).clone()),
                mul((**a).clone(), c.derivative()),
            ),
            Div(a, c) => div(
                sub(
                    mul(a.derivative(), (**c).clone()),
                    mul((**a).clone(), c.derivative()),
                ),
                mul((**c).clone(), (**c).clone()),
            ),
            Pow(a, c) if c.is_const() => mul(
                mul((**c).clone(), Pow(a.clone(), b(Num(c.eval(0.0) - 1.0)))),
                a.derivative(),
            ),
            Pow(a, c) => mul(
                self.clone(),
                add(
                    mul(c.derivative(), Ln(a.clone())),
                    div(mul((**c).clone(), a.derivative()), (**a).clone()),
                ),
            ),
            Exp(a) => mul(self.clone(), a.derivative()),
            Sin(a) => mul(Cos(a.clone()), a.derivative()),
            Cos(a) => neg(mul(Sin(a.clone()), a.derivative())),
            Sqrt(a) => div(a.derivative(), mul(Num(2.0), self.clone())),
            Ln(a) => div(a.derivative(), (**a).clone()),
        }
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Num(v) => Num(-v),
        Neg(inner) => *inner,
        a => Neg(b(a)),
    }
}

fn add(a: Expr, c: Expr) -> Expr {
    match (a, c) {
        (Num(x), Num(y)) => Num(x + y),
        (Num(0.0), e) | (e, Num(0.0)) => e,
        (a, c) => Add(b(a), b(c)),
    }
}

fn sub(a: Expr, c: Expr) -> Expr {
    match (a, c) {
        (Num(x), Num(y)) => Num(x - y),
        (e, Num(0.0)) => e,
        (Num(0.0), e) => neg(e),
        (a, c) => Sub(b(a), b(c)),
    }
}

fn mul(a: Expr, c: Expr) -> Expr {
    match (a, c) {
        (Num(x), Num(y)) => Num(x * y),
        (Num(z), _) | (_, Num(z)) if z == 0.0 => Num(0.0),
        (Num(1.0), e) | (e, Num(1.0)) => e,
        (e, Num(k)) => Mul(b(Num(k)), b(e)),
        (a, c) => Mul(b(a), b(c)),
    }
}

fn div(a: Expr, c: Expr) -> Expr {
    match (a, c) {
        (Num(0.0), _) => Num(0.0),
        (e, Num(1.0)) => e,
        (a, c) => Div(b(a), b(c)),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num(v) => write!(f, "{v}"),
            X => write!(f, "x"),
            Neg(a) => write!(f, "(-{a})"),
            Add(a, c) => write!(f, "({a}+{c})"),
            Sub(a, c) => write!(f, "({a}-{c})"),
            Mul(a, c) => write!(f, "({a}*{c})"),
            Div(a, c) => write!(f, "({a}/{c})"),
            Pow(a, c) => write!(f, "pow({a},{c})"),
            Exp(a) => write!(f, "exp({a})"),
            Sin(a) => write!(f, "sin({a})"),
            Cos(a) => write!(f, "cos({a})"),
            Sqrt(a) => write!(f, "sqrt({a})"),
            Ln(a) => write!(f, "ln({a})"),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> ParseError {
        ParseError {
            pos: self.pos,
            msg: msg.to_string(),
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Add(b(lhs), b(self.term()?));
            } else if self.eat(b'-') {
                lhs = Sub(b(lhs), b(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Mul(b(lhs), b(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Div(b(lhs), b(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(Neg(b(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            return Ok(Pow(b(base), b(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
                if name == "x" {
                    return Ok(X);
                }
                let unary: fn(Box<Expr>) -> Expr = match name {
                    "exp" => Exp,
                    "sin" => Sin,
                    "cos" => Cos,
                    "sqrt" => Sqrt,
                    "pow" => {
                        self.expect(b'(')?;
                        let a = self.expr()?;
                        self.expect(b',')?;
                        let c = self.expr()?;
                        self.expect(b')')?;
                        return Ok(Pow(b(a), b(c)));
                    }
                    _ => {
                        self.pos = start;
                        return Err(self.error(&format!("unknown identifier '{name}'")));
                    }
                };
                self.expect(b'(')?;
                let a = self.expr()?;
                self.expect(b')')?;
                Ok(unary(b(a)))
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if self.pos == exp_start {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        text.parse().map(Num).map_err(|_| ParseError {
            pos: start,
            msg: format!("bad number '{text}'"),
        })
    }
}
