//! A tiny arithmetic expression language for problem files.
//!
//! Grammar (usual precedence, `^` binds tighter than unary minus on its
//! left operand and is right associative):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Functions: `abs sign min max sin cos pow sqrt exp` (`sign(0) = 0`). Constant: `pi`.
//! Variables are resolved to slots at compile time, so evaluation is a walk
//! over a small tree with no string lookups.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Sign,
    Min,
    Max,
    Sin,
    Cos,
    Pow,
    Sqrt,
    Exp,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            "min" => Func::Min,
            "max" => Func::Max,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "pow" => Func::Pow,
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            _ => return None,
        })
    }

    fn arity_ok(self, n: usize) -> bool {
        match self {
            Func::Min | Func::Max => n >= 2,
            Func::Pow => n == 2,
            _ => n == 1,
        }
    }
}

impl Expr {
    pub fn eval(&self, slots: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => slots[*i],
            Expr::Neg(e) => -e.eval(slots),
            Expr::Add(a, b) => a.eval(slots) + b.eval(slots),
            Expr::Sub(a, b) => a.eval(slots) - b.eval(slots),
            Expr::Mul(a, b) => a.eval(slots) * b.eval(slots),
            Expr::Div(a, b) => a.eval(slots) / b.eval(slots),
            Expr::Pow(a, b) => pow(a.eval(slots), b.eval(slots)),
            Expr::Call(f, args) => {
                let v = |i: usize| args[i].eval(slots);
                match f {
                    Func::Abs => v(0).abs(),
                    Func::Sign => {
                        let x = v(0);
                        if x == 0.0 {
                            0.0
                        } else {
                            x.signum()
                        }
                    }
                    Func::Sin => v(0).sin(),
                    Func::Cos => v(0).cos(),
                    Func::Sqrt => v(0).sqrt(),
                    Func::Exp => v(0).exp(),
                    Func::Pow => pow(v(0), v(1)),
                    Func::Min => args
                        .iter()
                        .map(|a| a.eval(slots))
                        .fold(f64::INFINITY, f64::min),
                    Func::Max => args
                        .iter()
                        .map(|a| a.eval(slots))
                        .fold(f64::NEG_INFINITY, f64::max),
                }
            }
        }
    }
}

fn pow(base: f64, exponent: f64) -> f64 {
    if exponent.fract() == 0.0 && exponent.abs() <= 64.0 {
        base.powi(exponent as i32)
    } else {
        base.powf(exponent)
    }
}

/// Compiles `source`; `resolve` maps variable names to slot indices.
pub fn compile(source: &str, resolve: &dyn Fn(&str) -> Option<usize>) -> Result<Expr> {
    let tokens = tokenize(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        source,
        resolve,
    };
    let expr = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        let (_, at) = parser.tokens[parser.pos];
        return Err(Error::parse(
            format!("column {}", at + 1),
            format!("unexpected trailing input in `{source}`"),
        ));
    }
    Ok(expr)
}

/// Resolver for the standard state/control naming: `x1..xn`, `a1..am`.
/// Slots are laid out as `[x1..xn, a1..am]`.
pub fn state_control_resolver(n: usize, m: usize) -> impl Fn(&str) -> Option<usize> {
    move |name: &str| {
        let (prefix, rest) = name.split_at(1);
        let index: usize = rest.parse().ok()?;
        match prefix {
            "x" if (1..=n).contains(&index) => Some(index - 1),
            "a" if (1..=m).contains(&index) => Some(n + index - 1),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(source: &str) -> Result<Vec<(Token, usize)>> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text.parse::<f64>().map_err(|_| {
                Error::parse(
                    format!("column {}", start + 1),
                    format!("bad number `{text}`"),
                )
            })?;
            out.push((Token::Num(value), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Token::Ident(chars[start..i].iter().collect()), start));
        } else if "+-*/^(),".contains(c) {
            out.push((Token::Op(c), i));
            i += 1;
        } else {
            return Err(Error::parse(
                format!("column {}", i + 1),
                format!("unexpected character `{c}`"),
            ));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    source: &'a str,
    resolve: &'a dyn Fn(&str) -> Option<usize>,
}

impl Parser<'_> {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some((Token::Op(c), _)) => Some(*c),
            _ => None,
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        let column = self
            .tokens
            .get(self.pos)
            .map(|(_, at)| at + 1)
            .unwrap_or(self.source.chars().count() + 1);
        Error::parse(
            format!("column {column}"),
            format!("{} in `{}`", message.into(), self.source),
        )
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected `{op}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let Some((token, _)) = self.tokens.get(self.pos).cloned() else {
            return Err(self.error("unexpected end of expression"));
        };
        self.pos += 1;
        match token {
            Token::Num(v) => Ok(Expr::Const(v)),
            Token::Op('(') => {
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Token::Ident(name) => {
                if self.peek_op() == Some('(') {
                    let func = Func::lookup(&name).ok_or_else(|| {
                        self.pos -= 1;
                        self.error(format!("unknown function `{name}`"))
                    })?;
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while self.peek_op() == Some(',') {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    if !func.arity_ok(args.len()) {
                        return Err(self.error(format!(
                            "wrong number of arguments ({}) for `{name}`",
                            args.len()
                        )));
                    }
                    Ok(Expr::Call(func, args))
                } else if name == "pi" {
                    Ok(Expr::Const(std::f64::consts::PI))
                } else if let Some(slot) = (self.resolve)(&name) {
                    Ok(Expr::Var(slot))
                } else {
                    self.pos -= 1;
                    Err(self.error(format!("unknown variable `{name}`")))
                }
            }
            Token::Op(c) => {
                self.pos -= 1;
                Err(self.error(format!("unexpected `{c}`")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, slots: &[f64]) -> f64 {
        let resolve = state_control_resolver(2, 1);
        compile(src, &resolve).unwrap().eval(slots)
    }

    #[test]
    fn precedence_and_functions() {
        let s = [1.0, -2.0, 3.0];
        assert_eq!(eval("1 + 2 * 3", &s), 7.0);
        assert_eq!(eval("-x1^2", &s), -1.0);
        assert_eq!(eval("2^3^2", &s), 512.0);
        assert_eq!(eval("abs(x1) + abs(x2)", &s), 3.0);
        assert_eq!(eval("x1*x1 + x2*x2 + abs(a1)", &s), 8.0);
        assert_eq!(eval("max(x1, x2, a1) - min(x1, x2)", &s), 5.0);
        assert_eq!(eval("pow(a1, 2) / 3", &s), 3.0);
        assert!((eval("sin(pi/2) + cos(0)", &s) - 2.0).abs() < 1e-15);
        assert_eq!(eval("1.5e1", &s), 15.0);
        assert_eq!(eval("sign(x2) + sign(x1 - 1) + sign(a1)", &s), 0.0);
    }

    #[test]
    fn errors_carry_columns() {
        let resolve = state_control_resolver(1, 1);
        let err = compile("x1 + y", &resolve).unwrap_err();
        assert!(err.to_string().contains("column 6"), "{err}");
        assert!(compile("x1 +", &resolve).is_err());
        assert!(compile("foo(x1)", &resolve).is_err());
        assert!(compile("min(x1)", &resolve).is_err());
        assert!(compile("(x1", &resolve).is_err());
        assert!(compile("x1 $ 2", &resolve).is_err());
        assert!(compile("x2", &resolve).is_err());
    }
}
