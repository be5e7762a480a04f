//! Expression text grammar used by manifests.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | '+' unary | power
//! power  := atom ('^' '-'? integer)?
//! atom   := integer | 'x'k | 'p'k | '(' expr ')'
//! ```
//!
//! Rationals are written as quotients of integers, e.g. `3/4*x1`.

use num_bigint::BigInt;
use num_rational::BigRational;

use super::base::BaseScalar;
use super::fiber::FiberScalar;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(BigRational),
    X(usize),
    P(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

struct Parser<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    dim: usize,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, dim: usize) -> Self {
        let chars = src
            .chars()
            .enumerate()
            .filter(|(_, c)| !c.is_whitespace())
            .collect();
        Parser {
            chars,
            pos: 0,
            dim,
            src,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn col(&self) -> usize {
        self.chars
            .get(self.pos)
            .map(|&(i, _)| i + 1)
            .unwrap_or_else(|| self.src.chars().count() + 1)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: 1,
            col: self.col(),
            msg: msg.into(),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                '+' => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                '-' => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.peek() {
            match c {
                '*' => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                '/' => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() != Some('^') {
            return Ok(base);
        }
        self.pos += 1;
        let neg = if self.peek() == Some('-') {
            self.pos += 1;
            true
        } else {
            false
        };
        let start = self.col();
        let digits = self.digits();
        if digits.is_empty() {
            return Err(self.err("expected integer exponent"));
        }
        let e: i32 = digits.parse().map_err(|_| Error::Parse {
            line: 1,
            col: start,
            msg: "exponent out of range".into(),
        })?;
        Ok(Expr::Pow(Box::new(base), if neg { -e } else { e }))
    }

    fn digits(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                s.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        s
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let d = self.digits();
                let v: BigInt = d.parse().map_err(|_| self.err("bad integer"))?;
                Ok(Expr::Num(BigRational::from_integer(v)))
            }
            Some(c @ ('x' | 'p')) => {
                let col = self.col();
                self.pos += 1;
                let d = self.digits();
                let k: usize = d.parse().map_err(|_| Error::Parse {
                    line: 1,
                    col,
                    msg: format!("expected index after '{c}'"),
                })?;
                if k == 0 || k > self.dim {
                    return Err(Error::Parse {
                        line: 1,
                        col,
                        msg: format!("{c}{k} is outside dimension {}", self.dim),
                    });
                }
                Ok(if c == 'x' {
                    Expr::X(k - 1)
                } else {
                    Expr::P(k - 1)
                })
            }
            Some(c) => Err(self.err(format!("unexpected character '{c}'"))),
            None => Err(self.err("unexpected end of expression")),
        }
    }
}

/// Parses an expression over `x1..x{dim}` and `p1..p{dim}`.
pub fn parse_expr(src: &str, dim: usize) -> Result<Expr> {
    let mut p = Parser::new(src, dim);
    let e = p.expr()?;
    if p.pos < p.chars.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

/// Reduces an expression tree to canonical form.
pub fn canonicalize(e: &Expr) -> Result<FiberScalar> {
    Ok(match e {
        Expr::Num(c) => FiberScalar::from_base(BaseScalar::constant(c.clone())),
        Expr::X(i) => FiberScalar::coord(*i),
        Expr::P(i) => FiberScalar::momentum(*i),
        Expr::Neg(a) => canonicalize(a)?.neg(),
        Expr::Add(a, b) => canonicalize(a)?.add(&canonicalize(b)?),
        Expr::Sub(a, b) => canonicalize(a)?.sub(&canonicalize(b)?),
        Expr::Mul(a, b) => canonicalize(a)?.mul(&canonicalize(b)?),
        Expr::Div(a, b) => {
            let den = canonicalize(b)?.as_base().ok_or(Error::NotPolynomialInP)?;
            canonicalize(a)?.mul_base(&den.recip()?)
        }
        Expr::Pow(a, k) => {
            let base = canonicalize(a)?;
            if *k >= 0 {
                base.pow(*k as u32)
            } else {
                let b = base.as_base().ok_or(Error::NotPolynomialInP)?;
                FiberScalar::from_base(b.pow(*k)?)
            }
        }
    })
}

/// Parses and canonicalizes an expression that may involve momenta.
pub fn parse_fiber(src: &str, dim: usize) -> Result<FiberScalar> {
    canonicalize(&parse_expr(src, dim)?)
}

/// Parses and canonicalizes an expression in the base coordinates only.
pub fn parse_base(src: &str, dim: usize) -> Result<BaseScalar> {
    parse_fiber(src, dim)?
        .as_base()
        .ok_or_else(|| Error::Parse {
            line: 1,
            col: 1,
            msg: "momenta are not allowed here".into(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commutativity_cancels() {
        assert!(parse_base("x1*x2 - x2*x1", 2).unwrap().is_zero());
    }

    #[test]
    fn gcd_reduction() {
        assert_eq!(parse_base("x1^2/x1", 1).unwrap(), BaseScalar::var(0));
    }

    #[test]
    fn reciprocal_sum() {
        let lhs = parse_base("1/(1+x1) + 1/(1-x1)", 1).unwrap();
        let rhs = parse_base("2/(1 - x1^2)", 1).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn negative_exponent() {
        assert_eq!(
            parse_base("x1^-2", 1).unwrap(),
            parse_base("1/(x1*x1)", 1).unwrap()
        );
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        assert_eq!(parse_base("-x1^2", 1).unwrap(), parse_base("0 - x1*x1", 1).unwrap());
    }

    #[test]
    fn division_by_zero_is_an_error() {
        assert!(matches!(
            parse_base("1/(x1 - x1)", 1),
            Err(Error::DivisionByZero)
        ));
    }

    #[test]
    fn reports_column() {
        match parse_expr("x1 + $", 2) {
            Err(Error::Parse { col, .. }) => assert_eq!(col, 6),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_expr("x3", 2).is_err());
        assert!(parse_expr("(x1", 2).is_err());
    }

    #[test]
    fn display_roundtrip() {
        for src in [
            "1/(1+x1) + 3/4*x2^2",
            "x1*x2/(x1 - 2*x2)",
            "-x1/x2",
            "(x1+1)^-3",
            "p1*p2*x1 - 1/2*p1 + x2/(x1+1)*p2^2 + 7",
        ] {
            let v = parse_fiber(src, 2).unwrap();
            let again = parse_fiber(&v.to_string(), 2).unwrap();
            assert_eq!(v, again, "{src} -> {v}");
        }
    }
}
