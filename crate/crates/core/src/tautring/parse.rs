//! Recursive-descent parser for ring expressions:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := 'x' INT | 'D(' INT ',' INT ')' | 'S(' INT ',' INT ')' | RATIONAL | '(' expr ')'
//! ```
//!
//! Whitespace is ignored between tokens. Error columns are 1-based.

use num_bigint::BigInt;
use thiserror::Error;

use crate::exactfield::Rational;

#[derive(Clone, Debug, PartialEq)]
pub enum RingExpr {
    Point(usize),
    Diagonal(usize, usize),
    Scorza(usize, usize),
    Number(Rational),
    Add(Box<RingExpr>, Box<RingExpr>),
    Sub(Box<RingExpr>, Box<RingExpr>),
    Mul(Box<RingExpr>, Box<RingExpr>),
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("syntax error at column {column}: {message}")]
pub struct ParseError {
    pub column: usize,
    pub message: String,
}

pub fn parse_ring_expr(text: &str) -> Result<RingExpr, ParseError> {
    let mut p = Parser { chars: text.chars().collect(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error(format!("unexpected '{}'", p.chars[p.pos])));
    }
    Ok(e)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { column: self.pos + 1, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(d) if d == c => {
                self.pos += 1;
                Ok(())
            }
            Some(d) => Err(self.error(format!("expected '{c}', found '{d}'"))),
            None => Err(self.error(format!("expected '{c}', found end of input"))),
        }
    }

    fn expr(&mut self) -> Result<RingExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    lhs = RingExpr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some('-') => {
                    self.pos += 1;
                    lhs = RingExpr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<RingExpr, ParseError> {
        let mut lhs = self.factor()?;
        while self.peek() == Some('*') {
            self.pos += 1;
            lhs = RingExpr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<RingExpr, ParseError> {
        match self.peek() {
            Some('x') => {
                self.pos += 1;
                Ok(RingExpr::Point(self.index()?))
            }
            Some(c @ ('D' | 'S')) => {
                self.pos += 1;
                self.expect('(')?;
                let i = self.index()?;
                self.expect(',')?;
                let j = self.index()?;
                self.expect(')')?;
                Ok(if c == 'D' { RingExpr::Diagonal(i, j) } else { RingExpr::Scorza(i, j) })
            }
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                if self.peek() == Some('/') {
                    self.pos += 1;
                    let at = self.pos;
                    let d = self.integer()?;
                    if d == BigInt::from(0) {
                        self.pos = at;
                        return Err(self.error("zero denominator"));
                    }
                    Ok(RingExpr::Number(Rational::new(n, d)))
                } else {
                    Ok(RingExpr::Number(Rational::from_integer(n)))
                }
            }
            Some(c) => Err(self.error(format!("unexpected '{c}'"))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn digits(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(char::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(match self.chars.get(self.pos) {
                Some(c) => self.error(format!("expected a number, found '{c}'")),
                None => self.error("expected a number, found end of input"),
            });
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn integer(&mut self) -> Result<BigInt, ParseError> {
        Ok(self.digits()?.parse().expect("digits parse as an integer"))
    }

    fn index(&mut self) -> Result<usize, ParseError> {
        let start = self.pos;
        let s = self.digits()?;
        s.parse().map_err(|_| ParseError { column: start + 1, message: format!("index {s} too large") })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_grouping() {
        let e = parse_ring_expr("x1 + 2*D(1,2)").unwrap();
        let RingExpr::Add(a, b) = e else { panic!("expected a sum") };
        assert_eq!(*a, RingExpr::Point(1));
        assert!(matches!(*b, RingExpr::Mul(..)));
        let g = parse_ring_expr("(x1 - x2) * S(1, 2)").unwrap();
        assert!(matches!(g, RingExpr::Mul(..)));
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_ring_expr("3/4").unwrap(), RingExpr::Number(crate::exactfield::ratio(3, 4)));
        assert_eq!(parse_ring_expr("1/0").unwrap_err().column, 3);
    }

    #[test]
    fn error_columns() {
        assert_eq!(parse_ring_expr("D(1,2").unwrap_err().column, 6);
        assert_eq!(parse_ring_expr("x1 +").unwrap_err().column, 5);
        assert_eq!(parse_ring_expr("x1 ) ").unwrap_err().column, 4);
        assert_eq!(parse_ring_expr("y2").unwrap_err().column, 1);
        assert_eq!(parse_ring_expr("xa").unwrap_err().column, 2);
    }
}
