//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr    := ['-'] term { ('+' | '-') term }
//! term    := factor { ('*' | '/') factor }
//! factor  := base ['^' ['-'] digits]
//! base    := number | 'x' | func '(' expr ')' | symbol | '(' expr ')'
//! symbol  := ident { prime } [ '(' 'x' ')' ]
//! ident   := 'a' digits | 'p' | 'q'
//! func    := 'sin' | 'cos' | 'tan' | 'exp' | 'log' | 'Int'
//! number  := digits [ '.' digits ]
//! ```
//!
//! Primes are ASCII `'` or U+2032; whitespace separates tokens freely.
//! Decimal literals become exact rationals (`1.25` is 5/4). The only
//! constant folding performed is a leading minus on a constant and a
//! constant divided by a constant, so printed canonical forms parse back
//! to identical trees.

use super::{neg, Expr, Func, Rat};
use num_bigint::BigInt;
use num_traits::Zero;
use std::fmt;

/// Syntax error with the byte offset of the offending character.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl std::error::Error for ParseError {}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at offset {}: {}", self.offset, self.message)
    }
}

pub fn parse(input: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        chars: input.char_indices().collect(),
        pos: 0,
        end: input.len(),
    };
    let e = p.expr()?;
    p.skip_ws();
    if let Some((off, c)) = p.peek() {
        return Err(ParseError {
            offset: off,
            message: format!("unexpected `{c}` after expression"),
        });
    }
    Ok(e)
}

struct Parser {
    chars: Vec<(usize, char)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<(usize, char)> {
        self.chars.get(self.pos).copied()
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |(o, _)| o)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some((_, c)) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if matches!(self.peek(), Some((_, got)) if got == c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        self.skip_ws();
        match self.peek() {
            Some((_, got)) if got == c => {
                self.pos += 1;
                Ok(())
            }
            Some((off, got)) => Err(ParseError {
                offset: off,
                message: format!("expected `{c}`, found `{got}`"),
            }),
            None => Err(ParseError {
                offset: self.end,
                message: format!("expected `{c}`, found end of input"),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let negated = self.eat('-');
        let mut acc = self.term()?;
        if negated {
            acc = neg(acc);
        }
        loop {
            self.skip_ws();
            match self.peek() {
                Some((_, '+')) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = Expr::Add(Box::new(acc), Box::new(rhs));
                }
                Some((_, '-')) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = Expr::Sub(Box::new(acc), Box::new(rhs));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some((_, '*')) => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    acc = Expr::Mul(Box::new(acc), Box::new(rhs));
                }
                Some((off, '/')) => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    acc = match (acc, rhs) {
                        (Expr::Const(a), Expr::Const(b)) => {
                            if b.is_zero() {
                                return Err(ParseError {
                                    offset: off,
                                    message: "division by zero constant".into(),
                                });
                            }
                            Expr::Const(a / b)
                        }
                        (a, b) => Expr::Div(Box::new(a), Box::new(b)),
                    };
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        self.skip_ws();
        if matches!(self.peek(), Some((_, '^'))) {
            self.pos += 1;
            self.skip_ws();
            let negative = self.eat('-');
            let (off, digits) = self.digits("integer exponent")?;
            let mut value: i64 = 0;
            for d in digits.bytes() {
                value = value * 10 + i64::from(d - b'0');
                if value > i64::from(i32::MAX) {
                    return Err(ParseError {
                        offset: off,
                        message: "exponent out of range".into(),
                    });
                }
            }
            let exp = if negative { -(value as i32) } else { value as i32 };
            return Ok(Expr::Pow(Box::new(base), exp));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        match self.peek() {
            None => Err(ParseError {
                offset: self.end,
                message: "expected expression, found end of input".into(),
            }),
            Some((_, '(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some((_, c)) if c.is_ascii_digit() => self.number(),
            Some((off, c)) if c.is_ascii_alphabetic() => self.ident(off),
            Some((off, c)) => Err(ParseError {
                offset: off,
                message: format!("expected expression, found `{c}`"),
            }),
        }
    }

    fn digits(&mut self, what: &str) -> Result<(usize, String), ParseError> {
        self.skip_ws();
        let start = self.offset();
        let mut s = String::new();
        while let Some((_, c)) = self.peek() {
            if c.is_ascii_digit() {
                s.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        if s.is_empty() {
            let found = self
                .peek()
                .map_or("end of input".to_string(), |(_, c)| format!("`{c}`"));
            return Err(ParseError {
                offset: start,
                message: format!("expected {what}, found {found}"),
            });
        }
        Ok((start, s))
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let (_, whole) = self.digits("number")?;
        let mut numer: BigInt = whole.parse().expect("digit string");
        let mut denom = BigInt::from(1);
        if matches!(self.peek(), Some((_, '.'))) {
            self.pos += 1;
            let (_, frac) = self.digits("digits after decimal point")?;
            for _ in 0..frac.len() {
                denom *= 10;
            }
            let frac_val: BigInt = frac.parse().expect("digit string");
            numer = numer * &denom + frac_val;
        }
        Ok(Expr::Const(Rat::new(numer, denom)))
    }

    fn ident(&mut self, start: usize) -> Result<Expr, ParseError> {
        let mut name = String::new();
        while let Some((_, c)) = self.peek() {
            if c.is_ascii_alphanumeric() {
                name.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        match name.as_str() {
            "sin" | "cos" | "tan" | "exp" | "log" => {
                let f = match name.as_str() {
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "tan" => Func::Tan,
                    "exp" => Func::Exp,
                    _ => Func::Log,
                };
                self.expect('(')?;
                let arg = self.expr()?;
                self.expect(')')?;
                Ok(Expr::Func(f, Box::new(arg)))
            }
            "Int" => {
                self.expect('(')?;
                let arg = self.expr()?;
                self.expect(')')?;
                Ok(Expr::Int(Box::new(arg)))
            }
            "x" => Ok(Expr::X),
            _ => {
                let valid = name == "p"
                    || name == "q"
                    || (name.len() > 1
                        && name.starts_with('a')
                        && name[1..].bytes().all(|b| b.is_ascii_digit()));
                if !valid {
                    return Err(ParseError {
                        offset: start,
                        message: format!("unknown function or symbol `{name}`"),
                    });
                }
                let mut order: u32 = 0;
                while let Some((_, c)) = self.peek() {
                    if c == '\'' || c == '\u{2032}' {
                        order += 1;
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                if self.eat('(') {
                    self.expect('x')?;
                    self.expect(')')?;
                }
                Ok(Expr::Sym { name, order })
            }
        }
    }
}
