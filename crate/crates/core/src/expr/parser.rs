//! Recursive-descent parser for the coordinate expression language.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := ['-'] atom ('^' signed-number)?
//! atom   := number | ident | '(' expr ')' | func '(' expr ')'
//! func   := sin | cos | exp | log | sqrt | atan
//! ident  := 'x' digits
//! ```
//!
//! Whitespace is insignificant. Error offsets are 1-based byte positions.

use crate::error::{Error, Result};
use crate::expr::ast::{self, Expr};

pub fn parse_expr(text: &str, dim: usize) -> Result<Expr> {
    let mut p = Parser { bytes: text.as_bytes(), pos: 0, dim };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.bytes.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn syntax(&self, message: &str) -> Error {
        Error::Syntax { offset: self.pos + 1, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = ast::add(acc, self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = ast::sub(acc, self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = ast::mul(acc, self.factor()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    acc = ast::div(acc, self.factor()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let negated = if self.peek() == Some(b'-') {
            self.pos += 1;
            true
        } else {
            false
        };
        let base = self.atom()?;
        let e = if self.peek() == Some(b'^') {
            self.pos += 1;
            let r = self.signed_number()?;
            ast::pow(base, r)
        } else {
            base
        };
        Ok(if negated { ast::neg(e) } else { e })
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let v = self.number()?;
                Ok(ast::cst(v))
            }
            Some(c) if c.is_ascii_alphabetic() => self.word(),
            Some(_) => Err(self.syntax("expected number, identifier, or `(`")),
        }
    }

    fn word(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let idx: usize = digits.parse().map_err(|_| Error::UnknownIdentifier {
                    offset: start + 1,
                    name: name.to_string(),
                })?;
                if idx >= self.dim {
                    return Err(Error::DimensionViolation {
                        offset: start + 1,
                        var: idx,
                        dim: self.dim,
                    });
                }
                return Ok(ast::var(idx));
            }
        }
        let func: fn(Expr) -> Expr = match name {
            "sin" => ast::sin,
            "cos" => ast::cos,
            "exp" => ast::exp,
            "log" => ast::log,
            "sqrt" => ast::sqrt,
            "atan" => ast::atan,
            _ => {
                return Err(Error::UnknownIdentifier { offset: start + 1, name: name.to_string() })
            }
        };
        if self.peek() != Some(b'(') {
            return Err(self.syntax("expected `(` after function name"));
        }
        self.pos += 1;
        let arg = self.expr()?;
        if self.peek() != Some(b')') {
            return Err(self.syntax("expected `)`"));
        }
        self.pos += 1;
        Ok(func(arg))
    }

    fn signed_number(&mut self) -> Result<f64> {
        let sign = if self.peek() == Some(b'-') {
            self.pos += 1;
            -1.0
        } else {
            if self.peek() == Some(b'+') {
                self.pos += 1;
            }
            1.0
        };
        Ok(sign * self.number()?)
    }

    /// digits ('.' digits*)? (('e'|'E') sign? digits)?
    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.syntax("expected number"));
        }
        if self.pos < self.bytes.len() && self.bytes[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if self.pos < self.bytes.len() && (self.bytes[self.pos] | 0x20) == b'e' {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.bytes.len() && (self.bytes[self.pos] == b'+' || self.bytes[self.pos] == b'-') {
                self.pos += 1;
            }
            let digits_start = self.pos;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == digits_start {
                // not an exponent after all ("2e" would be a parse error
                // later anyway, but "2exp(..)" is not valid either — the
                // grammar has no implicit multiplication)
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        text.parse::<f64>().map_err(|_| Error::Syntax {
            offset: start + 1,
            message: format!("invalid number literal `{text}`"),
        })
    }
}
