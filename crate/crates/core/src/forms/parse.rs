//! Text grammar for forms: monomials `c*xi^2` and `c*xi*xj` joined by `+`/`-`.
//! Variables are `x1..xn`, with `x, y, z, w` as aliases for the first four.

use std::collections::BTreeMap;

use super::QuadraticForm;
use crate::error::{Error, Result};

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parse(format!("{msg} at offset {}", self.pos))
    }

    fn integer(&mut self) -> Result<Option<i64>> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Ok(None);
        }
        let txt = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
        txt.parse().map(Some).map_err(|_| self.err("coefficient out of range"))
    }

    /// Returns a 0-based variable index.
    fn variable(&mut self) -> Result<Option<usize>> {
        let idx = match self.peek() {
            Some(b'y') => 1,
            Some(b'z') => 2,
            Some(b'w') => 3,
            Some(b'x') => {
                self.pos += 1;
                let start = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                if start == self.pos {
                    return Ok(Some(0));
                }
                let k: usize = std::str::from_utf8(&self.s[start..self.pos])
                    .expect("ascii")
                    .parse()
                    .map_err(|_| self.err("bad variable index"))?;
                if k == 0 {
                    return Err(self.err("variables are numbered from x1"));
                }
                return Ok(Some(k - 1));
            }
            _ => return Ok(None),
        };
        self.pos += 1;
        Ok(Some(idx))
    }
}

/// Parse a form expression such as `x^2 + 5*x*y` or `x1^2 - 3*x2*x3 + x3^2`.
pub fn parse_form(text: &str) -> Result<QuadraticForm> {
    let mut cur = Cursor { s: text.as_bytes(), pos: 0 };
    let mut terms: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    let mut first = true;
    loop {
        let sign: i64 = if cur.eat(b'-') {
            -1
        } else if cur.eat(b'+') || first {
            1
        } else if cur.peek().is_none() {
            break;
        } else {
            return Err(cur.err("expected '+' or '-'"));
        };
        first = false;
        let coef = cur.integer()?;
        if coef.is_some() {
            cur.eat(b'*');
        }
        let coef = sign
            .checked_mul(coef.unwrap_or(1))
            .ok_or_else(|| cur.err("coefficient out of range"))?;
        let v1 = cur.variable()?.ok_or_else(|| cur.err("expected a variable"))?;
        let v2 = if cur.eat(b'^') {
            match cur.integer()? {
                Some(2) => v1,
                _ => return Err(cur.err("only squares are allowed as powers")),
            }
        } else if cur.eat(b'*') {
            cur.variable()?.ok_or_else(|| cur.err("expected a second variable"))?
        } else {
            return Err(cur.err("linear term is not quadratic"));
        };
        let key = (v1.min(v2), v1.max(v2));
        let slot = terms.entry(key).or_insert(0);
        *slot = slot.checked_add(coef).ok_or_else(|| cur.err("coefficient overflow"))?;
        if cur.peek().is_none() {
            break;
        }
    }
    let n = terms.keys().map(|&(_, j)| j + 1).max().ok_or_else(|| cur.err("empty form"))?;
    QuadraticForm::from_upper(n, |i, j| terms.get(&(i, j)).copied().unwrap_or(0))
}
