//! Recursive-descent parser for the scalar-field grammar.
//!
//! ```text
//! expr  := term (('+'|'-') term)*
//! term  := unary (('*'|'/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := NUMBER | 'pi' | 'u1' | 'u2' | 'u3' | FUNC '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-u1^2`
//! is `-(u1^2)` while `2^-1` is `0.5`.

use super::{Axis, Func, ScalarExpr};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: expected {}, found {found}", expected.join(" | "))]
    Syntax { offset: usize, expected: Vec<String>, found: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("malformed number `{text}` at offset {offset}")]
    BadNumber { offset: usize, text: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::BadNumber { offset, .. } => *offset,
        }
    }
}

/// Parses `text` into an expression.
pub fn parse_expr(text: &str) -> Result<ScalarExpr, ParseError> {
    let mut parser = Parser { src: text.as_bytes(), pos: 0 };
    let e = parser.expr()?;
    parser.skip_ws();
    if parser.pos < parser.src.len() {
        return Err(parser.syntax_error(&["'+'", "'-'", "'*'", "'/'", "'^'", "end of input"]));
    }
    Ok(e)
}

const ATOM_START: &[&str] = &["NUMBER", "'pi'", "'u1'", "'u2'", "'u3'", "FUNC", "'('", "'-'"];

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
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

    fn syntax_error(&mut self, expected: &[&str]) -> ParseError {
        self.skip_ws();
        let found = match self.src.get(self.pos) {
            None => "end of input".to_string(),
            Some(&c) => format!("'{}'", c as char),
        };
        ParseError::Syntax { offset: self.pos, expected: expected.iter().map(|s| s.to_string()).collect(), found }
    }

    fn expr(&mut self) -> Result<ScalarExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = lhs.add(&self.term()?);
            } else if self.eat(b'-') {
                lhs = lhs.sub(&self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<ScalarExpr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = lhs.mul(&self.unary()?);
            } else if self.eat(b'/') {
                lhs = lhs.div(&self.unary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<ScalarExpr, ParseError> {
        if self.eat(b'-') {
            Ok(self.unary()?.neg())
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<ScalarExpr, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exponent = self.unary()?;
            Ok(base.pow(&exponent))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<ScalarExpr, ParseError> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.syntax_error(&["')'", "'+'", "'-'", "'*'", "'/'", "'^'"]));
                }
                Ok(e)
            }
            _ => Err(self.syntax_error(ATOM_START)),
        }
    }

    fn number(&mut self) -> Result<ScalarExpr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(ParseError::BadNumber {
                offset: start,
                text: String::from_utf8_lossy(&self.src[start..self.pos]).into_owned(),
            });
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // not an exponent after all
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        text.parse::<f64>()
            .map(ScalarExpr::num)
            .map_err(|_| ParseError::BadNumber { offset: start, text: text.to_string() })
    }

    fn identifier(&mut self) -> Result<ScalarExpr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        match name {
            "pi" => return Ok(ScalarExpr::pi()),
            "u1" => return Ok(ScalarExpr::coord(Axis::U1)),
            "u2" => return Ok(ScalarExpr::coord(Axis::U2)),
            "u3" => return Ok(ScalarExpr::coord(Axis::U3)),
            _ => {}
        }
        let Some(func) = Func::from_name(name) else {
            return Err(ParseError::UnknownIdentifier { offset: start, name: name.to_string() });
        };
        if !self.eat(b'(') {
            return Err(self.syntax_error(&["'('"]));
        }
        let arg = self.expr()?;
        if !self.eat(b')') {
            return Err(self.syntax_error(&["')'", "'+'", "'-'", "'*'", "'/'", "'^'"]));
        }
        Ok(arg.call(func))
    }
}
