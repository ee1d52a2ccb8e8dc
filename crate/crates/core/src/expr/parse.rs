//! Recursive-descent parser.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus and is right-associative, so
//! `-x^2` is `-(x^2)` and `a^b^c` is `a^(b^c)`.

use std::sync::Arc;

use super::{BinOp, Expression, Func, ParseError};

pub fn parse(text: &str) -> Result<Expression, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    p.skip_ws();
    if p.at_end() {
        return Err(p.error("expression"));
    }
    let e = p.expr()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error("operator or end of input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError {
            offset: self.pos,
            expected: expected.to_string(),
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat(b'+') {
                BinOp::Add
            } else if self.eat(b'-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expression::Binary(op, Arc::new(lhs), Arc::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(b'*') {
                BinOp::Mul
            } else if self.eat(b'/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expression::Binary(op, Arc::new(lhs), Arc::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expression, ParseError> {
        if self.eat(b'-') {
            let inner = self.unary()?;
            return Ok(Expression::Neg(Arc::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expression, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exponent = self.unary()?;
            return Ok(Expression::Binary(BinOp::Pow, Arc::new(base), Arc::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expression, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                let save = self.pos;
                if self.eat(b'(') {
                    let Some(func) = Func::from_name(name) else {
                        self.pos = start;
                        return Err(self.error(
                            "known function (exp, log, sin, cos, sinh, cosh, tanh, sqrt)",
                        ));
                    };
                    let arg = self.expr()?;
                    if !self.eat(b')') {
                        return Err(self.error("')'"));
                    }
                    Ok(Expression::Call(func, Arc::new(arg)))
                } else {
                    self.pos = save;
                    Ok(Expression::symbol(name))
                }
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("')'"));
                }
                Ok(e)
            }
            _ => Err(self.error("operand (number, identifier, '(' or '-')")),
        }
    }

    fn number(&mut self) -> Result<Expression, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while matches!(p.peek(), Some(c) if c.is_ascii_digit()) {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.peek() == Some(b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.error("digit"));
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // `2e` followed by something else is a number then an identifier
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .map(Expression::Literal)
            .map_err(|_| ParseError {
                offset: start,
                expected: "number".into(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_function_call() {
        assert_eq!(
            parse("sinh(t)").unwrap(),
            Expression::Call(Func::Sinh, Arc::new(Expression::symbol("t")))
        );
    }

    #[test]
    fn operator_without_operand() {
        let err = parse("2*^x").unwrap_err();
        assert_eq!(err.offset, 2);
        assert!(err.expected.contains("operand"));
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse("-x^2").unwrap();
        assert!(matches!(e, Expression::Neg(_)));
        let e = parse("a^b^c").unwrap();
        match e {
            Expression::Binary(BinOp::Pow, base, exp) => {
                assert_eq!(*base, Expression::symbol("a"));
                assert!(matches!(*exp, Expression::Binary(BinOp::Pow, ..)));
            }
            other => panic!("unexpected {other:?}"),
        }
        let e = parse("a-b-c").unwrap();
        match e {
            Expression::Binary(BinOp::Sub, lhs, _) => {
                assert!(matches!(*lhs, Expression::Binary(BinOp::Sub, ..)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn corollary_potential_parses() {
        let e = parse("c1/2*exp(2*xi) - (2-m-n)/2*xi + c2").unwrap();
        let syms: Vec<_> = e.free_symbols().into_iter().collect();
        assert_eq!(syms, ["c1", "c2", "m", "n", "xi"]);
        // top level is ((c1/2)*exp(2xi) - ((2-m-n)/2)*xi) + c2
        assert!(matches!(e, Expression::Binary(BinOp::Add, ..)));
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(parse("").unwrap_err().offset, 0);
        assert_eq!(parse("(x+1").unwrap_err().offset, 4);
        assert_eq!(parse("x y").unwrap_err().offset, 2);
        let err = parse("foo(x)").unwrap_err();
        assert_eq!(err.offset, 0);
        assert!(err.expected.contains("known function"));
    }

    #[test]
    fn scientific_literals() {
        assert_eq!(parse("1e-3").unwrap(), Expression::Literal(1e-3));
        assert_eq!(parse("2.5E2").unwrap(), Expression::Literal(250.0));
        assert_eq!(parse(".5").unwrap(), Expression::Literal(0.5));
    }
}
