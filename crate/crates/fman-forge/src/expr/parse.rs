//! Recursive-descent parser for the manifest expression grammar:
//!
//!   expr   := term (('+'|'-') term)*
//!   term   := factor (('*'|'/') factor)*
//!   factor := base ('^' literal)?
//!   base   := literal | ident | ident '(' expr ')' | '(' expr ')' | '-' base
//!
//! Whitespace is insignificant. Literals are positional decimals
//! (`12`, `0.5`); exponents of `^` are literals, so they are non-negative by
//! construction. Errors carry the byte offset they were detected at.

use super::{Expr, Flavor, Func, Kind, Node};
use crate::error::{Error, Result};
use std::sync::Arc;

pub fn parse(text: &str, coords: &Arc<Vec<String>>, flavor: Flavor) -> Result<Expr> {
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
        coords,
        flavor,
    };
    let root = p.expr()?;
    p.skip_ws();
    if p.pos < p.bytes.len() {
        return Err(p.syntax("an operator or end of input"));
    }
    Ok(Expr::new(root, Arc::clone(coords), flavor))
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    coords: &'a Arc<Vec<String>>,
    flavor: Flavor,
}

impl<'a> Parser<'a> {
    fn syntax(&self, expected: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            expected: expected.to_string(),
        }
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let make = match self.peek() {
                Some(b'+') => Kind::Add as fn(Box<Node>, Box<Node>) -> Kind,
                Some(b'-') => Kind::Sub as fn(Box<Node>, Box<Node>) -> Kind,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            let span = (lhs.span.0, rhs.span.1);
            lhs = Node {
                kind: make(Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.factor()?;
        loop {
            let make = match self.peek() {
                Some(b'*') => Kind::Mul as fn(Box<Node>, Box<Node>) -> Kind,
                Some(b'/') => Kind::Div as fn(Box<Node>, Box<Node>) -> Kind,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.factor()?;
            let span = (lhs.span.0, rhs.span.1);
            lhs = Node {
                kind: make(Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Node> {
        let base = self.base()?;
        if self.eat(b'^') {
            self.skip_ws();
            let start = self.pos;
            let (p, _) = self.literal("a numeric literal exponent")?;
            let span = (base.span.0, self.pos);
            let _ = start;
            return Ok(Node {
                kind: Kind::Pow(Box::new(base), p),
                span,
            });
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Node> {
        match self.peek() {
            Some(b'-') => {
                let start = self.pos;
                self.pos += 1;
                let inner = self.base()?;
                let span = (start, inner.span.1);
                Ok(Node {
                    kind: Kind::Neg(Box::new(inner)),
                    span,
                })
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.syntax("')'"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                let (v, end) = self.literal("a numeric literal")?;
                Ok(Node {
                    kind: Kind::Lit(v),
                    span: (start, end),
                })
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            _ => Err(self.syntax("a literal, an identifier, '(' or '-'")),
        }
    }

    fn literal(&mut self, expected: &str) -> Result<(f64, usize)> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.syntax(expected));
        }
        if self.pos < self.bytes.len() && self.bytes[self.pos] == b'.' {
            self.pos += 1;
            let frac_start = self.pos;
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == frac_start {
                return Err(self.syntax("digits after the decimal point"));
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        let v: f64 = text.parse().map_err(|_| Error::Syntax {
            offset: start,
            expected: "a parseable decimal literal".to_string(),
        })?;
        Ok((v, self.pos))
    }

    fn ident(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ascii identifier")
            .to_string();

        if self.bytes.get(self.pos) == Some(&b'(')
            || (self.peek() == Some(b'(') && Func::from_name(&name).is_some())
        {
            let func = Func::from_name(&name).ok_or(Error::UnknownIdent {
                offset: start,
                name: name.clone(),
            })?;
            if func == Func::Conj && self.flavor == Flavor::Real {
                return Err(Error::ConjInRealFlavor { offset: start });
            }
            self.eat(b'(');
            let inner = self.expr()?;
            if !self.eat(b')') {
                return Err(self.syntax("')'"));
            }
            return Ok(Node {
                kind: Kind::Call(func, Box::new(inner)),
                span: (start, self.pos),
            });
        }

        if let Some(i) = self.coords.iter().position(|c| c == &name) {
            return Ok(Node {
                kind: Kind::Coord(i),
                span: (start, self.pos),
            });
        }
        Err(Error::UnknownIdent {
            offset: start,
            name,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart(names: &[&str]) -> Arc<Vec<String>> {
        Arc::new(names.iter().map(|s| s.to_string()).collect())
    }

    fn parse_real(text: &str, names: &[&str]) -> Result<Expr> {
        parse(text, &chart(names), Flavor::Real)
    }

    #[test]
    fn product_plus_constant_shape() {
        let e = parse_real("u1*u2 + 1", &["u1", "u2"]).unwrap();
        match &e.root().kind {
            Kind::Add(l, r) => {
                assert!(matches!(l.kind, Kind::Mul(_, _)));
                assert!(matches!(r.kind, Kind::Lit(v) if v == 1.0));
            }
            other => panic!("expected Add at root, got {other:?}"),
        }
    }

    #[test]
    fn power_of_call_shape() {
        let e = parse_real("sin(u1)^2", &["u1"]).unwrap();
        match &e.root().kind {
            Kind::Pow(b, p) => {
                assert_eq!(*p, 2.0);
                assert!(matches!(b.kind, Kind::Call(Func::Sin, _)));
            }
            other => panic!("expected Pow at root, got {other:?}"),
        }
    }

    #[test]
    fn malformed_input_reports_offset_five() {
        match parse_real("u1 + * 2", &["u1"]) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("expected Syntax, got {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_is_reported_with_name() {
        match parse_real("u1 + q3", &["u1"]) {
            Err(Error::UnknownIdent { offset, name }) => {
                assert_eq!(offset, 5);
                assert_eq!(name, "q3");
            }
            other => panic!("expected UnknownIdent, got {other:?}"),
        }
    }

    #[test]
    fn conj_is_rejected_on_real_charts() {
        match parse_real("conj(u1)", &["u1"]) {
            Err(Error::ConjInRealFlavor { offset }) => assert_eq!(offset, 0),
            other => panic!("expected ConjInRealFlavor, got {other:?}"),
        }
        assert!(parse("conj(u1)", &chart(&["u1"]), Flavor::Complex).is_ok());
    }

    #[test]
    fn negation_binds_tighter_than_power() {
        // The grammar reads -u1^2 as (-u1)^2: base consumes the minus sign
        // before factor sees the caret.
        let e = parse_real("-u1^2", &["u1"]).unwrap();
        let j = e.eval(&[3.0], 0).unwrap();
        assert_eq!(j.value(), 9.0);
    }

    #[test]
    fn whitespace_is_insignificant() {
        let a = parse_real("u1*u2+1", &["u1", "u2"]).unwrap();
        let b = parse_real("  u1 * u2\t+ 1 ", &["u1", "u2"]).unwrap();
        assert!(a.root().structurally_eq(b.root()));
    }

    #[test]
    fn trailing_garbage_is_an_error() {
        assert!(matches!(
            parse_real("u1 u1", &["u1"]),
            Err(Error::Syntax { offset: 3, .. })
        ));
    }

    #[test]
    fn missing_close_paren_is_reported_at_end() {
        assert!(matches!(
            parse_real("sin(u1", &["u1"]),
            Err(Error::Syntax { offset: 6, .. })
        ));
    }

    #[test]
    fn pretty_print_round_trips_structurally() {
        let names = ["u1", "u2", "u3"];
        for text in [
            "u1*u2 + 1",
            "sin(u1)^2",
            "-u1^2 + (u2 - u3)/(1 + u1*u1)",
            "sqrt(u3) / exp(u1) - 0.5*u2^3",
            "((u1))",
            "1/(u1*u2*u3)",
        ] {
            let e = parse_real(text, &names).unwrap();
            let printed = e.pretty();
            let back = parse_real(&printed, &names).unwrap();
            assert!(
                e.root().structurally_eq(back.root()),
                "round trip failed: {text} -> {printed}"
            );
        }
    }
}
