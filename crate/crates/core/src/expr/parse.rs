use std::f64::consts::PI;

use thiserror::Error;

use super::{Expr, Func, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("exponent at byte {offset} is not a constant number")]
    NonConstantExponent { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::NonConstantExponent { offset } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        if !c.is_ascii() {
            return Err(ParseError::Syntax {
                offset: start,
                message: "non-ASCII input".into(),
            });
        }
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            self.pos += 1;
            return Ok((tok, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start);
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
            {
                self.pos += 1;
            }
            let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
            return Ok((Tok::Ident(name), start));
        }
        Err(ParseError::Syntax {
            offset: start,
            message: format!("unexpected character `{}`", c as char),
        })
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize), ParseError> {
        let digits = |lx: &mut Lexer| {
            let s = lx.pos;
            while lx.pos < lx.src.len() && lx.src[lx.pos].is_ascii_digit() {
                lx.pos += 1;
            }
            lx.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(ParseError::Syntax {
                offset: start,
                message: "malformed number".into(),
            });
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
                return Err(ParseError::Syntax {
                    offset: save,
                    message: "malformed exponent in number".into(),
                });
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        Ok((Tok::Num(v), start))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
    vars: &'a [(&'a str, Var)],
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ParseError> {
        let (tok, at) = self.lexer.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.tok {
                Tok::Plus => {
                    self.bump()?;
                    lhs = lhs + self.term()?;
                }
                Tok::Minus => {
                    self.bump()?;
                    lhs = lhs - self.term()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.tok {
                Tok::Star => {
                    self.bump()?;
                    lhs = lhs * self.factor()?;
                }
                Tok::Slash => {
                    self.bump()?;
                    lhs = lhs / self.factor()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Minus {
            self.bump()?;
            return Ok(-self.factor()?);
        }
        let base = self.base()?;
        if self.tok == Tok::Caret {
            self.bump()?;
            let sign = if self.tok == Tok::Minus {
                self.bump()?;
                -1.0
            } else {
                1.0
            };
            match self.tok {
                Tok::Num(p) => {
                    self.bump()?;
                    return Ok(base.powf(sign * p));
                }
                _ => return Err(ParseError::NonConstantExponent { offset: self.at }),
            }
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::constant(v))
            }
            Tok::LParen => {
                self.bump()?;
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let at = self.at;
                self.bump()?;
                if let Some(f) = Func::from_name(&name) {
                    if self.tok != Tok::LParen {
                        return Err(ParseError::Syntax {
                            offset: self.at,
                            message: format!("expected `(` after `{name}`"),
                        });
                    }
                    self.bump()?;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(arg.apply(f));
                }
                if name == "pi" {
                    return Ok(Expr::constant(PI));
                }
                match self.vars.iter().find(|(n, _)| *n == name) {
                    Some((_, v)) => Ok(Expr::var(*v)),
                    None => Err(ParseError::UnknownIdentifier { name, offset: at }),
                }
            }
            Tok::End => Err(ParseError::Syntax {
                offset: self.at,
                message: "unexpected end of input".into(),
            }),
            other => Err(ParseError::Syntax {
                offset: self.at,
                message: format!("unexpected token {other:?}"),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if self.tok != Tok::RParen {
            return Err(ParseError::Syntax {
                offset: self.at,
                message: "expected `)`".into(),
            });
        }
        self.bump()
    }
}

const DEFAULT_VARS: [(&str, Var); 4] = [
    ("x1", Var::X1),
    ("x2", Var::X2),
    ("x3", Var::X3),
    ("t", Var::T),
];

/// Parses an expression in `x1, x2, x3, t` (plus the constant `pi`).
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    parse_with_vars(src, &DEFAULT_VARS)
}

/// Parses with a custom identifier table, e.g. `[("rho", Var::X1)]` for
/// equation-of-state laws written in the density.
pub fn parse_with_vars(src: &str, vars: &[(&str, Var)]) -> Result<Expr, ParseError> {
    let mut p = Parser {
        lexer: Lexer {
            src: src.as_bytes(),
            pos: 0,
        },
        tok: Tok::End,
        at: 0,
        vars,
    };
    p.bump()?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(ParseError::Syntax {
            offset: p.at,
            message: "trailing input".into(),
        });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{BinOp, Kind, Point};

    #[test]
    fn literal_zero() {
        assert_eq!(parse("0").unwrap().as_const(), Some(0.0));
    }

    #[test]
    fn product_with_function() {
        let e = parse("x1*sin(t)").unwrap();
        match e.kind() {
            Kind::Binary(BinOp::Mul, a, b) => {
                assert!(matches!(a.kind(), Kind::Var(Var::X1)));
                assert!(matches!(b.kind(), Kind::Func(Func::Sin, _)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pi_constant() {
        let e = parse("2*pi").unwrap();
        assert_eq!(e.eval(&Point::new(1.0, 2.0, 3.0, 4.0)).unwrap(), std::f64::consts::TAU);
    }

    #[test]
    fn precedence() {
        let at = Point::new(3.0, 2.0, 0.0, 0.0);
        assert_eq!(parse("-x1^2").unwrap().eval(&at).unwrap(), -9.0);
        assert_eq!(parse("x1-x2-1").unwrap().eval(&at).unwrap(), 0.0);
        assert_eq!(parse("x1/x2/2").unwrap().eval(&at).unwrap(), 0.75);
        assert_eq!(parse("2+x1*x2^2").unwrap().eval(&at).unwrap(), 14.0);
        assert_eq!(parse("(2+x1)*x2").unwrap().eval(&at).unwrap(), 10.0);
        assert_eq!(parse("x1^1.5e0").unwrap().eval(&at).unwrap(), 27f64.sqrt());
    }

    #[test]
    fn simple_evaluations() {
        assert_eq!(parse("x1+x2").unwrap().eval(&Point::new(1.0, 2.0, 0.0, 0.0)).unwrap(), 3.0);
        let v = parse("sin(x1)^2+cos(x1)^2")
            .unwrap()
            .eval(&Point::new(0.7, 0.0, 0.0, 0.0))
            .unwrap();
        assert!((v - 1.0).abs() <= 1e-15);
        let v = parse("exp(log(x3))").unwrap().eval(&Point::new(0.0, 0.0, 2.5, 0.0)).unwrap();
        assert!((v - 2.5).abs() <= 1e-15);
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(
            parse("x1 + y").unwrap_err(),
            ParseError::UnknownIdentifier {
                name: "y".into(),
                offset: 5
            }
        );
        assert_eq!(
            parse("x1^t").unwrap_err(),
            ParseError::NonConstantExponent { offset: 3 }
        );
        assert_eq!(parse("x1^(2)").unwrap_err().offset(), 3);
        assert!(matches!(parse("(x1").unwrap_err(), ParseError::Syntax { offset: 3, .. }));
        assert!(matches!(parse("x1 $").unwrap_err(), ParseError::Syntax { offset: 3, .. }));
        assert!(matches!(parse("").unwrap_err(), ParseError::Syntax { offset: 0, .. }));
        assert!(matches!(parse("sin x1").unwrap_err(), ParseError::Syntax { offset: 4, .. }));
        assert!(matches!(parse("1e+").unwrap_err(), ParseError::Syntax { .. }));
    }

    #[test]
    fn custom_identifiers_replace_defaults() {
        assert!(parse_with_vars("rho^1.4", &[("rho", Var::X1)]).is_ok());
        assert!(matches!(
            parse_with_vars("x1", &[("rho", Var::X1)]),
            Err(ParseError::UnknownIdentifier { .. })
        ));
    }
}
