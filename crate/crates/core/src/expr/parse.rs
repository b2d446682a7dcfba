//! Recursive-descent parser for the expression DSL.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' uint)?
//! base   := number | 'i' | 'x'uint | '(' expr ')'
//!         | ('sin'|'cos'|'exp') '(' expr ')' | '-' base
//! ```
//!
//! The parser builds the raw tree for this grammar without simplification.
//! Note that `-x1^2` reads as `(-x1)^2`: unary minus binds inside `base`.

use num_complex::Complex64;

use super::{Expr, ExprError, ExprKind};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag,
    Var(usize),
    Func(Func),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Sin,
    Cos,
    Exp,
}

fn syntax(pos: usize, msg: impl Into<String>) -> ExprError {
    ExprError::Syntax { pos, msg: msg.into() }
}

fn lex(src: &str, dim: usize) -> Result<Vec<(usize, Tok)>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '0'..='9' | '.' => {
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // optional exponent, only if digits follow
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let v: f64 = text.parse().map_err(|_| syntax(start, format!("malformed number '{text}'")))?;
                out.push((start, Tok::Num(v)));
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                while i < chars.len() && chars[i].is_ascii_alphabetic() {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let tok = match word.as_str() {
                    "i" => Tok::Imag,
                    "sin" => Tok::Func(Func::Sin),
                    "cos" => Tok::Func(Func::Cos),
                    "exp" => Tok::Func(Func::Exp),
                    "x" => {
                        let dstart = i;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                        if dstart == i {
                            return Err(syntax(start, "expected variable index after 'x'"));
                        }
                        let digits: String = chars[dstart..i].iter().collect();
                        let index: usize = digits
                            .parse()
                            .map_err(|_| ExprError::VarOutOfRange { index: usize::MAX, dim })?;
                        if index == 0 || index > dim {
                            return Err(ExprError::VarOutOfRange { index, dim });
                        }
                        Tok::Var(index - 1)
                    }
                    _ => return Err(syntax(start, format!("unknown identifier '{word}'"))),
                };
                out.push((start, tok));
                continue;
            }
            other => return Err(syntax(start, format!("unexpected character '{other}'"))),
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ExprError> {
        let at = self.here();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(syntax(at, format!("expected {what}, found {t:?}"))),
            None => Err(syntax(at, format!("expected {what} at end of input"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::from_kind(ExprKind::Add(lhs, rhs));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::from_kind(ExprKind::Sub(lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    let rhs = self.factor()?;
                    lhs = Expr::from_kind(ExprKind::Mul(lhs, rhs));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let rhs = self.factor()?;
                    lhs = Expr::from_kind(ExprKind::Div(lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        let base = self.base()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.bump();
        let at = self.here();
        match self.bump() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && v <= u32::MAX as f64 => {
                Ok(Expr::from_kind(ExprKind::Pow(base, v as u32)))
            }
            Some(Tok::Minus) => Err(ExprError::NegativeExponent { pos: at }),
            Some(t) => Err(syntax(at, format!("expected non-negative integer exponent, found {t:?}"))),
            None => Err(syntax(at, "expected exponent at end of input")),
        }
    }

    fn base(&mut self) -> Result<Expr, ExprError> {
        let at = self.here();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::from_kind(ExprKind::Const(Complex64::new(v, 0.0)))),
            Some(Tok::Imag) => Ok(Expr::from_kind(ExprKind::Const(Complex64::new(0.0, 1.0)))),
            Some(Tok::Var(j)) => Ok(Expr::from_kind(ExprKind::Var(j))),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Some(Tok::Func(f)) => {
                self.expect(Tok::LParen, "'(' after function name")?;
                let arg = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(Expr::from_kind(match f {
                    Func::Sin => ExprKind::Sin(arg),
                    Func::Cos => ExprKind::Cos(arg),
                    Func::Exp => ExprKind::Exp(arg),
                }))
            }
            Some(Tok::Minus) => {
                let inner = self.base()?;
                Ok(Expr::from_kind(ExprKind::Neg(inner)))
            }
            Some(t) => Err(syntax(at, format!("unexpected {t:?}"))),
            None => Err(syntax(at, "unexpected end of input")),
        }
    }
}

/// Parses `src` as a function of `dim` real coordinates `x1..x{dim}`.
pub fn parse(src: &str, dim: usize) -> Result<Expr, ExprError> {
    if dim == 0 {
        return Err(ExprError::ZeroDimension);
    }
    let toks = lex(src, dim)?;
    let mut p = Parser { toks, pos: 0, end: src.chars().count() };
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        let (at, t) = &p.toks[p.pos];
        return Err(syntax(*at, format!("unexpected {t:?} after expression")));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_shape() {
        let e = parse("x1^2 - i*x2", 2).unwrap();
        let expected = Expr::from_kind(ExprKind::Sub(
            Expr::from_kind(ExprKind::Pow(Expr::var(0), 2)),
            Expr::from_kind(ExprKind::Mul(Expr::imag_unit(), Expr::var(1))),
        ));
        assert_eq!(e, expected);
    }

    #[test]
    fn trailing_operator_fails_at_end() {
        match parse("x1 +", 2) {
            Err(ExprError::Syntax { pos, msg }) => {
                assert_eq!(pos, 4);
                assert!(msg.contains("end of input"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn variable_out_of_range() {
        assert_eq!(parse("x3", 2), Err(ExprError::VarOutOfRange { index: 3, dim: 2 }));
        assert_eq!(parse("x0", 2), Err(ExprError::VarOutOfRange { index: 0, dim: 2 }));
    }

    #[test]
    fn negative_exponent() {
        assert!(matches!(parse("x1^-2", 2), Err(ExprError::NegativeExponent { pos: 3 })));
    }

    #[test]
    fn fractional_exponent_rejected() {
        assert!(matches!(parse("x1^1.5", 2), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn whitespace_insensitive() {
        assert_eq!(parse(" sin ( x1 ) *x2 ", 2).unwrap(), parse("sin(x1)*x2", 2).unwrap());
    }

    #[test]
    fn unary_minus_binds_inside_base() {
        let e = parse("-x1^2", 1).unwrap();
        assert_eq!(e.eval(&[3.0]).unwrap().re, 9.0);
        let e = parse("-(x1^2)", 1).unwrap();
        assert_eq!(e.eval(&[3.0]).unwrap().re, -9.0);
    }

    #[test]
    fn scientific_literals() {
        let e = parse("1.5e-3 * x1", 1).unwrap();
        assert_eq!(e.eval(&[2.0]).unwrap().re, 3e-3);
    }

    #[test]
    fn junk_is_rejected() {
        for bad in ["", "()", "x", "2 x1", "sin x1", "log(x1)", "x1 ^", "(x1", "x1)", "x1 $ 2", "x1^2^3"] {
            assert!(parse(bad, 2).is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn zero_dimension() {
        assert_eq!(parse("1", 0), Err(ExprError::ZeroDimension));
    }
}
