//! Text syntax for differential polynomials.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' integer)?
//! primary := number | jet | func | '(' expr ')'
//! jet     := 'u' | 'u_' ('t' | 'x')+          e.g. u_t, u_txx
//! func    := ('f' | 'F' | 'h') '\''* '(u)'     e.g. f(u), f'(u), F(u)
//! ```
//!
//! Numbers are exact (`0.25` is `1/4`). Division is only by nonzero
//! constants.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use super::poly::{DiffPoly, FuncSym, JetVar};

const MAX_EXPONENT: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected `{0}`")]
    UnexpectedToken(String),
    #[error("unknown token `{0}`")]
    UnknownToken(String),
    #[error("division by a non-constant expression")]
    NonConstantDivisor,
    #[error("division by zero")]
    DivisionByZero,
    #[error("exponent must be an integer between 0 and {MAX_EXPONENT}")]
    BadExponent,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at position {position}: {kind}")]
pub struct ParseError {
    /// Character offset (0-based) of the offending token; the input length
    /// for errors at end of input.
    pub position: usize,
    pub kind: ParseErrorKind,
}

/// Parse tree of the input syntax.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(BigRational),
    Jet(JetVar),
    Func(FuncSym),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// Divisor position kept for error reporting during lowering.
    Div(Box<Expr>, Box<Expr>, usize),
    Pow(Box<Expr>, u32),
}

impl Expr {
    pub fn lower(&self) -> Result<DiffPoly, ParseError> {
        Ok(match self {
            Expr::Number(c) => DiffPoly::constant(c.clone()),
            Expr::Jet(v) => DiffPoly::jet(*v),
            Expr::Func(s) => DiffPoly::func(*s),
            Expr::Neg(e) => -e.lower()?,
            Expr::Add(a, b) => a.lower()? + b.lower()?,
            Expr::Sub(a, b) => a.lower()? - b.lower()?,
            Expr::Mul(a, b) => a.lower()? * b.lower()?,
            Expr::Div(a, b, position) => {
                let divisor = b.lower()?.as_constant().ok_or(ParseError {
                    position: *position,
                    kind: ParseErrorKind::NonConstantDivisor,
                })?;
                if divisor.is_zero() {
                    return Err(ParseError {
                        position: *position,
                        kind: ParseErrorKind::DivisionByZero,
                    });
                }
                a.lower()?.scale(&divisor.recip())
            }
            Expr::Pow(b, e) => b.lower()?.pow(*e),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational, String),
    Jet(JetVar),
    Func(FuncSym),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl Tok {
    fn text(&self) -> String {
        match self {
            Tok::Num(_, s) => s.clone(),
            Tok::Jet(v) => v.to_string(),
            Tok::Func(s) => s.to_string(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::Star => "*".into(),
            Tok::Slash => "/".into(),
            Tok::Caret => "^".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
        }
    }
}

fn err<T>(position: usize, kind: ParseErrorKind) -> Result<T, ParseError> {
    Err(ParseError { position, kind })
}

fn parse_number(text: &str) -> BigRational {
    match text.split_once('.') {
        None => BigRational::from_integer(text.parse::<BigInt>().expect("digits")),
        Some((int, frac)) => {
            let digits = format!("{int}{frac}");
            let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().expect("digits") };
            let den = num_traits::pow(BigInt::from(10), frac.len());
            BigRational::new(num, den)
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '+' => out.push((start, Tok::Plus)),
            '-' => out.push((start, Tok::Minus)),
            '*' => out.push((start, Tok::Star)),
            '/' => out.push((start, Tok::Slash)),
            '^' => out.push((start, Tok::Caret)),
            '(' => out.push((start, Tok::LParen)),
            ')' => out.push((start, Tok::RParen)),
            '0'..='9' | '.' => {
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                if text.matches('.').count() > 1 || text == "." {
                    return err(start, ParseErrorKind::UnknownToken(text));
                }
                out.push((start, Tok::Num(parse_number(&text), text)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let tok = match word.as_str() {
                    "u" => Tok::Jet(JetVar::U),
                    w if w.starts_with("u_") && w.len() > 2 => {
                        let subs = &w[2..];
                        if !subs.chars().all(|c| c == 't' || c == 'x') {
                            return err(start, ParseErrorKind::UnknownToken(word));
                        }
                        let t = subs.chars().filter(|&c| c == 't').count() as u32;
                        Tok::Jet(JetVar::new(t, subs.len() as u32 - t))
                    }
                    "f" | "F" | "h" => {
                        let mut primes = 0u32;
                        while i < chars.len() && chars[i] == '\'' {
                            primes += 1;
                            i += 1;
                        }
                        let rest: String = chars[i..].iter().take(3).collect();
                        if rest != "(u)" {
                            let shown: String = chars[start..(i + 3).min(chars.len())].iter().collect();
                            return err(start, ParseErrorKind::UnknownToken(shown));
                        }
                        i += 3;
                        match (word.as_str(), primes) {
                            ("f", k) => Tok::Func(FuncSym::f(k)),
                            ("F", 0) => Tok::Func(FuncSym::anti()),
                            ("F", k) => Tok::Func(FuncSym::f(k - 1)),
                            ("h", 0) => Tok::Func(FuncSym::h()),
                            _ => {
                                // h' = u f' and higher: not a single symbol
                                let shown: String = chars[start..i].iter().collect();
                                return err(start, ParseErrorKind::UnknownToken(shown));
                            }
                        }
                    }
                    _ => return err(start, ParseErrorKind::UnknownToken(word)),
                };
                out.push((start, tok));
                continue;
            }
            other => return err(start, ParseErrorKind::UnexpectedChar(other)),
        }
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

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn unexpected<T>(&self) -> Result<T, ParseError> {
        match self.toks.get(self.pos) {
            Some((p, t)) => err(*p, ParseErrorKind::UnexpectedToken(t.text())),
            None => err(self.end, ParseErrorKind::UnexpectedEnd),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let at = self.offset();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?), at);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        let at = self.offset();
        match self.peek() {
            Some(Tok::Num(c, _)) if c.is_integer() && *c <= BigRational::from_integer(MAX_EXPONENT.into()) => {
                let e: u32 = c.to_integer().try_into().expect("bounded exponent");
                self.pos += 1;
                Ok(Expr::Pow(Box::new(base), e))
            }
            Some(_) => err(at, ParseErrorKind::BadExponent),
            None => self.unexpected(),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some((_, tok)) = self.toks.get(self.pos).cloned() else {
            return self.unexpected();
        };
        match tok {
            Tok::Num(c, _) => {
                self.pos += 1;
                Ok(Expr::Number(c))
            }
            Tok::Jet(v) => {
                self.pos += 1;
                Ok(Expr::Jet(v))
            }
            Tok::Func(s) => {
                self.pos += 1;
                Ok(Expr::Func(s))
            }
            Tok::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.unexpected();
                }
                self.pos += 1;
                Ok(inner)
            }
            _ => self.unexpected(),
        }
    }
}

pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.chars().count(),
    };
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        return p.unexpected();
    }
    Ok(e)
}

/// Parses `text` into normal form.
pub fn parse(text: &str) -> Result<DiffPoly, ParseError> {
    parse_expr(text)?.lower()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equation_transcription() {
        let d = parse("u_t - u_txx + f'(u)*u_x").unwrap();
        assert_eq!(d.n_terms(), 3);
        let expected = DiffPoly::jet(JetVar::new(1, 0)) - DiffPoly::jet(JetVar::new(1, 2))
            + DiffPoly::func(FuncSym::f(1)) * DiffPoly::jet(JetVar::new(0, 1));
        assert_eq!(d, expected);
    }

    #[test]
    fn energy_density() {
        let p = parse("(u^2 + u_x^2)/2").unwrap();
        assert_eq!(p.n_terms(), 2);
        let half = BigRational::new(1.into(), 2.into());
        assert!(p.terms().all(|(_, c)| *c == half));
        assert_eq!(p, parse("0.5*u^2 + u_x*u_x/2").unwrap());
    }

    #[test]
    fn error_positions() {
        let e = parse("u_t + (").unwrap_err();
        assert_eq!(e.position, 7);
        assert_eq!(e.kind, ParseErrorKind::UnexpectedEnd);
        assert_eq!(e.to_string(), "syntax error at position 7: unexpected end of input");

        let e = parse("u_t + v").unwrap_err();
        assert_eq!((e.position, e.kind), (6, ParseErrorKind::UnknownToken("v".into())));
        let e = parse("u_y").unwrap_err();
        assert_eq!(e.position, 0);
        let e = parse("u / u_x").unwrap_err();
        assert_eq!((e.position, e.kind), (4, ParseErrorKind::NonConstantDivisor));
        let e = parse("u / (1 - 1)").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DivisionByZero);
        let e = parse("u ) ").unwrap_err();
        assert_eq!(e.position, 2);
        let e = parse("u ^ u").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::BadExponent);
        let e = parse("f(x)").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::UnknownToken(_)));
        let e = parse("u # 2").unwrap_err();
        assert_eq!((e.position, e.kind), (2, ParseErrorKind::UnexpectedChar('#')));
    }

    #[test]
    fn function_symbols() {
        assert_eq!(parse("F'(u)").unwrap(), parse("f(u)").unwrap());
        assert_eq!(parse("f''(u)").unwrap(), DiffPoly::func(FuncSym::f(2)));
        assert!(parse("h'(u)").is_err());
    }

    #[test]
    fn mixed_partials_commute_in_names() {
        assert_eq!(parse("u_xt").unwrap(), parse("u_tx").unwrap());
    }

    #[test]
    fn print_round_trip() {
        for src in [
            "u_t - u_txx + f'(u)*u_x",
            "-1/2*u^2 + 3*u_x*f(u)^2 - 7/3",
            "(u_tx^2 - u_t^2)/2 - f(u)*u_tx + f(u)^2/2",
            "0",
        ] {
            let p = parse(src).unwrap();
            assert_eq!(parse(&p.to_string()).unwrap(), p, "{src} -> {p}");
        }
    }
}
