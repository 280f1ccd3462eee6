//! Infix text syntax for [`Expr`].
//!
//! Precedence from loosest to tightest: `+ -`, `* /`, unary `-`, `^`
//! (right-associative). Subtraction, division and `sqrt` are sugar:
//! `a - b` is `a + -b`, `a / b` is `a * b^-1` and `sqrt(a)` is `a^0.5`.
//!
//! A unary minus applied directly to a numeric literal folds into a negative
//! literal (`-2` is `Lit(-2)`), whereas `-(2)` stays a negation. The
//! formatter relies on this to round-trip every tree.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use core::fmt::{self, Write};

use crate::expr::{Expr, VarId};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// Parses the infix syntax into an [`Expr`].
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { lexer: Lexer::new(text), peeked: None };
    let e = p.expr()?;
    let tok = p.next()?;
    if tok.kind != Tok::End {
        return Err(tok.error("unexpected trailing input"));
    }
    Ok(e)
}

/// Renders `e` so that `parse(&format(e)) == Ok(e)`.
pub fn format(e: &Expr) -> String {
    e.to_string()
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Var(VarId),
    Func(Func),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

#[derive(Clone, Debug)]
struct Token {
    kind: Tok,
    line: usize,
    column: usize,
}

impl Token {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, column: self.column, message: message.into() }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, pos: 0, line: 1, column: 1 }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while self.peek_char().is_some_and(&f) {
            self.bump();
        }
        &self.src[start..self.pos]
    }

    fn next_token(&mut self) -> Result<Token, ParseError> {
        self.take_while(char::is_whitespace);
        let (line, column) = (self.line, self.column);
        let err = |message: String| ParseError { line, column, message };
        let tok = |kind| Ok(Token { kind, line, column });
        let Some(c) = self.peek_char() else {
            return tok(Tok::End);
        };
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(kind) = single {
            self.bump();
            return tok(kind);
        }
        if c.is_ascii_digit() || c == '.' {
            let start = self.pos;
            self.take_while(|c| c.is_ascii_digit() || c == '.');
            if matches!(self.peek_char(), Some('e' | 'E')) {
                let rest = &self.src[self.pos + 1..];
                let digits_follow = rest.starts_with(|c: char| c.is_ascii_digit())
                    || ((rest.starts_with('+') || rest.starts_with('-'))
                        && rest[1..].starts_with(|c: char| c.is_ascii_digit()));
                if digits_follow {
                    self.bump();
                    if matches!(self.peek_char(), Some('+' | '-')) {
                        self.bump();
                    }
                    self.take_while(|c| c.is_ascii_digit());
                }
            }
            let text = &self.src[start..self.pos];
            let value: f64 =
                text.parse().map_err(|_| err(alloc::format!("malformed number `{text}`")))?;
            if !value.is_finite() {
                return Err(err(alloc::format!("literal `{text}` is not finite")));
            }
            return tok(Tok::Num(value));
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let word = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
            let kind = match word {
                "sin" => Tok::Func(Func::Sin),
                "cos" => Tok::Func(Func::Cos),
                "exp" => Tok::Func(Func::Exp),
                "log" => Tok::Func(Func::Log),
                "sqrt" => Tok::Func(Func::Sqrt),
                _ => {
                    let digits = word.strip_prefix('x').filter(|d| {
                        !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit())
                    });
                    let Some(digits) = digits else {
                        return Err(err(alloc::format!("unknown identifier `{word}`")));
                    };
                    let index: u32 = digits
                        .parse()
                        .map_err(|_| err(alloc::format!("variable index `{digits}` too large")))?;
                    let var = VarId::new(index)
                        .ok_or_else(|| err("variable indices start at 1".to_string()))?;
                    Tok::Var(var)
                }
            };
            return tok(kind);
        }
        Err(err(alloc::format!("unexpected character `{c}`")))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<Token>,
}

impl Parser<'_> {
    fn peek(&mut self) -> Result<&Token, ParseError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lexer.next_token()?);
        }
        Ok(self.peeked.as_ref().expect("just filled"))
    }

    fn next(&mut self) -> Result<Token, ParseError> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lexer.next_token(),
        }
    }

    fn expect(&mut self, kind: Tok, what: &str) -> Result<(), ParseError> {
        let t = self.next()?;
        if t.kind == kind {
            Ok(())
        } else {
            Err(t.error(alloc::format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek()?.kind {
                Tok::Plus => {
                    self.next()?;
                    lhs = Expr::add(lhs, self.term()?);
                }
                Tok::Minus => {
                    self.next()?;
                    lhs = Expr::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?.0;
        loop {
            match self.peek()?.kind {
                Tok::Star => {
                    self.next()?;
                    lhs = Expr::mul(lhs, self.unary()?.0);
                }
                Tok::Slash => {
                    self.next()?;
                    lhs = Expr::div(lhs, self.unary()?.0);
                }
                _ => return Ok(lhs),
            }
        }
    }

    /// The flag reports a bare numeric literal, the only operand a unary
    /// minus folds into.
    fn unary(&mut self) -> Result<(Expr, bool), ParseError> {
        if self.peek()?.kind == Tok::Minus {
            self.next()?;
            return Ok(match self.unary()? {
                (Expr::Lit(n), true) => (Expr::Lit(-n), false),
                (e, _) => (Expr::neg(e), false),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<(Expr, bool), ParseError> {
        let (base, bare) = self.atom()?;
        if self.peek()?.kind == Tok::Caret {
            self.next()?;
            let exponent = self.unary()?.0;
            return Ok((Expr::pow(base, exponent), false));
        }
        Ok((base, bare))
    }

    fn atom(&mut self) -> Result<(Expr, bool), ParseError> {
        let t = self.next()?;
        match t.kind {
            Tok::Num(n) => Ok((Expr::Lit(n), true)),
            Tok::Var(v) => Ok((Expr::Var(v), false)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok((e, false))
            }
            Tok::Func(func) => {
                self.expect(Tok::LParen, "`(` after function name")?;
                let arg = Box::new(self.expr()?);
                self.expect(Tok::RParen, "`)`")?;
                let e = match func {
                    Func::Sin => Expr::Sin(arg),
                    Func::Cos => Expr::Cos(arg),
                    Func::Exp => Expr::Exp(arg),
                    Func::Log => Expr::Log(arg),
                    Func::Sqrt => Expr::Pow(arg, Box::new(Expr::Lit(0.5))),
                };
                Ok((e, false))
            }
            Tok::End => Err(t.error("unexpected end of input")),
            _ => Err(t.error("expected a number, variable, function or `(`")),
        }
    }
}

const ADD: u8 = 1;
const MUL: u8 = 2;
const UNARY: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn is_lit(e: &Expr, value: f64) -> bool {
    matches!(e, Expr::Lit(n) if n.to_bits() == value.to_bits())
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) => ADD,
        Expr::Mul(..) => MUL,
        Expr::Neg(_) => UNARY,
        Expr::Lit(n) if n.is_sign_negative() => UNARY,
        Expr::Pow(_, b) if is_lit(b, 0.5) => ATOM,
        Expr::Pow(..) => POW,
        _ => ATOM,
    }
}

pub(crate) fn write_expr(f: &mut impl Write, e: &Expr) -> fmt::Result {
    write_at(f, e, 0)
}

fn write_at(f: &mut impl Write, e: &Expr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        f.write_char('(')?;
        write_bare(f, e)?;
        f.write_char(')')
    } else {
        write_bare(f, e)
    }
}

fn write_bare(f: &mut impl Write, e: &Expr) -> fmt::Result {
    match e {
        Expr::Lit(n) => write!(f, "{n}"),
        Expr::Var(v) => write!(f, "{v}"),
        Expr::Add(a, b) => {
            write_at(f, a, ADD)?;
            match &**b {
                Expr::Neg(c) => {
                    f.write_str(" - ")?;
                    write_at(f, c, MUL)
                }
                _ => {
                    f.write_str(" + ")?;
                    write_at(f, b, MUL)
                }
            }
        }
        Expr::Mul(a, b) => {
            write_at(f, a, MUL)?;
            match &**b {
                Expr::Pow(c, k) if is_lit(k, -1.0) => {
                    f.write_str(" / ")?;
                    write_at(f, c, UNARY)
                }
                _ => {
                    f.write_str(" * ")?;
                    write_at(f, b, UNARY)
                }
            }
        }
        Expr::Neg(a) => {
            f.write_char('-')?;
            if let Expr::Lit(n) = &**a {
                write!(f, "({n})")
            } else {
                write_at(f, a, UNARY)
            }
        }
        Expr::Pow(a, b) if is_lit(b, 0.5) => write_call(f, "sqrt", a),
        Expr::Pow(a, b) => {
            write_at(f, a, ATOM)?;
            f.write_char('^')?;
            write_at(f, b, UNARY)
        }
        Expr::Sin(a) => write_call(f, "sin", a),
        Expr::Cos(a) => write_call(f, "cos", a),
        Expr::Exp(a) => write_call(f, "exp", a),
        Expr::Log(a) => write_call(f, "log", a),
    }
}

fn write_call(f: &mut impl Write, name: &str, arg: &Expr) -> fmt::Result {
    write!(f, "{name}(")?;
    write_at(f, arg, 0)?;
    f.write_char(')')
}
