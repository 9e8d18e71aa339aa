//! Recursive-descent parser for the metric expression grammar.
//!
//! ```text
//! expr     := term (("+" | "-") term)*
//! term     := unary (("*" | "/") unary)*
//! unary    := ("-" | "+") unary | power
//! power    := primary ("^" exponent)?
//! exponent := ("-" | "+") exponent | power        (must be variable-free)
//! primary  := number | "x" | "y" | "pi" | func "(" expr ")" | "(" expr ")"
//! func     := "exp" | "ln" | "sin" | "cos" | "sqrt" | "tanh" | "atanh"
//! number   := digits ["." digits] [("e" | "E") ["+" | "-"] digits]
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` is `-(x^2)`; binary
//! operators are left associative.

use super::ast::{BinaryOp, Expr, UnaryOp, Var};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("exponent at byte {offset} must be a constant")]
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

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokenize(src: &'a str) -> Result<Vec<(usize, Tok)>, ParseError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (off, tok) = lx.next()?;
            let end = tok == Tok::End;
            out.push((off, tok));
            if end {
                return Ok(out);
            }
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn next(&mut self) -> Result<(usize, Tok), ParseError> {
        while let Some(c) = self.peek_char() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        let start = self.pos;
        let Some(c) = self.peek_char() else {
            return Ok((start, Tok::End));
        };
        if c.is_ascii_digit() || c == '.' {
            return self.number(start);
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while let Some(c) = self.peek_char() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            return Ok((start, Tok::Ident(self.src[start..self.pos].to_string())));
        }
        self.pos += c.len_utf8();
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            other => {
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        Ok((start, tok))
    }

    fn number(&mut self, start: usize) -> Result<(usize, Tok), ParseError> {
        let bytes = self.src.as_bytes();
        let digits = |pos: &mut usize| {
            let s = *pos;
            while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
                *pos += 1;
            }
            *pos - s
        };
        let mut pos = self.pos;
        let mut n = digits(&mut pos);
        if pos < bytes.len() && bytes[pos] == b'.' {
            pos += 1;
            n += digits(&mut pos);
        }
        if n == 0 {
            return Err(ParseError::Syntax { offset: start, message: "malformed number".into() });
        }
        if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
            let mut p = pos + 1;
            if p < bytes.len() && (bytes[p] == b'+' || bytes[p] == b'-') {
                p += 1;
            }
            if digits(&mut p) == 0 {
                return Err(ParseError::Syntax { offset: pos, message: "malformed exponent in number".into() });
            }
            pos = p;
        }
        let text = &self.src[start..pos];
        self.pos = pos;
        text.parse::<f64>()
            .map(|v| (start, Tok::Num(v)))
            .map_err(|_| ParseError::Syntax { offset: start, message: format!("malformed number `{text}`") })
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].1
    }

    fn offset(&self) -> usize {
        self.toks[self.i].0
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn unexpected(&self, what: &str) -> ParseError {
        let found = match self.peek() {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        };
        ParseError::Syntax { offset: self.offset(), message: format!("expected {what}, found {found}") }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinaryOp::Add,
                Tok::Op('-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinaryOp::Mul,
                Tok::Op('/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary()?)))
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek() != &Tok::Op('^') {
            return Ok(base);
        }
        self.bump();
        let at = self.offset();
        let exponent = self.exponent()?;
        match exponent.constant_value() {
            Some(e) => Ok(Expr::Pow(Box::new(base), e)),
            None if exponent.mentions_variable() => Err(ParseError::NonConstantExponent { offset: at }),
            None => Err(ParseError::Syntax { offset: at, message: "exponent has no real value".into() }),
        }
    }

    fn exponent(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.exponent()?)))
            }
            Tok::Op('+') => {
                self.bump();
                self.exponent()
            }
            _ => self.power(),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let at = self.offset();
                self.bump();
                match name.as_str() {
                    "x" => Ok(Expr::Var(Var::X)),
                    "y" => Ok(Expr::Var(Var::Y)),
                    "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                    _ => {
                        let Some(op) = UnaryOp::from_name(&name) else {
                            return Err(ParseError::UnknownIdentifier { offset: at, name });
                        };
                        if self.peek() != &Tok::LParen {
                            return Err(self.unexpected(&format!("`(` after `{name}`")));
                        }
                        self.bump();
                        let arg = self.expr()?;
                        self.expect_rparen()?;
                        Ok(Expr::Unary(op, Box::new(arg)))
                    }
                }
            }
            _ => Err(self.unexpected("a number, variable, function or `(`")),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if self.peek() == &Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected("`)`"))
        }
    }
}

/// Parses metric expression source text.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let toks = Lexer::tokenize(src)?;
    let mut p = Parser { toks, i: 0 };
    let e = p.expr()?;
    if p.peek() != &Tok::End {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(e)
}
