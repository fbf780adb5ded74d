//! Scalar expressions over the state variables `x1`, `x2`, `x3`.
//!
//! The grammar is small on purpose: `+ - * /`, integer powers `^`, unary
//! negation, `sqrt(..)`, numeric literals and named parameters. Binding
//! strength, from tightest to loosest: `^`, unary `-`, `* /`, `+ -`.
//!
//! A literal quotient of integers such as `259/1800` is stored as an exact
//! rational and only converted to `f64` when the expression is evaluated.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// State variable referenced by an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X1,
    X2,
    X3,
}

impl Var {
    pub fn index(self) -> usize {
        match self {
            Var::X1 => 0,
            Var::X2 => 1,
            Var::X3 => 2,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Var::X1 => "x1",
            Var::X2 => "x2",
            Var::X3 => "x3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Literal {
    Integer(i64),
    Decimal(f64),
    /// Exact `num/den`, `den != 0`. Not reduced, so printing preserves the
    /// written form.
    Rational { num: i64, den: i64 },
}

impl Literal {
    pub fn value(self) -> f64 {
        match self {
            Literal::Integer(n) => n as f64,
            Literal::Decimal(v) => v,
            Literal::Rational { num, den } => num as f64 / den as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(Literal),
    Var(Var),
    Param { name: String, value: f64 },
    Neg(Box<Expr>),
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Pow { base: Box<Expr>, exp: i32 },
    Sqrt(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => {
                *offset
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of negative value {0}")]
    NegativeSqrt(f64),
}

/// Parse an expression over `x1`, `x2`, `x3`.
pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    parse_expression_with(text, &BTreeMap::new())
}

/// Parse an expression that may also reference the given named parameters.
pub fn parse_expression_with(
    text: &str,
    params: &BTreeMap<String, f64>,
) -> Result<Expr, ParseError> {
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        params,
        end: text.len(),
    };
    if parser.tokens.is_empty() {
        return Err(ParseError::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let expr = parser.expr()?;
    if let Some(tok) = parser.peek() {
        return Err(ParseError::Syntax {
            offset: tok.offset,
            message: format!("unexpected {}", tok.kind.describe()),
        });
    }
    Ok(expr)
}

impl Expr {
    pub fn eval(&self, p: &[f64; 3]) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Lit(lit) => lit.value(),
            Expr::Var(v) => p[v.index()],
            Expr::Param { value, .. } => *value,
            Expr::Neg(e) => -e.eval(p)?,
            Expr::Binary { op, lhs, rhs } => {
                let a = lhs.eval(p)?;
                let b = rhs.eval(p)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                }
            }
            Expr::Pow { base, exp } => {
                let b = base.eval(p)?;
                if b == 0.0 && *exp < 0 {
                    return Err(EvalError::DivisionByZero);
                }
                b.powi(*exp)
            }
            Expr::Sqrt(e) => {
                let v = e.eval(p)?;
                if v < 0.0 {
                    return Err(EvalError::NegativeSqrt(v));
                }
                v.sqrt()
            }
        })
    }

    /// True when no state variable occurs in the expression.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Lit(_) | Expr::Param { .. } => true,
            Expr::Var(_) => false,
            Expr::Neg(e) | Expr::Sqrt(e) | Expr::Pow { base: e, .. } => e.is_constant(),
            Expr::Binary { lhs, rhs, .. } => lhs.is_constant() && rhs.is_constant(),
        }
    }

    pub fn constant(value: f64) -> Expr {
        if value < 0.0 {
            Expr::Neg(Box::new(Expr::Lit(Literal::Decimal(-value))))
        } else {
            Expr::Lit(Literal::Decimal(value))
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary { op, .. } => op.precedence(),
            Expr::Lit(Literal::Rational { .. }) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow { .. } => 4,
            _ => 5,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(Literal::Integer(n)) => write!(f, "{n}"),
            Expr::Lit(Literal::Decimal(v)) => write!(f, "{v}"),
            Expr::Lit(Literal::Rational { num, den }) => write!(f, "{num}/{den}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Param { name, .. } => f.write_str(name),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_operand(f, e, e.precedence() < 3)
            }
            Expr::Binary { op, lhs, rhs } => {
                let prec = op.precedence();
                write_operand(f, lhs, lhs.precedence() < prec)?;
                f.write_str(op.symbol())?;
                // Left associative: an equal-precedence right operand needs
                // parentheses.
                write_operand(f, rhs, rhs.precedence() <= prec)
            }
            Expr::Pow { base, exp } => {
                write_operand(f, base, base.precedence() < 5)?;
                write!(f, "^{exp}")
            }
            Expr::Sqrt(e) => write!(f, "sqrt({e})"),
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Int(i64),
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Int(n) => format!("number `{n}`"),
            TokenKind::Num(v) => format!("number `{v}`"),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Caret => "`^`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let kind = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'+' => TokenKind::Plus,
            b'-' => TokenKind::Minus,
            b'*' => TokenKind::Star,
            b'/' => TokenKind::Slash,
            b'^' => TokenKind::Caret,
            b'(' => TokenKind::LParen,
            b')' => TokenKind::RParen,
            b'0'..=b'9' | b'.' => {
                let (kind, len) = lex_number(&text[i..], start)?;
                i += len;
                out.push(Token { kind, offset: start });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    kind: TokenKind::Ident(text[start..i].to_string()),
                    offset: start,
                });
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        i += 1;
        out.push(Token { kind, offset: start });
    }
    Ok(out)
}

fn lex_number(s: &str, offset: usize) -> Result<(TokenKind, usize), ParseError> {
    let b = s.as_bytes();
    let mut i = 0;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let int_digits = i;
    let mut is_int = true;
    if i < b.len() && b[i] == b'.' {
        is_int = false;
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if int_digits == 0 && i == frac_start {
            return Err(ParseError::Syntax {
                offset,
                message: "malformed number".into(),
            });
        }
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut j = i + 1;
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        let exp_start = j;
        while j < b.len() && b[j].is_ascii_digit() {
            j += 1;
        }
        if j > exp_start {
            is_int = false;
            i = j;
        }
    }
    let text = &s[..i];
    if is_int {
        if let Ok(n) = text.parse::<i64>() {
            return Ok((TokenKind::Int(n), i));
        }
    }
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok((TokenKind::Num(v), i)),
        _ => Err(ParseError::Syntax {
            offset,
            message: format!("numeric literal `{text}` out of range"),
        }),
    }
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    params: &'a BTreeMap<String, f64>,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<&TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            message: message.into(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Plus) => BinOp::Add,
                Some(TokenKind::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Star) => BinOp::Mul,
                Some(TokenKind::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = fold_rational(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(TokenKind::Minus) = self.peek_kind() {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if !matches!(self.peek_kind(), Some(TokenKind::Caret)) {
            return Ok(base);
        }
        self.bump();
        let negative = match self.peek_kind() {
            Some(TokenKind::Minus) => {
                self.bump();
                true
            }
            Some(TokenKind::Plus) => {
                self.bump();
                false
            }
            _ => false,
        };
        let exp = match self.peek_kind() {
            Some(TokenKind::Int(n)) => *n,
            _ => return Err(self.error("exponent must be an integer literal")),
        };
        let exp = i32::try_from(exp)
            .ok()
            .map(|e| if negative { -e } else { e })
            .ok_or_else(|| self.error("exponent out of range"))?;
        self.bump();
        if matches!(self.peek_kind(), Some(TokenKind::Caret)) {
            return Err(self.error("chained `^`; use parentheses"));
        }
        Ok(Expr::Pow {
            base: Box::new(base),
            exp,
        })
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.bump() else {
            return Err(self.error("unexpected end of expression"));
        };
        match tok.kind {
            TokenKind::Int(n) => Ok(Expr::Lit(Literal::Integer(n))),
            TokenKind::Num(v) => Ok(Expr::Lit(Literal::Decimal(v))),
            TokenKind::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            TokenKind::Ident(name) => match name.as_str() {
                "x1" => Ok(Expr::Var(Var::X1)),
                "x2" => Ok(Expr::Var(Var::X2)),
                "x3" => Ok(Expr::Var(Var::X3)),
                "sqrt" => {
                    if !matches!(self.peek_kind(), Some(TokenKind::LParen)) {
                        return Err(self.error("expected `(` after sqrt"));
                    }
                    self.bump();
                    let e = self.expr()?;
                    self.expect_rparen()?;
                    Ok(Expr::Sqrt(Box::new(e)))
                }
                _ => match self.params.get(&name) {
                    Some(&value) => Ok(Expr::Param { name, value }),
                    None => Err(ParseError::UnknownIdentifier {
                        offset: tok.offset,
                        name,
                    }),
                },
            },
            other => Err(ParseError::Syntax {
                offset: tok.offset,
                message: format!("unexpected {}", other.describe()),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek_kind() {
            Some(TokenKind::RParen) => {
                self.bump();
                Ok(())
            }
            _ => Err(self.error("expected `)`")),
        }
    }
}

fn fold_rational(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    if op == BinOp::Div {
        if let (Expr::Lit(Literal::Integer(num)), Expr::Lit(Literal::Integer(den))) = (&lhs, &rhs) {
            if *den != 0 {
                return Expr::Lit(Literal::Rational { num: *num, den: *den });
            }
        }
    }
    Expr::Binary {
        op,
        lhs: Box::new(lhs),
        rhs: Box::new(rhs),
    }
}
