//! The scalar-function language used for generating functions, coordinate
//! fields and integration constants.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := atom ("^" INTEGER)*
//! atom    := NUMBER | "pi" | IDENT | FUNC "(" expr ")" | "(" expr ")"
//! FUNC    := "exp" | "log" | "sin" | "cos" | "sqrt"
//! NUMBER  := decimal literal, optional exponent (1.5, .5, 2e-3)
//! ```
//!
//! Exponents are nonnegative integer literals; general powers are written
//! with `exp` and `log`. Evaluation is generic over [`Scalar`], so one
//! expression runs on reals and on (nested) truncated series.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::series::{ArithOp, Elementary, Scalar};

/// Variable list for single-variable functions.
pub const UNIVARIATE: &[&str] = &["x"];
/// Variable list for the two-variable generating functions.
pub const PAIR: &[&str] = &["p", "q"];

/// `u1 .. un`.
pub fn coordinate_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("u{i}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownVariable(String),
    UnknownFunction(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the source text.
    pub offset: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error at byte {}: {msg}", self.offset),
            ParseErrorKind::UnknownVariable(name) => {
                write!(f, "unknown variable `{name}` at byte {}", self.offset)
            }
            ParseErrorKind::UnknownFunction(name) => {
                write!(f, "unknown function `{name}` at byte {}", self.offset)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        self.elementary().name()
    }

    fn elementary(self) -> Elementary {
        match self {
            Func::Exp => Elementary::Exp,
            Func::Log => Elementary::Log,
            Func::Sin => Elementary::Sin,
            Func::Cos => Elementary::Cos,
            Func::Sqrt => Elementary::Sqrt,
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
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }

    fn arith(self) -> ArithOp {
        match self {
            BinOp::Add => ArithOp::Add,
            BinOp::Sub => ArithOp::Sub,
            BinOp::Mul => ArithOp::Mul,
            BinOp::Div => ArithOp::Div,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    /// Index into the declared variable list.
    Var(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, u32),
    Call(Func, Box<Node>),
}

impl Node {
    fn precedence(&self) -> u8 {
        match self {
            Node::Binary(op, ..) => op.precedence(),
            Node::Neg(_) => 3,
            Node::Pow(..) => 4,
            Node::Const(_) | Node::Var(_) | Node::Call(..) => 5,
        }
    }

    fn eval<S: Scalar>(&self, binding: &[S]) -> Result<S> {
        Ok(match self {
            Node::Const(c) => binding[0].lift(*c),
            Node::Var(i) => binding[*i].clone(),
            Node::Neg(a) => a.eval(binding)?.negate(),
            Node::Binary(op, a, b) => a.eval(binding)?.arith(op.arith(), &b.eval(binding)?)?,
            Node::Pow(a, k) => a.eval(binding)?.apply(Elementary::Powi(*k))?,
            Node::Call(func, a) => a.eval(binding)?.apply(func.elementary())?,
        })
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, names: &[String]) -> fmt::Result {
        match self {
            Node::Const(c) => {
                if *c < 0.0 {
                    write!(f, "(-{})", -c)
                } else {
                    write!(f, "{c}")
                }
            }
            Node::Var(i) => f.write_str(&names[*i]),
            Node::Neg(a) => {
                f.write_str("-")?;
                a.write_child(f, names, 3)
            }
            Node::Binary(op, a, b) => {
                let p = op.precedence();
                a.write_child(f, names, p)?;
                write!(f, " {} ", op.symbol())?;
                b.write_child(f, names, p + 1)
            }
            Node::Pow(a, k) => {
                a.write_child(f, names, 5)?;
                write!(f, "^{k}")
            }
            Node::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write(f, names)?;
                f.write_str(")")
            }
        }
    }

    fn write_child(&self, f: &mut fmt::Formatter<'_>, names: &[String], min: u8) -> fmt::Result {
        if self.precedence() < min {
            f.write_str("(")?;
            self.write(f, names)?;
            f.write_str(")")
        } else {
            self.write(f, names)
        }
    }
}

/// A parsed scalar function of named variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    variables: Vec<String>,
}

impl Expression {
    /// Parses `text` with the given ordered variable list. The list must be
    /// nonempty; `pi` is a reserved constant.
    pub fn parse<V: AsRef<str>>(text: &str, variables: &[V]) -> Result<Self, ParseError> {
        let variables: Vec<String> = variables.iter().map(|v| v.as_ref().to_owned()).collect();
        if variables.is_empty() {
            return Err(ParseError {
                kind: ParseErrorKind::Syntax("no variables declared".to_string()),
                offset: 0,
            });
        }
        let tokens = tokenize(text)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            variables: &variables,
            end: text.len(),
        };
        let root = parser.expr()?;
        if let Some(tok) = parser.peek() {
            return Err(ParseError {
                kind: ParseErrorKind::Syntax(format!("unexpected {}", tok.kind.describe())),
                offset: tok.offset,
            });
        }
        Ok(Self { root, variables })
    }

    /// Builds an expression from an AST. Every `Var` index must be in range.
    pub fn from_ast(root: Node, variables: Vec<String>) -> Result<Self> {
        fn max_var(node: &Node) -> Option<usize> {
            match node {
                Node::Const(_) => None,
                Node::Var(i) => Some(*i),
                Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => max_var(a),
                Node::Binary(_, a, b) => max_var(a).max(max_var(b)),
            }
        }
        if variables.is_empty() {
            return Err(Error::InvalidInput("expression needs at least one variable".into()));
        }
        if let Some(i) = max_var(&root) {
            if i >= variables.len() {
                return Err(Error::DimensionMismatch {
                    expected: variables.len(),
                    found: i + 1,
                });
            }
        }
        Ok(Self { root, variables })
    }

    pub fn ast(&self) -> &Node {
        &self.root
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn arity(&self) -> usize {
        self.variables.len()
    }

    /// Evaluates with `binding[i]` bound to the i-th declared variable.
    pub fn eval<S: Scalar>(&self, binding: &[S]) -> Result<S> {
        if binding.len() != self.variables.len() {
            return Err(Error::ArityMismatch {
                expected: self.variables.len(),
                found: binding.len(),
            });
        }
        self.root.eval(binding)
    }

    /// Evaluates with a name-keyed binding that must cover every declared
    /// variable.
    pub fn eval_named<S: Scalar>(&self, binding: &[(&str, S)]) -> Result<S> {
        let ordered = self
            .variables
            .iter()
            .map(|name| {
                binding
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, v)| v.clone())
                    .ok_or_else(|| Error::InvalidInput(format!("no value bound to `{name}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.root.eval(&ordered)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(f, &self.variables)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64, bool),
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
            TokenKind::Number(v, _) => format!("number {v}"),
            TokenKind::Ident(name) => format!("identifier `{name}`"),
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

fn syntax(msg: impl Into<String>, offset: usize) -> ParseError {
    ParseError {
        kind: ParseErrorKind::Syntax(msg.into()),
        offset,
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let kind = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
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
                let mut integer = true;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    integer = false;
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        integer = false;
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let literal = &text[start..i];
                let value: f64 = literal
                    .parse()
                    .map_err(|_| syntax(format!("malformed number `{literal}`"), start))?;
                tokens.push(Token {
                    kind: TokenKind::Number(value, integer),
                    offset: start,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(text[start..i].to_string()),
                    offset: start,
                });
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(syntax(format!("unexpected character `{ch}`"), start));
            }
        };
        tokens.push(Token { kind, offset: start });
        i += 1;
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    variables: &'a [String],
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat(&TokenKind::Plus) {
                BinOp::Add
            } else if self.eat(&TokenKind::Minus) {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(&TokenKind::Star) {
                BinOp::Mul
            } else if self.eat(&TokenKind::Slash) {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.eat(&TokenKind::Minus) {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let mut base = self.atom()?;
        while self.eat(&TokenKind::Caret) {
            let offset = self.offset();
            let exponent = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Number(v, true)) if *v <= u32::MAX as f64 => *v as u32,
                _ => return Err(syntax("exponent must be a nonnegative integer literal", offset)),
            };
            self.pos += 1;
            base = Node::Pow(Box::new(base), exponent);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let offset = self.offset();
        let Some(tok) = self.peek().cloned() else {
            return Err(syntax("unexpected end of input", offset));
        };
        self.pos += 1;
        match tok.kind {
            TokenKind::Number(v, _) => Ok(Node::Const(v)),
            TokenKind::LParen => {
                let inner = self.expr()?;
                if !self.eat(&TokenKind::RParen) {
                    return Err(syntax("expected `)`", self.offset()));
                }
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                if self.eat(&TokenKind::LParen) {
                    let func = Func::from_name(&name).ok_or(ParseError {
                        kind: ParseErrorKind::UnknownFunction(name.clone()),
                        offset,
                    })?;
                    let arg = self.expr()?;
                    if !self.eat(&TokenKind::RParen) {
                        return Err(syntax("expected `)`", self.offset()));
                    }
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                if let Some(i) = self.variables.iter().position(|v| *v == name) {
                    Ok(Node::Var(i))
                } else if name == "pi" {
                    Ok(Node::Const(core::f64::consts::PI))
                } else {
                    Err(ParseError {
                        kind: ParseErrorKind::UnknownVariable(name),
                        offset,
                    })
                }
            }
            other => Err(syntax(format!("unexpected {}", other.describe()), offset)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::TruncatedSeries;
    use alloc::vec;

    fn var(i: usize) -> Box<Node> {
        Box::new(Node::Var(i))
    }

    #[test]
    fn precedence_and_structure() {
        let e = Expression::parse("p*q + 2", PAIR).unwrap();
        assert_eq!(
            e.ast(),
            &Node::Binary(
                BinOp::Add,
                Box::new(Node::Binary(BinOp::Mul, var(0), var(1))),
                Box::new(Node::Const(2.0))
            )
        );
        let e = Expression::parse("exp(x)^2", UNIVARIATE).unwrap();
        assert_eq!(e.ast(), &Node::Pow(Box::new(Node::Call(Func::Exp, var(0))), 2));

        // ^ binds tighter than unary minus
        let e = Expression::parse("-x^2", UNIVARIATE).unwrap();
        assert_eq!(e.ast(), &Node::Neg(Box::new(Node::Pow(var(0), 2))));
        assert_eq!(e.eval(&[3.0]).unwrap(), -9.0);

        let e = Expression::parse("2 - x - 1", UNIVARIATE).unwrap();
        assert_eq!(e.eval(&[5.0]).unwrap(), -4.0);
        let e = Expression::parse("8 / x / 2", UNIVARIATE).unwrap();
        assert_eq!(e.eval(&[2.0]).unwrap(), 2.0);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let err = Expression::parse("p*(", PAIR).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)));
        assert_eq!(err.offset, 3);

        let err = Expression::parse("p + z", PAIR).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownVariable("z".into()));
        assert_eq!(err.offset, 4);

        let err = Expression::parse("tan(p)", PAIR).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownFunction("tan".into()));

        assert!(Expression::parse("x^1.5", UNIVARIATE).is_err());
        assert!(Expression::parse("x^-1", UNIVARIATE).is_err());
        assert!(Expression::parse("", UNIVARIATE).is_err());
        assert!(Expression::parse("x $ 2", UNIVARIATE).is_err());
        assert!(Expression::parse("(x", UNIVARIATE).is_err());
        assert!(Expression::parse("x)", UNIVARIATE).is_err());
    }

    #[test]
    fn evaluation_over_reals_and_series() {
        let e = Expression::parse("p*q+2", PAIR).unwrap();
        assert_eq!(e.eval(&[3.0, 4.0]).unwrap(), 14.0);
        assert_eq!(e.eval_named(&[("q", 4.0), ("p", 3.0)]).unwrap(), 14.0);

        let sq = Expression::parse("x^2", UNIVARIATE).unwrap();
        let x = TruncatedSeries::variable(3, 3.0);
        assert_eq!(sq.eval(&[x]).unwrap().coeffs(), &[9.0, 6.0, 1.0]);

        let inv = Expression::parse("1/p", PAIR).unwrap();
        let t = TruncatedSeries::variable(3, 0.0);
        let one = TruncatedSeries::constant(3, 1.0);
        assert!(matches!(inv.eval(&[t, one]), Err(Error::NonUnitDivisor { .. })));
    }

    #[test]
    fn pi_and_literals() {
        let e = Expression::parse("pi * .5 + 2e-1 + 1E1", UNIVARIATE).unwrap();
        let v = e.eval(&[0.0]).unwrap();
        assert!((v - (core::f64::consts::PI * 0.5 + 0.2 + 10.0)).abs() < 1e-15);
    }

    #[test]
    fn arity_is_checked() {
        let e = Expression::parse("p + q", PAIR).unwrap();
        assert_eq!(e.eval(&[1.0]), Err(Error::ArityMismatch { expected: 2, found: 1 }));
        assert!(e.eval_named(&[("p", 1.0)]).is_err());
    }

    #[test]
    fn display_reparses() {
        for text in ["-(p + q)^3", "p - (q - 1)", "p / (q * 2)", "-p * -q", "sqrt(1 + p^2) - log(2)", "(-p)^2"] {
            let e = Expression::parse(text, PAIR).unwrap();
            let printed = e.to_string();
            assert_eq!(Expression::parse(&printed, PAIR).unwrap(), e, "{text} -> {printed}");
        }
    }

    #[test]
    fn from_ast_checks_indices() {
        let names = vec!["x".to_string()];
        assert!(Expression::from_ast(Node::Var(1), names.clone()).is_err());
        assert!(Expression::from_ast(Node::Var(0), names).is_ok());
    }
}
