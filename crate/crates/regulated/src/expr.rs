//! Closed-form continuous base expressions.
//!
//! The grammar is deliberately small: decimal literals, the time variable
//! `t`, the four arithmetic operators with the usual precedence, unary
//! minus, parentheses, and the function heads `sin`, `cos`, `exp`, and the
//! two-argument `pow`. Every expression evaluates pointwise; continuity on
//! the host interval is the author's responsibility and is probed by
//! function-level validation, not enforced by the grammar.

use std::fmt;
use std::iter::Peekable;
use std::str::{Chars, FromStr};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Parse failure for a base expression.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("unexpected character {ch:?} at byte {pos}")]
    UnexpectedChar { pos: usize, ch: char },
    #[error("expected {what} at byte {pos}")]
    Expected { pos: usize, what: &'static str },
    #[error("unknown name {name:?} at byte {pos}")]
    UnknownName { pos: usize, name: String },
    #[error("{name} takes {expected} argument(s), got {got}")]
    WrongArity {
        name: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("malformed number at byte {pos}")]
    BadNumber { pos: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Time,
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Sin(Box<Node>),
    Cos(Box<Node>),
    Exp(Box<Node>),
    Pow(Box<Node>, Box<Node>),
}

impl Node {
    fn eval(&self, t: f64) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Time => t,
            Node::Add(a, b) => a.eval(t) + b.eval(t),
            Node::Sub(a, b) => a.eval(t) - b.eval(t),
            Node::Mul(a, b) => a.eval(t) * b.eval(t),
            Node::Div(a, b) => a.eval(t) / b.eval(t),
            Node::Neg(a) => -a.eval(t),
            Node::Sin(a) => a.eval(t).sin(),
            Node::Cos(a) => a.eval(t).cos(),
            Node::Exp(a) => a.eval(t).exp(),
            Node::Pow(a, b) => a.eval(t).powf(b.eval(t)),
        }
    }
}

/// A parsed closed-form expression in the time variable `t`.
///
/// Holds both the source text (kept verbatim for serialization and display)
/// and the parsed tree. Equality compares the trees, so `"1+t"` and
/// `"1 + t"` are equal.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ContinuousBase {
    src: String,
    ast: Node,
}

impl ContinuousBase {
    /// Parse an expression from source text.
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        let ast = Parser::new(src).parse_all()?;
        Ok(ContinuousBase {
            src: src.to_string(),
            ast,
        })
    }

    /// The constant-zero expression.
    pub fn zero() -> Self {
        ContinuousBase {
            src: "0".to_string(),
            ast: Node::Const(0.0),
        }
    }

    /// Evaluate at time `t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.ast.eval(t)
    }

    /// The source text this expression was parsed from.
    pub fn source(&self) -> &str {
        &self.src
    }

    /// The expression `t -> self(-t)`. Substitutes `-t` for the time
    /// variable and collapses double negations, so mirroring twice restores
    /// the original tree exactly; evaluation is bit-reproducible because
    /// negation is exact in f64.
    pub fn reflected_in_time(&self) -> ContinuousBase {
        fn subst(node: &Node) -> Node {
            match node {
                Node::Time => Node::Neg(Box::new(Node::Time)),
                Node::Const(c) => Node::Const(*c),
                Node::Add(a, b) => Node::Add(Box::new(subst(a)), Box::new(subst(b))),
                Node::Sub(a, b) => Node::Sub(Box::new(subst(a)), Box::new(subst(b))),
                Node::Mul(a, b) => Node::Mul(Box::new(subst(a)), Box::new(subst(b))),
                Node::Div(a, b) => Node::Div(Box::new(subst(a)), Box::new(subst(b))),
                Node::Neg(a) => match subst(a) {
                    Node::Neg(inner) => *inner,
                    other => Node::Neg(Box::new(other)),
                },
                Node::Sin(a) => Node::Sin(Box::new(subst(a))),
                Node::Cos(a) => Node::Cos(Box::new(subst(a))),
                Node::Exp(a) => Node::Exp(Box::new(subst(a))),
                Node::Pow(a, b) => Node::Pow(Box::new(subst(a)), Box::new(subst(b))),
            }
        }
        let ast = subst(&self.ast);
        ContinuousBase {
            src: ast.to_source(),
            ast,
        }
    }
}

impl Node {
    /// Render back to the grammar. Parentheses are inserted whenever a
    /// child binds no tighter than its parent, so the printed text reparses
    /// to this exact tree (float evaluation order is part of the contract).
    fn to_source(&self) -> String {
        fn prec(n: &Node) -> u8 {
            match n {
                Node::Add(..) | Node::Sub(..) => 1,
                Node::Mul(..) | Node::Div(..) => 2,
                Node::Neg(..) => 3,
                _ => 4,
            }
        }
        fn emit(n: &Node, min_prec: u8, out: &mut String) {
            let wrap = prec(n) < min_prec;
            if wrap {
                out.push('(');
            }
            match n {
                Node::Const(c) => out.push_str(&format!("{c}")),
                Node::Time => out.push('t'),
                Node::Add(a, b) => {
                    emit(a, 1, out);
                    out.push('+');
                    emit(b, 2, out);
                }
                Node::Sub(a, b) => {
                    emit(a, 1, out);
                    out.push('-');
                    emit(b, 2, out);
                }
                Node::Mul(a, b) => {
                    emit(a, 2, out);
                    out.push('*');
                    emit(b, 3, out);
                }
                Node::Div(a, b) => {
                    emit(a, 2, out);
                    out.push('/');
                    emit(b, 3, out);
                }
                Node::Neg(a) => {
                    out.push('-');
                    emit(a, 3, out);
                }
                Node::Sin(a) | Node::Cos(a) | Node::Exp(a) => {
                    out.push_str(match n {
                        Node::Sin(_) => "sin(",
                        Node::Cos(_) => "cos(",
                        _ => "exp(",
                    });
                    emit(a, 0, out);
                    out.push(')');
                }
                Node::Pow(a, b) => {
                    out.push_str("pow(");
                    emit(a, 0, out);
                    out.push(',');
                    emit(b, 0, out);
                    out.push(')');
                }
            }
            if wrap {
                out.push(')');
            }
        }
        let mut out = String::new();
        emit(self, 0, &mut out);
        out
    }
}

impl PartialEq for ContinuousBase {
    fn eq(&self, other: &Self) -> bool {
        self.ast == other.ast
    }
}

impl fmt::Display for ContinuousBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.src)
    }
}

impl FromStr for ContinuousBase {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, ParseError> {
        ContinuousBase::parse(s)
    }
}

impl TryFrom<String> for ContinuousBase {
    type Error = ParseError;
    fn try_from(s: String) -> Result<Self, ParseError> {
        ContinuousBase::parse(&s)
    }
}

impl From<ContinuousBase> for String {
    fn from(b: ContinuousBase) -> String {
        b.src
    }
}

struct Parser<'a> {
    chars: Peekable<Chars<'a>>,
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            chars: src.chars().peekable(),
            src,
            pos: 0,
        }
    }

    fn parse_all(mut self) -> Result<Node, ParseError> {
        let node = self.parse_expr()?;
        self.skip_ws();
        match self.peek() {
            None => Ok(node),
            Some(ch) => Err(ParseError::UnexpectedChar { pos: self.pos, ch }),
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let ch = self.chars.next();
        if let Some(c) = ch {
            self.pos += c.len_utf8();
        }
        ch
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn eat(&mut self, expected: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(expected) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn parse_expr(&mut self) -> Result<Node, ParseError> {
        let mut node = self.parse_term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('+') => {
                    self.bump();
                    node = Node::Add(Box::new(node), Box::new(self.parse_term()?));
                }
                Some('-') => {
                    self.bump();
                    node = Node::Sub(Box::new(node), Box::new(self.parse_term()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Node, ParseError> {
        let mut node = self.parse_unary()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('*') => {
                    self.bump();
                    node = Node::Mul(Box::new(node), Box::new(self.parse_unary()?));
                }
                Some('/') => {
                    self.bump();
                    node = Node::Div(Box::new(node), Box::new(self.parse_unary()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Node, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some('-') => {
                self.bump();
                Ok(Node::Neg(Box::new(self.parse_unary()?)))
            }
            Some('+') => {
                self.bump();
                self.parse_unary()
            }
            _ => self.parse_primary(),
        }
    }

    fn parse_primary(&mut self) -> Result<Node, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(ParseError::UnexpectedEnd),
            Some('(') => {
                self.bump();
                let inner = self.parse_expr()?;
                if !self.eat(')') {
                    return Err(ParseError::Expected {
                        pos: self.pos,
                        what: "closing parenthesis",
                    });
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.parse_number(start),
            Some(c) if c.is_ascii_alphabetic() => {
                let name = self.parse_name();
                match name.as_str() {
                    "t" => Ok(Node::Time),
                    "sin" => Ok(Node::Sin(Box::new(self.parse_single_arg("sin")?))),
                    "cos" => Ok(Node::Cos(Box::new(self.parse_single_arg("cos")?))),
                    "exp" => Ok(Node::Exp(Box::new(self.parse_single_arg("exp")?))),
                    "pow" => {
                        let (base, exponent) = self.parse_two_args("pow")?;
                        Ok(Node::Pow(Box::new(base), Box::new(exponent)))
                    }
                    _ => Err(ParseError::UnknownName { pos: start, name }),
                }
            }
            Some(ch) => Err(ParseError::UnexpectedChar { pos: start, ch }),
        }
    }

    fn parse_name(&mut self) -> String {
        let mut name = String::new();
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            name.push(self.bump().unwrap());
        }
        name
    }

    fn parse_single_arg(&mut self, name: &'static str) -> Result<Node, ParseError> {
        let args = self.parse_args(name)?;
        match <[Node; 1]>::try_from(args) {
            Ok([a]) => Ok(a),
            Err(args) => Err(ParseError::WrongArity {
                name,
                expected: 1,
                got: args.len(),
            }),
        }
    }

    fn parse_two_args(&mut self, name: &'static str) -> Result<(Node, Node), ParseError> {
        let args = self.parse_args(name)?;
        match <[Node; 2]>::try_from(args) {
            Ok([a, b]) => Ok((a, b)),
            Err(args) => Err(ParseError::WrongArity {
                name,
                expected: 2,
                got: args.len(),
            }),
        }
    }

    fn parse_args(&mut self, _name: &'static str) -> Result<Vec<Node>, ParseError> {
        if !self.eat('(') {
            return Err(ParseError::Expected {
                pos: self.pos,
                what: "opening parenthesis",
            });
        }
        let mut args = Vec::new();
        self.skip_ws();
        if self.peek() == Some(')') {
            self.bump();
            return Ok(args);
        }
        loop {
            args.push(self.parse_expr()?);
            if self.eat(',') {
                continue;
            }
            if self.eat(')') {
                return Ok(args);
            }
            return Err(ParseError::Expected {
                pos: self.pos,
                what: "comma or closing parenthesis",
            });
        }
    }

    fn parse_number(&mut self, start: usize) -> Result<Node, ParseError> {
        let mut seen_dot = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                self.bump();
            } else if c == '.' && !seen_dot {
                seen_dot = true;
                self.bump();
            } else {
                break;
            }
        }
        // Optional exponent suffix like 1e-3.
        if matches!(self.peek(), Some('e') | Some('E')) {
            let mut probe = self.chars.clone();
            probe.next();
            let next = probe.peek().copied();
            let after_sign = if matches!(next, Some('+') | Some('-')) {
                let mut p2 = probe.clone();
                p2.next();
                p2.peek().copied()
            } else {
                next
            };
            if matches!(after_sign, Some(c) if c.is_ascii_digit()) {
                self.bump();
                if matches!(self.peek(), Some('+') | Some('-')) {
                    self.bump();
                }
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.bump();
                }
            }
        }
        let text = &self.src[start..self.pos];
        f64::from_str(text)
            .map(Node::Const)
            .map_err(|_| ParseError::BadNumber { pos: start })
    }
}
