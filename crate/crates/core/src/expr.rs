//! Component-expression language for metrics and scalar fields.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := ("-" | "+") unary | power
//! power   := primary ("^" unary)?
//! primary := number | ident | func "(" expr ")" | "(" expr ")"
//! func    := exp | ln | sqrt | sin | cos | sinh | cosh | tanh
//! number  := digits ["." digits] [("e" | "E") ["+" | "-"] digits]
//! ```
//!
//! `^` binds tighter than unary minus (`-x^2` is `-(x^2)`) and associates to
//! the right. Exponents must be constant (no coordinates); they are folded to
//! a number at parse time. Binary `+ - * /` associate to the left.

use std::fmt;
use std::ops;
use std::sync::Arc;

use thiserror::Error;

use crate::jet::{Jet, JetError};

pub const RESERVED: [&str; 8] = ["exp", "ln", "sqrt", "sin", "cos", "sinh", "cosh", "tanh"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("exponent at byte {offset} is not a constant")]
    NonConstantExponent { offset: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{source} (in expression at bytes {}..{})", span.start, span.end)]
    Jet { source: JetError, span: Span },
    #[error("point has {got} coordinates, expression expects {expected}")]
    PointLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Tanh,
}

impl UnaryOp {
    fn from_name(name: &str) -> Option<UnaryOp> {
        Some(match name {
            "exp" => UnaryOp::Exp,
            "ln" => UnaryOp::Ln,
            "sqrt" => UnaryOp::Sqrt,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "sinh" => UnaryOp::Sinh,
            "cosh" => UnaryOp::Cosh,
            "tanh" => UnaryOp::Tanh,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Sinh => "sinh",
            UnaryOp::Cosh => "cosh",
            UnaryOp::Tanh => "tanh",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }
}

/// A field known only through numeric data (for example an integrated
/// radial profile). Such nodes are created by builders, never by the parser.
pub trait SampledField: fmt::Debug + Send + Sync {
    /// Number of leading chart coordinates the field reads.
    fn arity(&self) -> usize;
    /// Jet of the field given the jets of its `arity` coordinates.
    fn jet(&self, coords: &[Jet]) -> Result<Jet, JetError>;
    fn label(&self) -> String;
}

/// A sampled field reading selected coordinates of a larger chart.
#[derive(Debug)]
struct Reindexed {
    inner: Arc<dyn SampledField>,
    indices: Vec<usize>,
}

impl SampledField for Reindexed {
    fn arity(&self) -> usize {
        self.indices.iter().max().map_or(0, |m| m + 1)
    }

    fn jet(&self, coords: &[Jet]) -> Result<Jet, JetError> {
        let picked: Vec<Jet> = self.indices.iter().map(|&i| coords[i].clone()).collect();
        self.inner.jet(&picked)
    }

    fn label(&self) -> String {
        self.inner.label()
    }
}

#[derive(Debug, Clone)]
pub enum Node {
    Constant(f64),
    Variable { index: usize, name: String },
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Sampled(Arc<dyn SampledField>),
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        use Node::*;
        match (self, other) {
            (Constant(a), Constant(b)) => a.to_bits() == b.to_bits(),
            (Variable { index: a, name: n }, Variable { index: b, name: m }) => a == b && n == m,
            (Unary(o, a), Unary(p, b)) => o == p && a == b,
            (Binary(o, a, c), Binary(p, b, d)) => o == p && a == b && c == d,
            (Pow(a, e), Pow(b, f)) => a == b && e.to_bits() == f.to_bits(),
            (Sampled(a), Sampled(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// Expression tree. Equality is structural and ignores source spans.
#[derive(Debug, Clone)]
pub struct Expr {
    node: Node,
    span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

impl Expr {
    fn new(node: Node, span: Span) -> Expr {
        Expr { node, span }
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn span(&self) -> Span {
        self.span
    }

    pub fn constant(value: f64) -> Expr {
        Expr::new(Node::Constant(value), Span::default())
    }

    pub fn variable(index: usize, name: impl Into<String>) -> Expr {
        Expr::new(
            Node::Variable {
                index,
                name: name.into(),
            },
            Span::default(),
        )
    }

    pub fn sampled(field: Arc<dyn SampledField>) -> Expr {
        Expr::new(Node::Sampled(field), Span::default())
    }

    pub fn apply(self, op: UnaryOp) -> Expr {
        let span = self.span;
        Expr::new(Node::Unary(op, Box::new(self)), span)
    }

    pub fn exp(self) -> Expr {
        self.apply(UnaryOp::Exp)
    }

    pub fn ln(self) -> Expr {
        self.apply(UnaryOp::Ln)
    }

    pub fn powf(self, exponent: f64) -> Expr {
        let span = self.span;
        Expr::new(Node::Pow(Box::new(self), exponent), span)
    }

    fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        let span = Span {
            start: lhs.span.start.min(rhs.span.start),
            end: lhs.span.end.max(rhs.span.end),
        };
        Expr::new(Node::Binary(op, Box::new(lhs), Box::new(rhs)), span)
    }

    /// Value if the expression contains no coordinates or sampled fields.
    pub fn constant_value(&self) -> Option<f64> {
        match &self.node {
            Node::Constant(v) => Some(*v),
            Node::Variable { .. } | Node::Sampled(_) => None,
            Node::Unary(op, a) => {
                let a = a.constant_value()?;
                Some(match op {
                    UnaryOp::Neg => -a,
                    UnaryOp::Exp => a.exp(),
                    UnaryOp::Ln => a.ln(),
                    UnaryOp::Sqrt => a.sqrt(),
                    UnaryOp::Sin => a.sin(),
                    UnaryOp::Cos => a.cos(),
                    UnaryOp::Sinh => a.sinh(),
                    UnaryOp::Cosh => a.cosh(),
                    UnaryOp::Tanh => a.tanh(),
                })
            }
            Node::Binary(op, a, b) => {
                let (a, b) = (a.constant_value()?, b.constant_value()?);
                Some(match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => a / b,
                })
            }
            Node::Pow(a, e) => Some(a.constant_value()?.powf(*e)),
        }
    }

    /// Rewrites every coordinate reference through `map`, used when an
    /// expression moves into a product chart.
    pub fn remap_variables(&self, map: &dyn Fn(usize) -> (usize, String)) -> Expr {
        let node = match &self.node {
            Node::Variable { index, .. } => {
                let (index, name) = map(*index);
                Node::Variable { index, name }
            }
            Node::Unary(op, a) => Node::Unary(*op, Box::new(a.remap_variables(map))),
            Node::Binary(op, a, b) => Node::Binary(
                *op,
                Box::new(a.remap_variables(map)),
                Box::new(b.remap_variables(map)),
            ),
            Node::Pow(a, e) => Node::Pow(Box::new(a.remap_variables(map)), *e),
            Node::Sampled(field) => Node::Sampled(Arc::new(Reindexed {
                inner: field.clone(),
                indices: (0..field.arity()).map(|i| map(i).0).collect(),
            })),
            other => other.clone(),
        };
        Expr::new(node, self.span)
    }

    /// Replaces every reference to coordinate `index` with `value`.
    pub fn substitute(&self, index: usize, value: &Expr) -> Expr {
        let node = match &self.node {
            Node::Variable { index: i, .. } if *i == index => return value.clone(),
            Node::Unary(op, a) => Node::Unary(*op, Box::new(a.substitute(index, value))),
            Node::Binary(op, a, b) => Node::Binary(
                *op,
                Box::new(a.substitute(index, value)),
                Box::new(b.substitute(index, value)),
            ),
            Node::Pow(a, e) => Node::Pow(Box::new(a.substitute(index, value)), *e),
            other => other.clone(),
        };
        Expr::new(node, self.span)
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_variable(&self) -> Option<usize> {
        match &self.node {
            Node::Variable { index, .. } => Some(*index),
            Node::Unary(_, a) | Node::Pow(a, _) => a.max_variable(),
            Node::Binary(_, a, b) => a.max_variable().max(b.max_variable()),
            Node::Sampled(field) => field.arity().checked_sub(1),
            Node::Constant(_) => None,
        }
    }

    /// Jet of the expression about `point`.
    pub fn evaluate(&self, point: &[f64], order: usize) -> Result<Jet, EvalError> {
        let vars = coordinate_jets(point, order).map_err(|source| EvalError::Jet {
            source,
            span: self.span,
        })?;
        self.evaluate_with(&vars)
    }

    /// Evaluates against precomputed coordinate jets.
    pub fn evaluate_with(&self, vars: &[Jet]) -> Result<Jet, EvalError> {
        if let Some(k) = self.max_variable() {
            if k >= vars.len() {
                return Err(EvalError::PointLength {
                    expected: k + 1,
                    got: vars.len(),
                });
            }
        }
        self.eval(vars)
    }

    fn eval(&self, vars: &[Jet]) -> Result<Jet, EvalError> {
        let wrap = |source: JetError| EvalError::Jet {
            source,
            span: self.span,
        };
        let like = &vars[0];
        Ok(match &self.node {
            Node::Constant(v) => Jet::constant(*v, like.n_vars(), like.order()).map_err(wrap)?,
            Node::Variable { index, .. } => vars[*index].clone(),
            Node::Sampled(field) => field.jet(vars).map_err(wrap)?,
            Node::Unary(op, a) => {
                let a = a.eval(vars)?;
                match op {
                    UnaryOp::Neg => -&a,
                    UnaryOp::Exp => a.exp(),
                    UnaryOp::Ln => a.ln().map_err(wrap)?,
                    UnaryOp::Sqrt => a.sqrt().map_err(wrap)?,
                    UnaryOp::Sin => a.sin(),
                    UnaryOp::Cos => a.cos(),
                    UnaryOp::Sinh => a.sinh(),
                    UnaryOp::Cosh => a.cosh(),
                    UnaryOp::Tanh => a.tanh(),
                }
            }
            Node::Binary(op, a, b) => {
                let (a, b) = (a.eval(vars)?, b.eval(vars)?);
                match op {
                    BinaryOp::Add => a.try_add(&b),
                    BinaryOp::Sub => a.try_sub(&b),
                    BinaryOp::Mul => a.try_mul(&b),
                    BinaryOp::Div => a.try_div(&b),
                }
                .map_err(wrap)?
            }
            Node::Pow(a, e) => a.eval(vars)?.powf(*e).map_err(wrap)?,
        })
    }
}

pub fn coordinate_jets(point: &[f64], order: usize) -> Result<Vec<Jet>, JetError> {
    (0..point.len())
        .map(|i| Jet::variable(i, point[i], point.len(), order))
        .collect()
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Add, self, rhs)
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Sub, self, rhs)
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Mul, self, rhs)
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Div, self, rhs)
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.apply(UnaryOp::Neg)
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v < 0.0 {
        write!(f, "(-{:?})", -v)
    } else {
        write!(f, "{v:?}")
    }
}

/// Fully parenthesized form; re-parsing it yields a structurally equal tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Node::Constant(v) => write_number(f, *v),
            Node::Variable { name, .. } => write!(f, "{name}"),
            Node::Unary(UnaryOp::Neg, a) => write!(f, "(-{a})"),
            Node::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Pow(a, e) => {
                write!(f, "({a} ^ ")?;
                write_number(f, *e)?;
                write!(f, ")")
            }
            Node::Sampled(s) => write!(f, "<{}>", s.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Symbol(char),
}

struct Lexeme {
    token: Token,
    span: Span,
}

fn lex(text: &str) -> Result<Vec<Lexeme>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
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
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let literal = &text[start..i];
            let value: f64 = literal.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number `{literal}`"),
            })?;
            out.push(Lexeme {
                token: Token::Number(value),
                span: Span { start, end: i },
            });
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Lexeme {
                token: Token::Ident(text[start..i].to_string()),
                span: Span { start, end: i },
            });
        } else if b"+-*/^()".contains(&c) {
            out.push(Lexeme {
                token: Token::Symbol(c as char),
                span: Span { start: i, end: i + 1 },
            });
            i += 1;
        } else {
            let ch = text[i..].chars().next().unwrap_or('?');
            return Err(ParseError::Syntax {
                offset: i,
                message: format!("unexpected character `{ch}`"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Lexeme>,
    pos: usize,
    coords: &'a [String],
    len: usize,
}

impl Parser<'_> {
    fn peek_symbol(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Lexeme {
                token: Token::Symbol(c),
                ..
            }) => Some(*c),
            _ => None,
        }
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.len, |l| l.span.start)
    }

    fn expect(&mut self, c: char) -> Result<Span, ParseError> {
        if self.peek_symbol() == Some(c) {
            self.pos += 1;
            Ok(self.tokens[self.pos - 1].span)
        } else {
            Err(ParseError::Syntax {
                offset: self.offset(),
                message: format!("expected `{c}`"),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek_symbol() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == '+' { BinaryOp::Add } else { BinaryOp::Sub };
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek_symbol() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { BinaryOp::Mul } else { BinaryOp::Div };
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek_symbol() {
            Some('-') => {
                let start = self.offset();
                self.pos += 1;
                let inner = self.unary()?;
                let span = Span {
                    start,
                    end: inner.span.end,
                };
                Ok(Expr::new(Node::Unary(UnaryOp::Neg, Box::new(inner)), span))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek_symbol() != Some('^') {
            return Ok(base);
        }
        self.pos += 1;
        let offset = self.offset();
        let exponent = self.unary()?;
        let value = exponent
            .constant_value()
            .ok_or(ParseError::NonConstantExponent { offset })?;
        let span = Span {
            start: base.span.start,
            end: exponent.span.end,
        };
        Ok(Expr::new(Node::Pow(Box::new(base), value), span))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(lexeme) = self.tokens.get(self.pos) else {
            return Err(ParseError::Syntax {
                offset: self.len,
                message: "unexpected end of input".into(),
            });
        };
        let span = lexeme.span;
        match lexeme.token.clone() {
            Token::Number(v) => {
                self.pos += 1;
                Ok(Expr::new(Node::Constant(v), span))
            }
            Token::Ident(name) => {
                self.pos += 1;
                if let Some(op) = UnaryOp::from_name(&name) {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    let close = self.expect(')')?;
                    let span = Span {
                        start: span.start,
                        end: close.end,
                    };
                    Ok(Expr::new(Node::Unary(op, Box::new(arg)), span))
                } else if let Some(index) = self.coords.iter().position(|c| *c == name) {
                    Ok(Expr::new(Node::Variable { index, name }, span))
                } else {
                    Err(ParseError::UnknownIdentifier {
                        name,
                        offset: span.start,
                    })
                }
            }
            Token::Symbol('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                let close = self.expect(')')?;
                Ok(Expr::new(
                    inner.node,
                    Span {
                        start: span.start,
                        end: close.end,
                    },
                ))
            }
            Token::Symbol(c) => Err(ParseError::Syntax {
                offset: span.start,
                message: format!("unexpected `{c}`"),
            }),
        }
    }
}

/// Parses `text` against the ordered coordinate names `coords`.
pub fn parse(text: &str, coords: &[String]) -> Result<Expr, ParseError> {
    let tokens = lex(text)?;
    if tokens.is_empty() {
        return Err(ParseError::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        coords,
        len: text.len(),
    };
    let expr = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(ParseError::Syntax {
            offset: parser.offset(),
            message: "trailing input".into(),
        });
    }
    Ok(expr)
}
