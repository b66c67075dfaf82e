//! A small arithmetic expression language used to describe nonlinear map
//! coordinates such as `2*sin(x)` or `max(0.5, 1-x)`.
//!
//! Grammar (lowest to highest binding):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          (right associative)
//! primary := number | variable | func '(' args ')' | '(' expr ')'
//! ```
//!
//! Variables are `x`, `y`, `z` (coordinates 0, 1, 2). The function set is
//! closed: `sin cos abs exp log sqrt` take one argument and `min max mod`
//! take two. Angles are in radians.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Variable names in coordinate order.
pub const VARIABLES: [&str; 3] = ["x", "y", "z"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Abs,
    Exp,
    Log,
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Min,
    Max,
    Mod,
}

impl UnaryOp {
    fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Abs => "abs",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
        }
    }
}

impl BinaryOp {
    fn name(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
            BinaryOp::Min => "min",
            BinaryOp::Max => "max",
            BinaryOp::Mod => "mod",
        }
    }

    fn is_function(self) -> bool {
        matches!(self, BinaryOp::Min | BinaryOp::Max | BinaryOp::Mod)
    }
}

/// Expression tree node. Variables are stored by coordinate index.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: found {found}, expected one of {expected:?}")]
    Syntax {
        offset: usize,
        found: String,
        expected: Vec<&'static str>,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("invalid number `{text}` at byte {offset}")]
    InvalidNumber { offset: usize, text: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::InvalidNumber { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(&'static str),
    #[error("domain error in `{op}` at argument(s) {args:?}")]
    Domain { op: &'static str, args: Vec<f64> },
}

/// A parsed, immutable expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
}

impl Expression {
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        Self::parse_with_vars(source, &VARIABLES)
    }

    /// Parses with a restricted set of admissible variable names, which must
    /// be a subset of [`VARIABLES`].
    pub fn parse_with_vars(source: &str, vars: &[&str]) -> Result<Self, ParseError> {
        let mut p = Parser {
            src: source,
            pos: 0,
            vars,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < source.len() {
            return Err(p.unexpected(&["operator", "end of input"]));
        }
        Ok(Self { root })
    }

    pub fn from_node(root: Node) -> Self {
        Self { root }
    }

    pub fn node(&self) -> &Node {
        &self.root
    }

    /// Evaluates with `vars[i]` bound to coordinate `i`; indices past the
    /// slice are unbound.
    pub fn eval(&self, vars: &[f64]) -> Result<f64, EvalError> {
        eval_node(&self.root, vars)
    }

    /// Evaluates against named bindings.
    pub fn evaluate(&self, env: &[(&str, f64)]) -> Result<f64, EvalError> {
        let mut vals = [f64::NAN; 3];
        let mut bound = [false; 3];
        for (name, v) in env {
            if let Some(i) = VARIABLES.iter().position(|n| n == name) {
                vals[i] = *v;
                bound[i] = true;
            }
        }
        for i in self.free_variable_indices() {
            if !bound[i] {
                return Err(EvalError::Unbound(VARIABLES[i]));
            }
        }
        self.eval(&vals)
    }

    pub fn free_variables(&self) -> BTreeSet<&'static str> {
        self.free_variable_indices()
            .into_iter()
            .map(|i| VARIABLES[i])
            .collect()
    }

    pub fn free_variable_indices(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        collect_vars(&self.root, &mut out);
        out
    }
}

impl std::str::FromStr for Expression {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

fn collect_vars(node: &Node, out: &mut BTreeSet<usize>) {
    match node {
        Node::Const(_) => {}
        Node::Var(i) => {
            out.insert(*i);
        }
        Node::Unary(_, a) => collect_vars(a, out),
        Node::Binary(_, a, b) => {
            collect_vars(a, out);
            collect_vars(b, out);
        }
    }
}

fn checked(op: &'static str, args: &[f64], v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Domain {
            op,
            args: args.to_vec(),
        })
    }
}

fn eval_node(node: &Node, vars: &[f64]) -> Result<f64, EvalError> {
    match node {
        Node::Const(c) => Ok(*c),
        Node::Var(i) => vars
            .get(*i)
            .copied()
            .filter(|v| !v.is_nan())
            .ok_or(EvalError::Unbound(VARIABLES[*i])),
        Node::Unary(op, a) => {
            let a = eval_node(a, vars)?;
            let domain = || EvalError::Domain {
                op: op.name(),
                args: vec![a],
            };
            let v = match op {
                UnaryOp::Neg => -a,
                UnaryOp::Sin => a.sin(),
                UnaryOp::Cos => a.cos(),
                UnaryOp::Abs => a.abs(),
                UnaryOp::Exp => a.exp(),
                UnaryOp::Log if a <= 0.0 => return Err(domain()),
                UnaryOp::Log => a.ln(),
                UnaryOp::Sqrt if a < 0.0 => return Err(domain()),
                UnaryOp::Sqrt => a.sqrt(),
            };
            checked(op.name(), &[a], v)
        }
        Node::Binary(op, a, b) => {
            let a = eval_node(a, vars)?;
            let b = eval_node(b, vars)?;
            let domain = || EvalError::Domain {
                op: op.name(),
                args: vec![a, b],
            };
            let v = match op {
                BinaryOp::Add => a + b,
                BinaryOp::Sub => a - b,
                BinaryOp::Mul => a * b,
                BinaryOp::Div if b == 0.0 => return Err(domain()),
                BinaryOp::Div => a / b,
                BinaryOp::Pow => a.powf(b),
                BinaryOp::Min => a.min(b),
                BinaryOp::Max => a.max(b),
                BinaryOp::Mod if b == 0.0 => return Err(domain()),
                BinaryOp::Mod => a - b * (a / b).floor(),
            };
            checked(op.name(), &[a, b], v)
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn unexpected(&self, expected: &[&'static str]) -> ParseError {
        let found = match self.src[self.pos..].chars().next() {
            Some(c) => format!("`{c}`"),
            None => "end of input".to_string(),
        };
        ParseError::Syntax {
            offset: self.pos,
            found,
            expected: expected.to_vec(),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.unexpected(match c {
                ')' => &["`)`"],
                '(' => &["`(`"],
                _ => &["`,`"],
            }))
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some('+') => BinaryOp::Add,
                Some('-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some('*') => BinaryOp::Mul,
                Some('/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.peek() == Some('-') {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Node::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Binary(BinaryOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        const EXPECTED: &[&str] = &["number", "variable", "function", "`(`", "`-`"];
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => self.identifier(),
            _ => Err(self.unexpected(EXPECTED)),
        }
    }

    fn number(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
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
        let text = &self.src[start..i];
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos = i;
                Ok(Node::Const(v))
            }
            _ => Err(ParseError::InvalidNumber {
                offset: start,
                text: text.to_string(),
            }),
        }
    }

    fn identifier(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        let len = self.src[start..]
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(self.src.len() - start);
        let name = &self.src[start..start + len];
        self.pos += len;

        let unary = match name {
            "sin" => Some(UnaryOp::Sin),
            "cos" => Some(UnaryOp::Cos),
            "abs" => Some(UnaryOp::Abs),
            "exp" => Some(UnaryOp::Exp),
            "log" => Some(UnaryOp::Log),
            "sqrt" => Some(UnaryOp::Sqrt),
            _ => None,
        };
        if let Some(op) = unary {
            self.expect('(')?;
            let arg = self.expr()?;
            self.expect(')')?;
            return Ok(Node::Unary(op, Box::new(arg)));
        }
        let binary = match name {
            "min" => Some(BinaryOp::Min),
            "max" => Some(BinaryOp::Max),
            "mod" => Some(BinaryOp::Mod),
            _ => None,
        };
        if let Some(op) = binary {
            self.expect('(')?;
            let a = self.expr()?;
            self.expect(',')?;
            let b = self.expr()?;
            self.expect(')')?;
            return Ok(Node::Binary(op, Box::new(a), Box::new(b)));
        }
        if self.vars.contains(&name) {
            if let Some(i) = VARIABLES.iter().position(|v| *v == name) {
                return Ok(Node::Var(i));
            }
        }
        Err(ParseError::UnknownIdentifier {
            offset: start,
            name: name.to_string(),
        })
    }
}

impl fmt::Display for Node {
    /// Fully parenthesized infix form; re-parses to an identical tree as long
    /// as constants are nonnegative (the parser never produces negative ones).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) => write!(f, "{c:?}"),
            Node::Var(i) => f.write_str(VARIABLES[*i]),
            Node::Unary(UnaryOp::Neg, a) => write!(f, "(-{a})"),
            Node::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Node::Binary(op, a, b) if op.is_function() => write!(f, "{}({a}, {b})", op.name()),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.name()),
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}
