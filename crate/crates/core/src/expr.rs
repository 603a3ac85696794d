//! Scalar arithmetic expressions used to specify `A`, `f`, `p`, `b` and
//! custom Green's functions in problem files.
//!
//! The grammar is deliberately small:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          // right-associative
//! primary := number | constant | variable | call | '(' expr ')'
//! ```
//!
//! Variables are `t`, `u` and `s`; constants are `pi` and `e`; functions are
//! `sin cos tan exp log sqrt abs gamma` (one argument) and `pow` (two).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{name}` expects {expected} argument(s), found {found} (offset {offset})")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        offset: usize,
    },
    #[error("unbound variable `{0}`")]
    Unbound(Var),
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    T,
    U,
    S,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Var::T => "t",
            Var::U => "u",
            Var::S => "s",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Pow,
    Gamma,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "pow" => Func::Pow,
            "gamma" => Func::Gamma,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Pow => "pow",
            Func::Gamma => "gamma",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Const(Constant),
    Var(Var),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// Values for the free variables of an expression.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Bindings {
    pub t: Option<f64>,
    pub u: Option<f64>,
    pub s: Option<f64>,
}

impl Bindings {
    pub fn t(t: f64) -> Self {
        Bindings {
            t: Some(t),
            ..Default::default()
        }
    }

    pub fn tu(t: f64, u: f64) -> Self {
        Bindings {
            t: Some(t),
            u: Some(u),
            s: None,
        }
    }

    pub fn ts(t: f64, s: f64) -> Self {
        Bindings {
            t: Some(t),
            u: None,
            s: Some(s),
        }
    }

    fn get(&self, v: Var) -> Option<f64> {
        match v {
            Var::T => self.t,
            Var::U => self.u,
            Var::S => self.s,
        }
    }
}

/// An immutable parsed expression together with its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    source: String,
    ast: Node,
}

impl Expression {
    pub fn parse(source: &str) -> Result<Self, ExprError> {
        let ast = Parser::new(source).parse_all()?;
        Ok(Expression {
            source: source.to_string(),
            ast,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Node {
        &self.ast
    }

    /// Canonical, fully parenthesised text that re-parses to an identical tree.
    pub fn serialise(&self) -> String {
        self.ast.to_string()
    }

    pub fn free_variables(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        collect_vars(&self.ast, &mut out);
        out
    }

    pub fn eval(&self, bindings: &Bindings) -> Result<f64, ExprError> {
        eval_node(&self.ast, bindings)
    }

    /// Shorthand for expressions in `t` only.
    pub fn eval_t(&self, t: f64) -> Result<f64, ExprError> {
        self.eval(&Bindings::t(t))
    }

    pub fn eval_tu(&self, t: f64, u: f64) -> Result<f64, ExprError> {
        self.eval(&Bindings::tu(t, u))
    }

    pub fn eval_ts(&self, t: f64, s: f64) -> Result<f64, ExprError> {
        self.eval(&Bindings::ts(t, s))
    }

    /// Checks that every free variable is one of `allowed`.
    pub fn require_vars(&self, allowed: &[Var]) -> Result<(), ExprError> {
        match self.free_variables().into_iter().find(|v| !allowed.contains(v)) {
            Some(v) => Err(ExprError::Unbound(v)),
            None => Ok(()),
        }
    }
}

impl FromStr for Expression {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expression::parse(s)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn collect_vars(node: &Node, out: &mut BTreeSet<Var>) {
    match node {
        Node::Var(v) => {
            out.insert(*v);
        }
        Node::Num(_) | Node::Const(_) => {}
        Node::Neg(a) => collect_vars(a, out),
        Node::Bin(_, a, b) => {
            collect_vars(a, out);
            collect_vars(b, out);
        }
        Node::Call(_, args) => args.iter().for_each(|a| collect_vars(a, out)),
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `{:?}` is the shortest representation that round-trips exactly.
            Node::Num(x) => write!(f, "{x:?}"),
            Node::Const(Constant::Pi) => f.write_str("pi"),
            Node::Const(Constant::E) => f.write_str("e"),
            Node::Var(v) => write!(f, "{v}"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Bin(op, a, b) => write!(f, "({a}{}{b})", op.symbol()),
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn finite(x: f64, what: &str) -> Result<f64, ExprError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ExprError::Domain(format!("{what} produced a non-finite value")))
    }
}

fn eval_node(node: &Node, b: &Bindings) -> Result<f64, ExprError> {
    match node {
        Node::Num(x) => Ok(*x),
        Node::Const(Constant::Pi) => Ok(std::f64::consts::PI),
        Node::Const(Constant::E) => Ok(std::f64::consts::E),
        Node::Var(v) => b.get(*v).ok_or(ExprError::Unbound(*v)),
        Node::Neg(a) => Ok(-eval_node(a, b)?),
        Node::Bin(op, l, r) => {
            let x = eval_node(l, b)?;
            let y = eval_node(r, b)?;
            match op {
                BinOp::Add => finite(x + y, "addition"),
                BinOp::Sub => finite(x - y, "subtraction"),
                BinOp::Mul => finite(x * y, "multiplication"),
                BinOp::Div => {
                    if y == 0.0 {
                        Err(ExprError::Domain(format!("division of {x} by zero")))
                    } else {
                        finite(x / y, "division")
                    }
                }
                BinOp::Pow => power(x, y),
            }
        }
        Node::Call(func, args) => {
            let x = eval_node(&args[0], b)?;
            match func {
                Func::Sin => Ok(x.sin()),
                Func::Cos => Ok(x.cos()),
                Func::Tan => finite(x.tan(), "tan"),
                Func::Exp => finite(x.exp(), "exp"),
                Func::Log => {
                    if x <= 0.0 {
                        Err(ExprError::Domain(format!("log of nonpositive value {x}")))
                    } else {
                        Ok(x.ln())
                    }
                }
                Func::Sqrt => {
                    if x < 0.0 {
                        Err(ExprError::Domain(format!("sqrt of negative value {x}")))
                    } else {
                        Ok(x.sqrt())
                    }
                }
                Func::Abs => Ok(x.abs()),
                Func::Pow => power(x, eval_node(&args[1], b)?),
                Func::Gamma => {
                    if x <= 0.0 && x == x.floor() {
                        Err(ExprError::Domain(format!(
                            "gamma at nonpositive integer {x}"
                        )))
                    } else {
                        finite(statrs::function::gamma::gamma(x), "gamma")
                    }
                }
            }
        }
    }
}

fn power(x: f64, y: f64) -> Result<f64, ExprError> {
    if x == 0.0 && y < 0.0 {
        return Err(ExprError::Domain(format!("0 raised to negative power {y}")));
    }
    let v = x.powf(y);
    if v.is_nan() {
        Err(ExprError::Domain(format!("{x}^{y} is undefined")))
    } else {
        finite(v, "power")
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok,
    tok_start: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            pos: 0,
            tok: Tok::End,
            tok_start: 0,
        }
    }

    fn syntax(&self, offset: usize, message: impl Into<String>) -> ExprError {
        ExprError::Syntax {
            offset,
            message: message.into(),
        }
    }

    fn advance(&mut self) -> Result<(), ExprError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        if self.pos >= bytes.len() {
            self.tok = Tok::End;
            return Ok(());
        }
        let c = bytes[self.pos];
        self.tok = match c {
            b'0'..=b'9' | b'.' => {
                let start = self.pos;
                while self.pos < bytes.len()
                    && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.')
                {
                    self.pos += 1;
                }
                if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E')
                {
                    let mut q = self.pos + 1;
                    if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                        q += 1;
                    }
                    if q < bytes.len() && bytes[q].is_ascii_digit() {
                        while q < bytes.len() && bytes[q].is_ascii_digit() {
                            q += 1;
                        }
                        self.pos = q;
                    }
                }
                let text = &self.src[start..self.pos];
                let value: f64 = text
                    .parse()
                    .map_err(|_| self.syntax(start, format!("malformed number `{text}`")))?;
                if !value.is_finite() {
                    return Err(self.syntax(start, format!("number `{text}` overflows")));
                }
                Tok::Num(value)
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = self.pos;
                while self.pos < bytes.len()
                    && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                Tok::Ident(self.src[start..self.pos].to_string())
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                Tok::Op(c as char)
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b',' => {
                self.pos += 1;
                Tok::Comma
            }
            _ => {
                let ch = self.src[self.pos..].chars().next().unwrap_or('?');
                return Err(self.syntax(self.pos, format!("unexpected character `{ch}`")));
            }
        };
        Ok(())
    }

    fn parse_all(mut self) -> Result<Node, ExprError> {
        if self.src.trim().is_empty() {
            return Err(self.syntax(0, "empty expression"));
        }
        self.advance()?;
        let node = self.expr()?;
        if self.tok != Tok::End {
            return Err(self.syntax(self.tok_start, "unexpected trailing input"));
        }
        Ok(node)
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.tok == Tok::Op('-') {
            self.advance()?;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.primary()?;
        if self.tok == Tok::Op('^') {
            self.advance()?;
            let exponent = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        let start = self.tok_start;
        match self.tok.clone() {
            Tok::Num(x) => {
                self.advance()?;
                Ok(Node::Num(x))
            }
            Tok::LParen => {
                self.advance()?;
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.advance()?;
                match name.as_str() {
                    "t" => return Ok(Node::Var(Var::T)),
                    "u" => return Ok(Node::Var(Var::U)),
                    "s" => return Ok(Node::Var(Var::S)),
                    "pi" => return Ok(Node::Const(Constant::Pi)),
                    "e" => return Ok(Node::Const(Constant::E)),
                    _ => {}
                }
                let func = Func::lookup(&name).ok_or_else(|| ExprError::UnknownIdentifier {
                    name: name.clone(),
                    offset: start,
                })?;
                if self.tok != Tok::LParen {
                    return Err(self.syntax(self.tok_start, format!("expected `(` after `{name}`")));
                }
                self.advance()?;
                let mut args = Vec::new();
                if self.tok != Tok::RParen {
                    loop {
                        args.push(self.expr()?);
                        if self.tok == Tok::Comma {
                            self.advance()?;
                        } else {
                            break;
                        }
                    }
                }
                self.expect_rparen()?;
                if args.len() != func.arity() {
                    return Err(ExprError::Arity {
                        name,
                        expected: func.arity(),
                        found: args.len(),
                        offset: start,
                    });
                }
                Ok(Node::Call(func, args))
            }
            Tok::End => Err(self.syntax(start, "unexpected end of input")),
            other => Err(self.syntax(start, format!("unexpected token {other:?}"))),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        if self.tok != Tok::RParen {
            return Err(self.syntax(self.tok_start, "expected `)`"));
        }
        self.advance()
    }
}
