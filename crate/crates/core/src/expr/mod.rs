//! Arithmetic expression DSL for coefficients, delays, kernels and activations.
//!
//! Every expression has exactly one free variable (`m` for time, `u` for
//! activation arguments, `l` for kernel indices). Expressions are immutable
//! once parsed and can be evaluated concurrently.
//!
//! ```text
//! expr  := term (("+"|"-") term)*
//! term  := factor (("*"|"/") factor)*
//! factor:= "-" factor | power
//! power := atom ("^" factor)?
//! atom  := number | ident | ident "(" expr ("," expr)* ")" | "(" expr ")"
//! ```

mod parser;

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};
use thiserror::Error;

pub use parser::parse_in;

/// Errors raised while parsing expression source text. Positions are
/// 0-based byte offsets into the source.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: expected {}", expected.join(" or "))]
    Syntax { pos: usize, expected: Vec<String> },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("unknown function `{name}` at position {pos}")]
    UnknownFunction { pos: usize, name: String },
    #[error("function `{name}` at position {pos} takes {expected} argument(s), got {found}")]
    Arity {
        pos: usize,
        name: String,
        expected: String,
        found: usize,
    },
    #[error("invalid number `{text}` at position {pos}")]
    InvalidNumber { pos: usize, text: String },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::UnknownIdentifier { pos, .. }
            | ParseError::UnknownFunction { pos, .. }
            | ParseError::Arity { pos, .. }
            | ParseError::InvalidNumber { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("argument outside the domain of `{0}`")]
    Domain(&'static str),
    #[error("result is not finite")]
    NonFinite,
    #[error("evaluation point is not finite")]
    NonFiniteInput,
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
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedConst {
    Pi,
    E,
}

impl NamedConst {
    pub fn value(self) -> f64 {
        match self {
            NamedConst::Pi => std::f64::consts::PI,
            NamedConst::E => std::f64::consts::E,
        }
    }

    fn name(self) -> &'static str {
        match self {
            NamedConst::Pi => "pi",
            NamedConst::E => "e",
        }
    }
}

/// The closed set of builtin functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Arctan,
    Tanh,
    Exp,
    Sqrt,
    Abs,
    Floor,
    Min,
    Max,
    Sign,
    Pow,
}

impl Func {
    pub const ALL: [Func; 13] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Arctan,
        Func::Tanh,
        Func::Exp,
        Func::Sqrt,
        Func::Abs,
        Func::Floor,
        Func::Min,
        Func::Max,
        Func::Sign,
        Func::Pow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Arctan => "arctan",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Floor => "floor",
            Func::Min => "min",
            Func::Max => "max",
            Func::Sign => "sign",
            Func::Pow => "pow",
        }
    }

    pub fn lookup(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    /// Accepted argument counts as `(min, max)`; `None` means unbounded.
    fn arity(self) -> (usize, Option<usize>) {
        match self {
            Func::Min | Func::Max => (2, None),
            Func::Pow => (2, Some(2)),
            _ => (1, Some(1)),
        }
    }

    fn apply(self, args: &[f64]) -> Result<f64, EvalError> {
        let x = args[0];
        let v = match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Arctan => x.atan(),
            Func::Tanh => x.tanh(),
            Func::Exp => x.exp(),
            Func::Sqrt => {
                if x < 0.0 {
                    return Err(EvalError::Domain("sqrt"));
                }
                x.sqrt()
            }
            Func::Abs => x.abs(),
            Func::Floor => x.floor(),
            Func::Sign => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Func::Min => args.iter().copied().fold(f64::INFINITY, f64::min),
            Func::Max => args.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Func::Pow => power(x, args[1])?,
        };
        if v.is_nan() {
            Err(EvalError::Domain(self.name()))
        } else if !v.is_finite() {
            Err(EvalError::NonFinite)
        } else {
            Ok(v)
        }
    }
}

fn power(base: f64, exponent: f64) -> Result<f64, EvalError> {
    if base == 0.0 && exponent < 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    let v = base.powf(exponent);
    if v.is_nan() {
        Err(EvalError::Domain("pow"))
    } else {
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Const(NamedConst),
    Var,
    Neg(Box<Node>),
    Binary {
        op: BinOp,
        lhs: Box<Node>,
        rhs: Box<Node>,
    },
    Call {
        func: Func,
        args: Vec<Node>,
    },
}

impl Node {
    pub fn num(x: f64) -> Node {
        Node::Num(x)
    }

    pub fn binary(op: BinOp, lhs: Node, rhs: Node) -> Node {
        Node::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    fn eval(&self, x: f64) -> Result<f64, EvalError> {
        let v = match self {
            Node::Num(v) => *v,
            Node::Const(c) => c.value(),
            Node::Var => x,
            Node::Neg(inner) => -inner.eval(x)?,
            Node::Binary { op, lhs, rhs } => {
                let a = lhs.eval(x)?;
                let b = rhs.eval(x)?;
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
                    BinOp::Pow => power(a, b)?,
                }
            }
            Node::Call { func, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(a.eval(x)?);
                }
                func.apply(&vals)?
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn mentions_var(&self) -> bool {
        match self {
            Node::Num(_) | Node::Const(_) => false,
            Node::Var => true,
            Node::Neg(inner) => inner.mentions_var(),
            Node::Binary { lhs, rhs, .. } => lhs.mentions_var() || rhs.mentions_var(),
            Node::Call { args, .. } => args.iter().any(Node::mentions_var),
        }
    }

    fn substitute(&self, replacement: &Node) -> Node {
        match self {
            Node::Var => replacement.clone(),
            Node::Num(_) | Node::Const(_) => self.clone(),
            Node::Neg(inner) => Node::Neg(Box::new(inner.substitute(replacement))),
            Node::Binary { op, lhs, rhs } => Node::Binary {
                op: *op,
                lhs: Box::new(lhs.substitute(replacement)),
                rhs: Box::new(rhs.substitute(replacement)),
            },
            Node::Call { func, args } => Node::Call {
                func: *func,
                args: args.iter().map(|a| a.substitute(replacement)).collect(),
            },
        }
    }

    fn write(&self, var: &str, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) => {
                if v.is_sign_negative() {
                    write!(f, "(-{:?})", -v)
                } else {
                    write!(f, "{:?}", v)
                }
            }
            Node::Const(c) => f.write_str(c.name()),
            Node::Var => f.write_str(var),
            Node::Neg(inner) => {
                f.write_str("(-")?;
                inner.write(var, f)?;
                f.write_str(")")
            }
            Node::Binary { op, lhs, rhs } => {
                f.write_str("(")?;
                lhs.write(var, f)?;
                write!(f, " {} ", op.symbol())?;
                rhs.write(var, f)?;
                f.write_str(")")
            }
            Node::Call { func, args } => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    a.write(var, f)?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A parsed expression in one named free variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Arc<Node>,
    var: Arc<str>,
}

impl Expr {
    /// Parses `source` with free variable `var`.
    pub fn parse(source: &str, var: &str) -> Result<Expr, ParseError> {
        let root = parse_in(source, var)?;
        Ok(Expr::from_node(root, var))
    }

    pub fn from_node(root: Node, var: &str) -> Expr {
        Expr {
            root: Arc::new(root),
            var: Arc::from(var),
        }
    }

    pub fn constant(value: f64, var: &str) -> Expr {
        Expr::from_node(Node::Num(value), var)
    }

    pub fn zero(var: &str) -> Expr {
        Expr::constant(0.0, var)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        if !x.is_finite() {
            return Err(EvalError::NonFiniteInput);
        }
        self.root.eval(x)
    }

    /// True when the free variable does not occur.
    pub fn is_constant(&self) -> bool {
        !self.root.mentions_var()
    }

    /// True when the expression is the literal `0` (or a constant that
    /// evaluates to exactly zero).
    pub fn is_zero(&self) -> bool {
        self.is_constant() && matches!(self.root.eval(0.0), Ok(v) if v == 0.0)
    }

    /// Replaces every occurrence of the variable by `replacement`.
    pub fn substitute(&self, replacement: &Node) -> Expr {
        Expr::from_node(self.root.substitute(replacement), &self.var)
    }

    /// `self(var + shift) - offset`
    pub fn shifted(&self, shift: f64, offset: f64) -> Expr {
        let arg = Node::binary(BinOp::Add, Node::Var, Node::num(shift));
        let body = self.root.substitute(&arg);
        Expr::from_node(Node::binary(BinOp::Sub, body, Node::num(offset)), &self.var)
    }

    /// `self(factor * var)`
    pub fn prescaled(&self, factor: f64) -> Expr {
        self.substitute(&Node::binary(BinOp::Mul, Node::num(factor), Node::Var))
    }

    /// `self / divisor`
    pub fn divided_by(&self, divisor: f64) -> Expr {
        Expr::from_node(
            Node::binary(BinOp::Div, (*self.root).clone(), Node::num(divisor)),
            &self.var,
        )
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(&self.var, f)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Evaluates a variable-free expression such as `"1/6"` or `"2*pi"`.
pub fn eval_constant(source: &str) -> Result<f64, crate::Error> {
    // `x` is never used by constant text; it only satisfies the single-variable form.
    let e = Expr::parse(source, "x")?;
    if !e.is_constant() {
        return Err(crate::Error::Parse(ParseError::UnknownIdentifier {
            pos: source.find('x').unwrap_or(0),
            name: "x".into(),
        }));
    }
    Ok(e.eval(0.0)?)
}
