//! Expression trees over the generator/model operator set.
//!
//! An [`Expr`] is the central object of the crate: formulas are sampled as
//! trees, normalized, serialized to token sequences, evaluated on point sets
//! and differentiated with respect to their constant leaves.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Integer leaves are restricted to this closed range.
pub const INT_LEAF_MIN: i64 = -5;
pub const INT_LEAF_MAX: i64 = 5;

/// Constant leaves must be finite, nonzero and have magnitude in
/// `[CONST_MIN_ABS, CONST_MAX_ABS]`.
pub const CONST_MIN_ABS: f64 = 1e-10;
pub const CONST_MAX_ABS: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Mul,
    Pow,
    /// Generator-only; normalization rewrites `a - b` into `a + neg(b)`.
    Sub,
    /// Generator-only; normalization rewrites `a / b` into `a * pow(b, -1)`.
    Div,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 5] = [
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::Mul,
        BinaryOp::Div,
        BinaryOp::Pow,
    ];

    /// Whether the operator has a token in the model vocabulary.
    pub fn in_vocab(self) -> bool {
        matches!(self, BinaryOp::Add | BinaryOp::Mul | BinaryOp::Pow)
    }

    pub fn token(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Mul => "*",
            BinaryOp::Pow => "pow",
            BinaryOp::Sub => "-",
            BinaryOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnaryOp {
    Sqrt,
    Pow2,
    Pow3,
    Ln,
    Exp,
    Sin,
    Cos,
    Tan,
    Cot,
    Asin,
    Acos,
    Atan,
    Acot,
    Neg,
    /// Generator-only; rewritten to `pow(a, -1)`.
    Inv,
    /// Generator-only; rewritten to `pow(a, 4)`.
    Pow4,
    /// Generator-only; rewritten to `pow(a, 5)`.
    Pow5,
    /// Generator-only; rewritten to `pow(a, 6)`.
    Pow6,
}

impl UnaryOp {
    /// Vocabulary order follows the model's token table.
    pub const VOCAB: [UnaryOp; 14] = [
        UnaryOp::Sqrt,
        UnaryOp::Pow2,
        UnaryOp::Pow3,
        UnaryOp::Ln,
        UnaryOp::Exp,
        UnaryOp::Sin,
        UnaryOp::Cos,
        UnaryOp::Tan,
        UnaryOp::Cot,
        UnaryOp::Asin,
        UnaryOp::Acos,
        UnaryOp::Atan,
        UnaryOp::Acot,
        UnaryOp::Neg,
    ];

    pub fn in_vocab(self) -> bool {
        !matches!(
            self,
            UnaryOp::Inv | UnaryOp::Pow4 | UnaryOp::Pow5 | UnaryOp::Pow6
        )
    }

    pub fn token(self) -> &'static str {
        match self {
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Pow2 => "pow2",
            UnaryOp::Pow3 => "pow3",
            UnaryOp::Ln => "ln",
            UnaryOp::Exp => "exp",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Cot => "cot",
            UnaryOp::Asin => "asin",
            UnaryOp::Acos => "acos",
            UnaryOp::Atan => "atan",
            UnaryOp::Acot => "acot",
            UnaryOp::Neg => "neg",
            UnaryOp::Inv => "inv",
            UnaryOp::Pow4 => "pow4",
            UnaryOp::Pow5 => "pow5",
            UnaryOp::Pow6 => "pow6",
        }
    }
}

/// Expression tree node. Binary nodes have exactly two children, unary nodes
/// one; variables are indexed from zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Unary(UnaryOp, Box<Expr>),
    Var(usize),
    Int(i64),
    Const(f64),
}

impl Expr {
    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn unary(op: UnaryOp, a: Expr) -> Expr {
        Expr::Unary(op, Box::new(a))
    }

    /// Number of tree nodes, which equals the preorder token count.
    pub fn node_count(&self) -> usize {
        match self {
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
            Expr::Unary(_, a) => 1 + a.node_count(),
            _ => 1,
        }
    }

    pub fn has_vars(&self) -> bool {
        match self {
            Expr::Binary(_, a, b) => a.has_vars() || b.has_vars(),
            Expr::Unary(_, a) => a.has_vars(),
            Expr::Var(_) => true,
            _ => false,
        }
    }

    /// Largest variable index in the tree, if any.
    pub fn max_var_index(&self) -> Option<usize> {
        match self {
            Expr::Binary(_, a, b) => match (a.max_var_index(), b.max_var_index()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
            Expr::Unary(_, a) => a.max_var_index(),
            Expr::Var(i) => Some(*i),
            _ => None,
        }
    }

    /// Number of input dimensions needed to evaluate the tree.
    pub fn dims(&self) -> usize {
        self.max_var_index().map_or(0, |i| i + 1)
    }

    /// Values of all constant leaves in preorder.
    pub fn constants(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit_preorder(&mut |e| {
            if let Expr::Const(c) = e {
                out.push(*c);
            }
        });
        out
    }

    /// Rebuilds the tree with constant leaves replaced in preorder order.
    /// Panics if `values` does not match the number of constant leaves.
    pub fn with_constants(&self, values: &[f64]) -> Expr {
        fn go(e: &Expr, values: &[f64], next: &mut usize) -> Expr {
            match e {
                Expr::Binary(op, a, b) => {
                    let a = go(a, values, next);
                    let b = go(b, values, next);
                    Expr::binary(*op, a, b)
                }
                Expr::Unary(op, a) => {
                    let a = go(a, values, next);
                    Expr::unary(*op, a)
                }
                Expr::Const(_) => {
                    let v = values[*next];
                    *next += 1;
                    Expr::Const(v)
                }
                other => other.clone(),
            }
        }
        let mut next = 0;
        let out = go(self, values, &mut next);
        assert_eq!(next, values.len(), "constant count mismatch");
        out
    }

    pub fn visit_preorder<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Binary(_, a, b) => {
                a.visit_preorder(f);
                b.visit_preorder(f);
            }
            Expr::Unary(_, a) => a.visit_preorder(f),
            _ => {}
        }
    }

    /// True when every operator in the tree has a vocabulary token.
    pub fn vocab_ops_only(&self) -> bool {
        let mut ok = true;
        self.visit_preorder(&mut |e| match e {
            Expr::Binary(op, _, _) if !op.in_vocab() => ok = false,
            Expr::Unary(op, _) if !op.in_vocab() => ok = false,
            _ => {}
        });
        ok
    }

    /// Parses a whitespace-separated preorder expression, e.g.
    /// `"+ * x 0.017 1781.5"`. Numbers that are integers in `[-5, 5]` become
    /// integer leaves, all other numbers constant leaves.
    pub fn parse_prefix(text: &str) -> Result<Expr, ParseExprError> {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.is_empty() {
            return Err(ParseExprError::Empty);
        }
        let mut pos = 0;
        let expr = parse_at(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(ParseExprError::Trailing(tokens[pos].to_string()));
        }
        Ok(expr)
    }
}

fn parse_at(tokens: &[&str], pos: &mut usize) -> Result<Expr, ParseExprError> {
    let tok = *tokens
        .get(*pos)
        .ok_or(ParseExprError::UnexpectedEnd)?;
    *pos += 1;
    if let Some(op) = BinaryOp::ALL.iter().find(|op| op.token() == tok) {
        let a = parse_at(tokens, pos)?;
        let b = parse_at(tokens, pos)?;
        return Ok(Expr::binary(*op, a, b));
    }
    let all_unary = [
        UnaryOp::Sqrt,
        UnaryOp::Pow2,
        UnaryOp::Pow3,
        UnaryOp::Pow4,
        UnaryOp::Pow5,
        UnaryOp::Pow6,
        UnaryOp::Ln,
        UnaryOp::Exp,
        UnaryOp::Sin,
        UnaryOp::Cos,
        UnaryOp::Tan,
        UnaryOp::Cot,
        UnaryOp::Asin,
        UnaryOp::Acos,
        UnaryOp::Atan,
        UnaryOp::Acot,
        UnaryOp::Neg,
        UnaryOp::Inv,
    ];
    if let Some(op) = all_unary.iter().find(|op| op.token() == tok) {
        let a = parse_at(tokens, pos)?;
        return Ok(Expr::unary(*op, a));
    }
    match tok {
        "x" => return Ok(Expr::Var(0)),
        "y" => return Ok(Expr::Var(1)),
        _ => {}
    }
    if let Ok(i) = tok.parse::<i64>() {
        if (INT_LEAF_MIN..=INT_LEAF_MAX).contains(&i) {
            return Ok(Expr::Int(i));
        }
        return Ok(Expr::Const(i as f64));
    }
    if let Ok(c) = tok.parse::<f64>() {
        return Ok(Expr::Const(c));
    }
    Err(ParseExprError::UnknownToken(tok.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseExprError {
    #[error("empty expression")]
    Empty,
    #[error("expression ends before all operands are supplied")]
    UnexpectedEnd,
    #[error("unknown token `{0}`")]
    UnknownToken(String),
    #[error("trailing input starting at `{0}`")]
    Trailing(String),
}

// Infix rendering with minimal parentheses; used in reports and the CLI.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn prec(e: &Expr) -> u8 {
            match e {
                Expr::Binary(BinaryOp::Add | BinaryOp::Sub, _, _) => 1,
                Expr::Binary(BinaryOp::Mul | BinaryOp::Div, _, _) => 2,
                Expr::Binary(BinaryOp::Pow, _, _) => 3,
                Expr::Unary(UnaryOp::Neg, _) => 1,
                Expr::Const(c) if *c < 0.0 => 1,
                Expr::Int(i) if *i < 0 => 1,
                _ => 4,
            }
        }
        fn wrap(e: &Expr, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if prec(e) < min_prec {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Binary(BinaryOp::Pow, a, b) => {
                wrap(a, 4, f)?;
                write!(f, "^")?;
                wrap(b, 4, f)
            }
            Expr::Binary(op, a, b) => {
                let (p, sym) = match op {
                    BinaryOp::Add => (1, " + "),
                    BinaryOp::Sub => (1, " - "),
                    BinaryOp::Mul => (2, "*"),
                    BinaryOp::Div => (2, "/"),
                    BinaryOp::Pow => unreachable!(),
                };
                wrap(a, p, f)?;
                write!(f, "{sym}")?;
                wrap(b, p + 1, f)
            }
            Expr::Unary(UnaryOp::Neg, a) => {
                write!(f, "-")?;
                wrap(a, 2, f)
            }
            Expr::Unary(UnaryOp::Pow2, a) => {
                wrap(a, 4, f)?;
                write!(f, "^2")
            }
            Expr::Unary(UnaryOp::Pow3, a) => {
                wrap(a, 4, f)?;
                write!(f, "^3")
            }
            Expr::Unary(op, a) => write!(f, "{}({a})", op.token()),
            Expr::Var(0) => write!(f, "x"),
            Expr::Var(1) => write!(f, "y"),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Int(i) => write!(f, "{i}"),
            Expr::Const(c) => write!(f, "{c}"),
        }
    }
}

/// Builders used by tests and the benchmark registry.
pub mod build {
    use super::*;

    pub fn x() -> Expr {
        Expr::Var(0)
    }
    pub fn y() -> Expr {
        Expr::Var(1)
    }
    pub fn int(i: i64) -> Expr {
        Expr::Int(i)
    }
    pub fn c(v: f64) -> Expr {
        Expr::Const(v)
    }
    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinaryOp::Add, a, b)
    }
    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinaryOp::Sub, a, b)
    }
    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinaryOp::Mul, a, b)
    }
    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinaryOp::Div, a, b)
    }
    pub fn pow(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinaryOp::Pow, a, b)
    }
    /// Integer power, using the dedicated square/cube operators where they
    /// exist and a `pow` node with an appropriate leaf otherwise.
    pub fn ipow(a: Expr, k: i64) -> Expr {
        match k {
            2 => Expr::unary(UnaryOp::Pow2, a),
            3 => Expr::unary(UnaryOp::Pow3, a),
            k if (INT_LEAF_MIN..=INT_LEAF_MAX).contains(&k) => pow(a, int(k)),
            k => pow(a, c(k as f64)),
        }
    }
    pub fn neg(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Neg, a)
    }
    pub fn sqrt(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Sqrt, a)
    }
    pub fn ln(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Ln, a)
    }
    pub fn exp(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Exp, a)
    }
    pub fn sin(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Sin, a)
    }
    pub fn cos(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Cos, a)
    }
    pub fn tan(a: Expr) -> Expr {
        Expr::unary(UnaryOp::Tan, a)
    }
}
