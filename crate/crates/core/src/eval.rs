//! Numerical evaluation of expressions. Domain violations (logs of
//! non-positive values, even roots of negatives, poles) produce non-finite
//! markers rather than errors.

use crate::expr::{BinaryOp, Expr, UnaryOp};

/// Evaluates one expression at one point. `point` supplies variable values by
/// index; a missing variable yields NaN.
pub fn eval_scalar(expr: &Expr, point: &[f64]) -> f64 {
    match expr {
        Expr::Binary(op, a, b) => {
            let va = eval_scalar(a, point);
            let vb = eval_scalar(b, point);
            eval_binary(*op, va, vb)
        }
        Expr::Unary(op, a) => eval_unary(*op, eval_scalar(a, point)),
        Expr::Var(i) => point.get(*i).copied().unwrap_or(f64::NAN),
        Expr::Int(i) => *i as f64,
        Expr::Const(c) => *c,
    }
}

#[inline]
pub fn eval_binary(op: BinaryOp, a: f64, b: f64) -> f64 {
    match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => a / b,
        // IEEE pow already matches the required domain: negative bases are
        // defined only for integer exponents, everything else is NaN.
        BinaryOp::Pow => a.powf(b),
    }
}

#[inline]
pub fn eval_unary(op: UnaryOp, a: f64) -> f64 {
    match op {
        UnaryOp::Sqrt => a.sqrt(),
        UnaryOp::Pow2 => a * a,
        UnaryOp::Pow3 => a * a * a,
        UnaryOp::Pow4 => a.powi(4),
        UnaryOp::Pow5 => a.powi(5),
        UnaryOp::Pow6 => a.powi(6),
        UnaryOp::Inv => 1.0 / a,
        UnaryOp::Ln => a.ln(),
        UnaryOp::Exp => a.exp(),
        UnaryOp::Sin => a.sin(),
        UnaryOp::Cos => a.cos(),
        UnaryOp::Tan => a.tan(),
        // cos/sin is better behaved than 1/tan at tan's poles.
        UnaryOp::Cot => a.cos() / a.sin(),
        UnaryOp::Asin => a.asin(),
        UnaryOp::Acos => a.acos(),
        UnaryOp::Atan => a.atan(),
        UnaryOp::Acot => (1.0 / a).atan(),
        UnaryOp::Neg => -a,
    }
}

/// Evaluates an expression on a row-major point matrix.
pub fn evaluate(expr: &Expr, inputs: &[f64], n_dims: usize) -> Vec<f64> {
    assert!(n_dims > 0 && inputs.len() % n_dims == 0);
    inputs
        .chunks_exact(n_dims)
        .map(|p| eval_scalar(expr, p))
        .collect()
}
