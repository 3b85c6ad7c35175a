//! Rewrites generator-only operators into vocabulary form, folds constant
//! subtrees and removes trivial identities. This replaces an external CAS
//! simplifier with a deterministic, total procedure.

use crate::eval::eval_scalar;
use crate::expr::{BinaryOp, Expr, UnaryOp, CONST_MAX_ABS, CONST_MIN_ABS, INT_LEAF_MAX, INT_LEAF_MIN};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("constant folding produced an unrepresentable value {0}")]
pub struct FoldError(pub f64);

/// Maps `-`, `/`, `inv` and `pow4..pow6` onto the vocabulary operator set.
/// Does not fold; see [`normalize`] for the full pass.
pub fn rewrite_to_vocab(expr: &Expr) -> Expr {
    match expr {
        Expr::Binary(op, a, b) => {
            let a = rewrite_to_vocab(a);
            let b = rewrite_to_vocab(b);
            match op {
                BinaryOp::Sub => Expr::binary(BinaryOp::Add, a, Expr::unary(UnaryOp::Neg, b)),
                BinaryOp::Div => Expr::binary(
                    BinaryOp::Mul,
                    a,
                    Expr::binary(BinaryOp::Pow, b, Expr::Int(-1)),
                ),
                op => Expr::binary(*op, a, b),
            }
        }
        Expr::Unary(op, a) => {
            let a = rewrite_to_vocab(a);
            match op {
                UnaryOp::Inv => Expr::binary(BinaryOp::Pow, a, Expr::Int(-1)),
                UnaryOp::Pow4 => Expr::binary(BinaryOp::Pow, a, Expr::Int(4)),
                UnaryOp::Pow5 => Expr::binary(BinaryOp::Pow, a, Expr::Int(5)),
                UnaryOp::Pow6 => Expr::binary(BinaryOp::Pow, a, Expr::Const(6.0)),
                op => Expr::unary(*op, a),
            }
        }
        leaf => leaf.clone(),
    }
}

fn fold_value(expr: &Expr) -> Result<Expr, FoldError> {
    let v = eval_scalar(expr, &[]);
    if !v.is_finite() {
        return Err(FoldError(v));
    }
    if v == 0.0 {
        return Ok(Expr::Int(0));
    }
    if v.fract() == 0.0 && (INT_LEAF_MIN as f64..=INT_LEAF_MAX as f64).contains(&v) {
        return Ok(Expr::Int(v as i64));
    }
    if !(CONST_MIN_ABS..=CONST_MAX_ABS).contains(&v.abs()) {
        return Err(FoldError(v));
    }
    Ok(Expr::Const(v))
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Int(1))
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Int(0))
}

fn fold(expr: &Expr) -> Result<Expr, FoldError> {
    match expr {
        Expr::Binary(op, a, b) => {
            let a = fold(a)?;
            let b = fold(b)?;
            if !a.has_vars() && !b.has_vars() {
                return fold_value(&Expr::binary(*op, a, b));
            }
            // Identity elimination on the surviving structure.
            match op {
                BinaryOp::Add if is_zero(&a) => Ok(b),
                BinaryOp::Add if is_zero(&b) => Ok(a),
                BinaryOp::Mul if is_one(&a) => Ok(b),
                BinaryOp::Mul if is_one(&b) => Ok(a),
                BinaryOp::Pow if is_one(&b) => Ok(a),
                op => Ok(Expr::binary(*op, a, b)),
            }
        }
        Expr::Unary(op, a) => {
            let a = fold(a)?;
            if !a.has_vars() {
                return fold_value(&Expr::unary(*op, a));
            }
            match (op, a) {
                (UnaryOp::Neg, Expr::Unary(UnaryOp::Neg, inner)) => Ok(*inner),
                (op, a) => Ok(Expr::unary(*op, a)),
            }
        }
        leaf => Ok(leaf.clone()),
    }
}

/// Full normalization: vocabulary rewrite, then constant folding and identity
/// elimination. The result uses vocabulary operators only.
pub fn normalize(expr: &Expr) -> Result<Expr, FoldError> {
    fold(&rewrite_to_vocab(expr))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Complexity {
    pub token_count: usize,
    pub is_constant: bool,
    pub is_linear: bool,
}

/// Structural complexity of a normalized expression. `is_linear` is a
/// post-fold structural test: the expression is a polynomial of total degree
/// at most one.
pub fn complexity(expr: &Expr) -> Complexity {
    Complexity {
        token_count: expr.node_count(),
        is_constant: !expr.has_vars(),
        is_linear: poly_degree(expr).is_some_and(|d| d <= 1),
    }
}

/// Total degree when the expression is a polynomial, `None` otherwise.
fn poly_degree(expr: &Expr) -> Option<u64> {
    match expr {
        Expr::Int(_) | Expr::Const(_) => Some(0),
        Expr::Var(_) => Some(1),
        Expr::Binary(BinaryOp::Add | BinaryOp::Sub, a, b) => {
            Some(poly_degree(a)?.max(poly_degree(b)?))
        }
        Expr::Binary(BinaryOp::Mul, a, b) => Some(poly_degree(a)? + poly_degree(b)?),
        Expr::Binary(BinaryOp::Pow, a, b) => match **b {
            Expr::Int(k) if k >= 0 => Some(poly_degree(a)? * k as u64),
            _ => None,
        },
        Expr::Binary(BinaryOp::Div, _, _) => None,
        Expr::Unary(UnaryOp::Neg, a) => poly_degree(a),
        Expr::Unary(UnaryOp::Pow2, a) => Some(poly_degree(a)? * 2),
        Expr::Unary(UnaryOp::Pow3, a) => Some(poly_degree(a)? * 3),
        Expr::Unary(UnaryOp::Pow4, a) => Some(poly_degree(a)? * 4),
        Expr::Unary(UnaryOp::Pow5, a) => Some(poly_degree(a)? * 5),
        Expr::Unary(UnaryOp::Pow6, a) => Some(poly_degree(a)? * 6),
        Expr::Unary(_, _) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::build::*;

    #[test]
    fn division_rewrites_to_pow() {
        let e = rewrite_to_vocab(&div(x(), int(2)));
        assert_eq!(e, mul(x(), pow(int(2), int(-1))));
        // The full pass folds the constant power.
        let n = normalize(&div(x(), int(2))).unwrap();
        assert_eq!(n, mul(x(), c(0.5)));
    }

    #[test]
    fn constant_subtrees_fold() {
        assert_eq!(normalize(&add(int(2), int(3))).unwrap(), int(5));
        assert_eq!(normalize(&mul(int(3), int(4))).unwrap(), c(12.0));
        assert_eq!(normalize(&add(int(2), int(-2))).unwrap(), int(0));
    }

    #[test]
    fn pow4_minus_one_composes_both_rules() {
        let e = sub(Expr::unary(UnaryOp::Pow4, x()), int(1));
        let n = normalize(&e).unwrap();
        assert_eq!(n, add(pow(x(), int(4)), int(-1)));
        // Semantics preserved on a few points.
        for &p in &[0.5, 1.0, -2.0, 3.3] {
            let orig = crate::eval::eval_scalar(&e, &[p]);
            let norm = crate::eval::eval_scalar(&n, &[p]);
            assert!((orig - norm).abs() <= 1e-9 * orig.abs().max(1.0));
        }
    }

    #[test]
    fn identities_are_eliminated() {
        assert_eq!(normalize(&add(x(), int(0))).unwrap(), x());
        assert_eq!(normalize(&mul(int(1), x())).unwrap(), x());
        assert_eq!(normalize(&neg(neg(x()))).unwrap(), x());
        assert_eq!(normalize(&pow(x(), int(1))).unwrap(), x());
    }

    #[test]
    fn folding_out_of_range_errors() {
        // exp(exp(5)) overflows the constant range.
        let e = exp(exp(int(5)));
        assert!(normalize(&e).is_err());
        // ln(-1) is non-finite.
        assert!(normalize(&ln(int(-1))).is_err());
    }

    #[test]
    fn complexity_examples() {
        let five = normalize(&int(5)).unwrap();
        assert_eq!(
            complexity(&five),
            Complexity {
                token_count: 1,
                is_constant: true,
                is_linear: true
            }
        );

        let lin = normalize(&add(mul(int(2), x()), int(3))).unwrap();
        let cx = complexity(&lin);
        assert!(!cx.is_constant);
        assert!(cx.is_linear);

        let s = normalize(&sin(x())).unwrap();
        assert_eq!(
            complexity(&s),
            Complexity {
                token_count: 2,
                is_constant: false,
                is_linear: false
            }
        );

        let quad = normalize(&mul(x(), x())).unwrap();
        assert!(!complexity(&quad).is_linear);
    }

    #[test]
    fn inv_rewrites_to_pow() {
        let n = normalize(&Expr::unary(UnaryOp::Inv, x())).unwrap();
        assert_eq!(n, pow(x(), int(-1)));
    }
}
