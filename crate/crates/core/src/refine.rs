//! Reverse-mode differentiation of expression MSE with respect to constant
//! leaves, and the local gradient search used to tune candidate formulas.

use crate::expr::{BinaryOp, Expr, UnaryOp};
use crate::points::PointSet;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizerKind {
    /// Plain gradient descent.
    Gd,
    /// Adaptive-moment gradient descent.
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub max_iterations: usize,
    /// Consecutive iterations without relative improvement before stopping.
    pub patience: usize,
    pub rel_improvement: f64,
    pub clip_norm: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            optimizer: OptimizerKind::Adam,
            learning_rate: 0.05,
            max_iterations: 500,
            patience: 20,
            rel_improvement: 1e-6,
            clip_norm: 10.0,
        }
    }
}

/// Mean squared error over the points where the expression evaluates finite.
/// Returns +inf when fewer than half of the points are finite (or when none
/// are); non-finite values are data, not errors.
pub fn mse(expr: &Expr, points: &PointSet) -> f64 {
    let tape = ExprTape::new(expr);
    let mut slots = expr.constants();
    tape.mse_forward(&mut slots, points)
}

/// Loss and gradient with identical masking on both: a point contributes
/// only when the forward value and every constant's derivative through it
/// are finite.
#[derive(Debug, Clone)]
pub struct ConstantGrad {
    /// Forward-masked canonical loss, as reported by [`mse`].
    pub mse: f64,
    /// Gradient of the grad-masked loss, aligned with preorder constants.
    pub grad: Vec<f64>,
    /// Per-point inclusion mask used for the gradient.
    pub mask: Vec<bool>,
    /// Points contributing to the gradient.
    pub n_grad: usize,
}

pub fn mse_and_grad(expr: &Expr, points: &PointSet) -> ConstantGrad {
    let tape = ExprTape::new(expr);
    let slots = expr.constants();
    tape.mse_and_grad(&slots, points)
}

/// Loss restricted to an explicit point mask; the finite-difference oracle in
/// the tests differentiates exactly this quantity.
pub fn mse_masked(expr: &Expr, points: &PointSet, mask: &[bool]) -> f64 {
    assert_eq!(mask.len(), points.n_points());
    let tape = ExprTape::new(expr);
    let slots = expr.constants();
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut values = vec![0.0; tape.nodes.len()];
    for (i, &keep) in mask.iter().enumerate() {
        if !keep {
            continue;
        }
        let v = tape.forward(&slots, points.row(i), &mut values);
        let r = v - points.outputs[i];
        sum += r * r;
        used += 1;
    }
    if used == 0 {
        f64::INFINITY
    } else {
        sum / used as f64
    }
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub expr: Expr,
    pub mse: f64,
    pub iterations: usize,
}

/// Tunes all constant leaves against the point set, returning the best
/// iterate seen. The reported error never exceeds the input expression's.
pub fn refine(expr: &Expr, points: &PointSet, opts: &RefineOptions) -> RefineOutcome {
    let init = expr.constants();
    let n = init.len();
    let initial_mse = mse(expr, points);
    if n == 0 {
        return RefineOutcome {
            expr: expr.clone(),
            mse: initial_mse,
            iterations: 0,
        };
    }

    let tape = ExprTape::new(expr);
    let mut slots = init.clone();
    let mut best_slots = init;
    let mut best_mse = initial_mse;
    let mut streak = 0usize;
    let mut iterations = 0usize;

    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    for it in 1..=opts.max_iterations {
        let g = tape.mse_and_grad(&slots, points);
        if g.n_grad == 0 {
            break;
        }
        // Track the best iterate and the improvement streak.
        if g.mse < best_mse {
            let rel = if best_mse.is_finite() && best_mse != 0.0 {
                (best_mse - g.mse) / best_mse.abs()
            } else {
                1.0
            };
            best_mse = g.mse;
            best_slots.copy_from_slice(&slots);
            if rel < opts.rel_improvement {
                streak += 1;
            } else {
                streak = 0;
            }
        } else {
            streak += 1;
        }
        if streak >= opts.patience {
            break;
        }

        let mut grad = g.grad;
        let norm: f64 = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() {
            break;
        }
        if norm > opts.clip_norm {
            let scale = opts.clip_norm / norm;
            for gi in &mut grad {
                *gi *= scale;
            }
        }
        match opts.optimizer {
            OptimizerKind::Gd => {
                for (s, gi) in slots.iter_mut().zip(&grad) {
                    *s -= opts.learning_rate * gi;
                }
            }
            OptimizerKind::Adam => {
                // Cosine-annealed step size: wide early steps escape the
                // shallow side minima of oscillatory fits, late steps give
                // full precision. The best iterate is kept either way.
                let anneal =
                    0.5 * (1.0 + (std::f64::consts::PI * (it - 1) as f64
                        / opts.max_iterations as f64)
                        .cos());
                let lr = opts.learning_rate * anneal;
                let t = it as f64;
                let bc1 = 1.0 - BETA1.powf(t);
                let bc2 = 1.0 - BETA2.powf(t);
                for i in 0..n {
                    m[i] = BETA1 * m[i] + (1.0 - BETA1) * grad[i];
                    v[i] = BETA2 * v[i] + (1.0 - BETA2) * grad[i] * grad[i];
                    let mh = m[i] / bc1;
                    let vh = v[i] / bc2;
                    slots[i] -= lr * mh / (vh.sqrt() + EPS);
                }
            }
        }
        iterations = it;
    }

    // The final update is otherwise unevaluated.
    let last = tape.mse_forward(&mut slots, points);
    if last < best_mse {
        best_mse = last;
        best_slots.copy_from_slice(&slots);
    }

    RefineOutcome {
        expr: expr.with_constants(&best_slots),
        mse: best_mse,
        iterations,
    }
}

// ---------------------------------------------------------------------------
// Expression tape

#[derive(Debug, Clone, Copy)]
enum TapeOp {
    Var(usize),
    Lit(f64),
    /// Constant leaf; the payload is the slot index in preorder order.
    Slot(usize),
    Un(UnaryOp, usize),
    Bin(BinaryOp, usize, usize),
}

/// Postorder array representation of one expression. Constant slots are
/// numbered in preorder so they align with [`Expr::constants`].
struct ExprTape {
    nodes: Vec<TapeOp>,
    n_slots: usize,
}

impl ExprTape {
    fn new(expr: &Expr) -> Self {
        let mut tape = ExprTape {
            nodes: Vec::with_capacity(expr.node_count()),
            n_slots: 0,
        };
        tape.push(expr);
        tape
    }

    fn push(&mut self, expr: &Expr) -> usize {
        let op = match expr {
            Expr::Binary(op, a, b) => {
                let ia = self.push(a);
                let ib = self.push(b);
                TapeOp::Bin(*op, ia, ib)
            }
            Expr::Unary(op, a) => {
                let ia = self.push(a);
                TapeOp::Un(*op, ia)
            }
            Expr::Var(i) => TapeOp::Var(*i),
            Expr::Int(i) => TapeOp::Lit(*i as f64),
            Expr::Const(_) => {
                let slot = self.n_slots;
                self.n_slots += 1;
                TapeOp::Slot(slot)
            }
        };
        self.nodes.push(op);
        self.nodes.len() - 1
    }

    fn forward(&self, slots: &[f64], point: &[f64], values: &mut [f64]) -> f64 {
        for (i, op) in self.nodes.iter().enumerate() {
            values[i] = match *op {
                TapeOp::Var(v) => point.get(v).copied().unwrap_or(f64::NAN),
                TapeOp::Lit(c) => c,
                TapeOp::Slot(s) => slots[s],
                TapeOp::Un(op, a) => crate::eval::eval_unary(op, values[a]),
                TapeOp::Bin(op, a, b) => crate::eval::eval_binary(op, values[a], values[b]),
            };
        }
        values[self.nodes.len() - 1]
    }

    /// Per-point derivative of the output with respect to each slot.
    fn backward(&self, values: &[f64], adjoint: &mut [f64], slot_grad: &mut [f64]) {
        adjoint.fill(0.0);
        slot_grad.fill(0.0);
        adjoint[self.nodes.len() - 1] = 1.0;
        for i in (0..self.nodes.len()).rev() {
            let g = adjoint[i];
            if g == 0.0 {
                continue;
            }
            match self.nodes[i] {
                TapeOp::Var(_) | TapeOp::Lit(_) => {}
                TapeOp::Slot(s) => slot_grad[s] += g,
                TapeOp::Un(op, a) => {
                    let va = values[a];
                    let da = match op {
                        UnaryOp::Sqrt => 0.5 / values[i],
                        UnaryOp::Pow2 => 2.0 * va,
                        UnaryOp::Pow3 => 3.0 * va * va,
                        UnaryOp::Pow4 => 4.0 * va.powi(3),
                        UnaryOp::Pow5 => 5.0 * va.powi(4),
                        UnaryOp::Pow6 => 6.0 * va.powi(5),
                        UnaryOp::Inv => -1.0 / (va * va),
                        UnaryOp::Ln => 1.0 / va,
                        UnaryOp::Exp => values[i],
                        UnaryOp::Sin => va.cos(),
                        UnaryOp::Cos => -va.sin(),
                        UnaryOp::Tan => 1.0 + values[i] * values[i],
                        UnaryOp::Cot => -(1.0 + values[i] * values[i]),
                        UnaryOp::Asin => 1.0 / (1.0 - va * va).sqrt(),
                        UnaryOp::Acos => -1.0 / (1.0 - va * va).sqrt(),
                        UnaryOp::Atan => 1.0 / (1.0 + va * va),
                        UnaryOp::Acot => -1.0 / (1.0 + va * va),
                        UnaryOp::Neg => -1.0,
                    };
                    adjoint[a] += g * da;
                }
                TapeOp::Bin(op, a, b) => {
                    let (va, vb) = (values[a], values[b]);
                    match op {
                        BinaryOp::Add => {
                            adjoint[a] += g;
                            adjoint[b] += g;
                        }
                        BinaryOp::Sub => {
                            adjoint[a] += g;
                            adjoint[b] -= g;
                        }
                        BinaryOp::Mul => {
                            adjoint[a] += g * vb;
                            adjoint[b] += g * va;
                        }
                        BinaryOp::Div => {
                            adjoint[a] += g / vb;
                            adjoint[b] -= g * va / (vb * vb);
                        }
                        BinaryOp::Pow => {
                            // d/da a^b = b a^(b-1); d/db a^b = a^b ln a,
                            // defined only for positive bases. A non-finite
                            // derivative masks the point if it reaches a slot.
                            adjoint[a] += g * vb * va.powf(vb - 1.0);
                            adjoint[b] += g * values[i] * va.ln();
                        }
                    }
                }
            }
        }
    }

    fn mse_forward(&self, slots: &mut [f64], points: &PointSet) -> f64 {
        let mut values = vec![0.0; self.nodes.len()];
        let n = points.n_points();
        let mut sum = 0.0;
        let mut finite = 0usize;
        for i in 0..n {
            let v = self.forward(slots, points.row(i), &mut values);
            if v.is_finite() {
                let r = v - points.outputs[i];
                sum += r * r;
                finite += 1;
            }
        }
        if finite * 2 < n || finite == 0 {
            f64::INFINITY
        } else {
            sum / finite as f64
        }
    }

    fn mse_and_grad(&self, slots: &[f64], points: &PointSet) -> ConstantGrad {
        let n = points.n_points();
        let n_nodes = self.nodes.len();
        let mut values = vec![0.0; n_nodes];
        let mut adjoint = vec![0.0; n_nodes];
        let mut slot_grad = vec![0.0; self.n_slots];
        let mut grad = vec![0.0; self.n_slots];
        let mut mask = vec![false; n];

        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;
        let mut grad_sum = vec![0.0; self.n_slots];
        let mut grad_count = 0usize;

        for i in 0..n {
            let v = self.forward(slots, points.row(i), &mut values);
            if !v.is_finite() {
                continue;
            }
            let r = v - points.outputs[i];
            loss_sum += r * r;
            loss_count += 1;

            self.backward(&values, &mut adjoint, &mut slot_grad);
            let contribution_finite = slot_grad.iter().all(|g| g.is_finite());
            if contribution_finite {
                for (acc, g) in grad_sum.iter_mut().zip(&slot_grad) {
                    *acc += 2.0 * r * g;
                }
                mask[i] = true;
                grad_count += 1;
            }
        }

        let mse = if loss_count * 2 < n || loss_count == 0 {
            f64::INFINITY
        } else {
            loss_sum / loss_count as f64
        };
        if grad_count > 0 {
            for (out, acc) in grad.iter_mut().zip(&grad_sum) {
                *out = acc / grad_count as f64;
            }
        }
        ConstantGrad {
            mse,
            grad,
            mask,
            n_grad: grad_count,
        }
    }
}
