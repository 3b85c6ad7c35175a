//! Point sets, domain-aware interval sampling and the corpus acceptance
//! filters.

use crate::eval::evaluate;
use crate::expr::{Expr, CONST_MAX_ABS, CONST_MIN_ABS};
use crate::normalize::complexity;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Rejection threshold on absolute output values.
pub const MAX_ABS_VALUE: f64 = 1e7;
/// Rejection threshold on preorder token count.
pub const MAX_TOKENS: usize = 50;

/// Sampling interval for one input dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interval {
    /// `[-5, 5]`
    Full,
    /// `(0, 5]`
    Positive,
    /// `[-5, 0)`
    Negative,
}

impl Interval {
    pub fn code(self) -> &'static str {
        match self {
            Interval::Full => "full",
            Interval::Positive => "pos",
            Interval::Negative => "neg",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "full" => Some(Interval::Full),
            "pos" => Some(Interval::Positive),
            "neg" => Some(Interval::Negative),
            _ => None,
        }
    }

    /// Draws one value. Open endpoints are enforced by rejecting exact-zero
    /// draws with a bounded number of redraws.
    pub fn sample(self, rng: &mut impl Rng, max_redraws: usize) -> Option<f64> {
        match self {
            Interval::Full => Some(rng.random_range(-5.0..=5.0)),
            Interval::Positive => {
                for _ in 0..max_redraws {
                    let v: f64 = rng.random_range(0.0..=5.0);
                    if v != 0.0 {
                        return Some(v);
                    }
                }
                None
            }
            Interval::Negative => {
                for _ in 0..max_redraws {
                    let v: f64 = rng.random_range(-5.0..=0.0);
                    if v != 0.0 {
                        return Some(v);
                    }
                }
                None
            }
        }
    }
}

/// Inputs, outputs and the intervals the inputs were drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    /// Row-major `n_points x n_dims`.
    pub inputs: Vec<f64>,
    pub outputs: Vec<f64>,
    pub n_dims: usize,
    pub intervals: Vec<Interval>,
}

impl PointSet {
    pub fn n_points(&self) -> usize {
        self.outputs.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.n_dims..(i + 1) * self.n_dims]
    }

    /// Checks the type's own invariants: finite outputs within the magnitude
    /// bound and consistent dimensions.
    pub fn validate(&self) -> bool {
        self.inputs.len() == self.outputs.len() * self.n_dims
            && self.intervals.len() == self.n_dims
            && self.inputs.iter().all(|v| v.is_finite())
            && self
                .outputs
                .iter()
                .all(|v| v.is_finite() && v.abs() <= MAX_ABS_VALUE)
    }
}

/// Interval candidates in priority order plus point-count defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPolicy {
    pub points_1d: usize,
    pub points_2d: usize,
    pub max_redraws: usize,
}

impl Default for SamplingPolicy {
    fn default() -> Self {
        SamplingPolicy {
            points_1d: 100,
            points_2d: 200,
            max_redraws: 100,
        }
    }
}

impl SamplingPolicy {
    pub fn n_points(&self, n_dims: usize) -> usize {
        if n_dims >= 2 {
            self.points_2d
        } else {
            self.points_1d
        }
    }
}

/// Per-dimension interval assignments in priority order. One dimension tries
/// full, then positive, then negative. Two dimensions try the symmetric
/// product first, then positive fallbacks, then the negative combinations.
pub fn interval_candidates(n_dims: usize) -> Vec<Vec<Interval>> {
    use Interval::{Full as F, Negative as N, Positive as P};
    match n_dims {
        1 => vec![vec![F], vec![P], vec![N]],
        2 => vec![
            vec![F, F],
            vec![P, F],
            vec![F, P],
            vec![P, P],
            vec![N, F],
            vec![F, N],
            vec![N, P],
            vec![P, N],
            vec![N, N],
        ],
        d => panic!("unsupported dimensionality {d}"),
    }
}

/// Draws uniform points from the first interval assignment whose evaluation
/// is entirely finite with all magnitudes within bounds. Fresh points are
/// drawn for every candidate. Returns `None` when every candidate fails.
pub fn sample_points(
    expr: &Expr,
    n_dims: usize,
    policy: &SamplingPolicy,
    rng: &mut impl Rng,
) -> Option<PointSet> {
    let n_points = policy.n_points(n_dims);
    'candidates: for intervals in interval_candidates(n_dims) {
        let mut inputs = Vec::with_capacity(n_points * n_dims);
        for _ in 0..n_points {
            for &iv in &intervals {
                inputs.push(iv.sample(rng, policy.max_redraws)?);
            }
        }
        let outputs = evaluate(expr, &inputs, n_dims);
        for &v in &outputs {
            if !v.is_finite() || v.abs() > MAX_ABS_VALUE {
                continue 'candidates;
            }
        }
        return Some(PointSet {
            inputs,
            outputs,
            n_dims,
            intervals,
        });
    }
    None
}

/// Why a candidate formula was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RejectReason {
    ValuesTooLarge,
    ConstantOutOfRange,
    IsLinear,
    IsConstant,
    TooManyTokens,
    NoFinitePoints,
    /// Every interval candidate failed during point sampling.
    NoViableInterval,
    /// Constant folding produced an unrepresentable value.
    Fold,
}

impl RejectReason {
    pub fn name(self) -> &'static str {
        match self {
            RejectReason::ValuesTooLarge => "values_too_large",
            RejectReason::ConstantOutOfRange => "constant_out_of_range",
            RejectReason::IsLinear => "is_linear",
            RejectReason::IsConstant => "is_constant",
            RejectReason::TooManyTokens => "too_many_tokens",
            RejectReason::NoFinitePoints => "no_finite_points",
            RejectReason::NoViableInterval => "no_viable_interval",
            RejectReason::Fold => "fold",
        }
    }
}

/// Structural filters that do not need sampled points.
pub fn check_structure(expr: &Expr) -> Result<(), RejectReason> {
    let cx = complexity(expr);
    if cx.is_constant {
        return Err(RejectReason::IsConstant);
    }
    if cx.is_linear {
        return Err(RejectReason::IsLinear);
    }
    if cx.token_count > MAX_TOKENS {
        return Err(RejectReason::TooManyTokens);
    }
    let mut const_ok = true;
    expr.visit_preorder(&mut |e| {
        if let Expr::Const(c) = e {
            let mag = c.abs();
            if !c.is_finite() || !(CONST_MIN_ABS..=CONST_MAX_ABS).contains(&mag) {
                const_ok = false;
            }
        }
    });
    if !const_ok {
        return Err(RejectReason::ConstantOutOfRange);
    }
    Ok(())
}

/// Full acceptance check over a normalized expression and its point set.
pub fn accept(expr: &Expr, points: &PointSet) -> Result<(), RejectReason> {
    check_structure(expr)?;
    let finite = points.outputs.iter().filter(|v| v.is_finite()).count();
    if finite == 0 {
        return Err(RejectReason::NoFinitePoints);
    }
    if points
        .outputs
        .iter()
        .any(|v| v.is_finite() && v.abs() > MAX_ABS_VALUE)
    {
        return Err(RejectReason::ValuesTooLarge);
    }
    Ok(())
}
