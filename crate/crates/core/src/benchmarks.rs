//! The benchmark function registry: the standard univariate and bivariate
//! suites against which predictors are scored.

use crate::expr::build::*;
use crate::expr::Expr;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Suite {
    Nguyen,
    R,
    Livermore,
    Koza,
    Keijzer,
    Constant,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Nguyen,
        Suite::R,
        Suite::Livermore,
        Suite::Koza,
        Suite::Keijzer,
        Suite::Constant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Nguyen => "Nguyen",
            Suite::R => "R",
            Suite::Livermore => "Livermore",
            Suite::Koza => "Koza",
            Suite::Keijzer => "Keijzer",
            Suite::Constant => "Constant",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkFunction {
    pub suite: Suite,
    pub id: String,
    pub dims: usize,
    pub expr: Expr,
}

impl BenchmarkFunction {
    fn new(suite: Suite, number: u32, expr: Expr) -> Self {
        let dims = expr.dims().max(1);
        BenchmarkFunction {
            suite,
            id: format!("{}-{}", suite.name(), number),
            dims,
            expr,
        }
    }

    /// Ground truth in vocabulary form, for evaluation and sampling.
    pub fn normalized(&self) -> Expr {
        crate::normalize::normalize(&self.expr).expect("benchmark functions fold cleanly")
    }
}

fn poly(terms: &[(f64, i64)]) -> Expr {
    // Sum of coeff * x^k terms, highest power first.
    let mut acc: Option<Expr> = None;
    for &(coeff, k) in terms {
        let base = match k {
            0 => None,
            1 => Some(x()),
            k => Some(ipow(x(), k)),
        };
        let term = match (coeff, base) {
            (cf, Some(b)) if cf == 1.0 => b,
            (cf, Some(b)) => mul(c(cf), b),
            (cf, None) => c(cf),
        };
        acc = Some(match acc {
            Some(prev) => add(prev, term),
            None => term,
        });
    }
    acc.expect("at least one term")
}

fn sinh_expr(a: Expr) -> Expr {
    mul(c(0.5), sub(exp(a.clone()), exp(neg(a))))
}

fn cosh_expr(a: Expr) -> Expr {
    mul(c(0.5), add(exp(a.clone()), exp(neg(a))))
}

/// All benchmark functions, in suite order.
pub fn registry() -> Vec<BenchmarkFunction> {
    use Suite::*;
    let mut fns = Vec::new();
    let mut f = |suite, number, expr| fns.push(BenchmarkFunction::new(suite, number, expr));

    f(Nguyen, 1, poly(&[(1.0, 3), (1.0, 2), (1.0, 1)]));
    f(Nguyen, 2, poly(&[(1.0, 4), (1.0, 3), (1.0, 2), (1.0, 1)]));
    f(
        Nguyen,
        3,
        poly(&[(1.0, 5), (1.0, 4), (1.0, 3), (1.0, 2), (1.0, 1)]),
    );
    f(
        Nguyen,
        4,
        poly(&[(1.0, 6), (1.0, 5), (1.0, 4), (1.0, 3), (1.0, 2), (1.0, 1)]),
    );
    f(Nguyen, 5, sub(mul(sin(ipow(x(), 2)), cos(x())), int(1)));
    f(Nguyen, 6, add(sin(x()), sin(add(x(), ipow(x(), 2)))));
    f(
        Nguyen,
        7,
        add(ln(add(x(), int(1))), ln(add(ipow(x(), 2), int(1)))),
    );
    f(Nguyen, 8, sqrt(x()));
    f(Nguyen, 9, add(sin(x()), sin(ipow(y(), 2))));
    f(Nguyen, 10, mul(int(2), mul(sin(x()), cos(y()))));
    f(Nguyen, 11, pow(x(), y()));
    f(
        Nguyen,
        12,
        add(
            sub(ipow(x(), 4), ipow(x(), 3)),
            sub(mul(c(0.5), ipow(y(), 2)), y()),
        ),
    );

    f(
        R,
        1,
        div(
            ipow(add(x(), int(1)), 3),
            add(sub(ipow(x(), 2), x()), int(1)),
        ),
    );
    f(
        R,
        2,
        div(
            add(sub(ipow(x(), 5), mul(int(3), ipow(x(), 3))), int(1)),
            add(ipow(x(), 2), int(1)),
        ),
    );
    f(
        R,
        3,
        div(
            add(ipow(x(), 6), ipow(x(), 5)),
            poly(&[(1.0, 4), (1.0, 3), (1.0, 2), (1.0, 1), (1.0, 0)]),
        ),
    );

    f(Livermore, 1, add(add(c(1.0 / 3.0), x()), sin(ipow(x(), 2))));
    f(Livermore, 2, sub(mul(sin(ipow(x(), 2)), cos(x())), int(2)));
    f(
        Livermore,
        3,
        sub(mul(sin(ipow(x(), 3)), cos(ipow(x(), 2))), int(1)),
    );
    f(
        Livermore,
        4,
        add(
            add(ln(add(x(), int(1))), ln(add(ipow(x(), 2), int(1)))),
            ln(x()),
        ),
    );
    f(
        Livermore,
        5,
        sub(add(sub(ipow(x(), 4), ipow(x(), 3)), ipow(x(), 2)), y()),
    );
    f(Livermore, 6, poly(&[(4.0, 4), (3.0, 3), (2.0, 2), (1.0, 1)]));
    f(Livermore, 7, sinh_expr(x()));
    f(Livermore, 8, cosh_expr(x()));
    f(
        Livermore,
        9,
        poly(&[
            (1.0, 9),
            (1.0, 8),
            (1.0, 7),
            (1.0, 6),
            (1.0, 5),
            (1.0, 4),
            (1.0, 3),
            (1.0, 2),
            (1.0, 1),
        ]),
    );
    f(Livermore, 10, mul(int(6), mul(sin(x()), cos(y()))));
    f(
        Livermore,
        11,
        div(mul(ipow(x(), 2), ipow(x(), 2)), add(x(), y())),
    );
    f(Livermore, 12, div(ipow(x(), 5), ipow(y(), 3)));
    f(Livermore, 13, pow(x(), c(1.0 / 3.0)));
    f(
        Livermore,
        14,
        add(
            poly(&[(1.0, 3), (1.0, 2), (1.0, 1)]),
            add(sin(x()), sin(ipow(x(), 2))),
        ),
    );
    f(Livermore, 15, pow(x(), c(1.0 / 5.0)));
    f(Livermore, 16, pow(x(), c(2.0 / 5.0)));
    f(Livermore, 17, mul(int(4), mul(sin(x()), cos(y()))));
    f(Livermore, 18, sub(mul(sin(ipow(x(), 2)), cos(x())), int(5)));
    f(
        Livermore,
        19,
        poly(&[(1.0, 5), (1.0, 4), (1.0, 2), (1.0, 1)]),
    );
    f(Livermore, 20, exp(neg(ipow(x(), 2))));
    f(
        Livermore,
        21,
        poly(&[
            (1.0, 8),
            (1.0, 7),
            (1.0, 6),
            (1.0, 5),
            (1.0, 4),
            (1.0, 3),
            (1.0, 2),
            (1.0, 1),
        ]),
    );
    f(Livermore, 22, exp(mul(c(-0.5), ipow(x(), 2))));

    f(Koza, 2, poly(&[(1.0, 5), (-2.0, 3), (1.0, 1)]));
    f(Koza, 3, poly(&[(1.0, 6), (-2.0, 4), (1.0, 2)]));

    f(
        Keijzer,
        3,
        mul(
            mul(c(0.3), x()),
            sin(mul(c(2.0 * std::f64::consts::PI), x())),
        ),
    );
    f(
        Keijzer,
        4,
        mul(
            mul(
                mul(mul(ipow(x(), 3), exp(neg(x()))), cos(x())),
                sin(x()),
            ),
            sub(mul(ipow(sin(x()), 2), cos(x())), int(1)),
        ),
    );
    f(Keijzer, 6, div(mul(x(), add(x(), int(1))), int(2)));
    f(Keijzer, 7, ln(x()));
    f(Keijzer, 8, sqrt(x()));
    f(Keijzer, 9, ln(add(x(), sqrt(add(ipow(x(), 2), int(1))))));
    f(Keijzer, 10, pow(x(), y()));
    f(
        Keijzer,
        11,
        add(
            mul(x(), y()),
            sin(mul(sub(x(), int(1)), sub(y(), int(1)))),
        ),
    );
    f(
        Keijzer,
        12,
        add(
            sub(ipow(x(), 4), ipow(x(), 3)),
            sub(div(ipow(y(), 2), int(2)), y()),
        ),
    );
    f(Keijzer, 13, mul(int(6), mul(sin(x()), cos(y()))));
    f(
        Keijzer,
        14,
        div(int(8) as Expr, add(add(int(2), ipow(x(), 2)), ipow(y(), 2))),
    );
    f(
        Keijzer,
        15,
        sub(
            sub(add(div(ipow(x(), 3), int(5)), div(ipow(y(), 3), int(2))), y()),
            x(),
        ),
    );

    f(Constant, 1, poly(&[(3.39, 3), (2.12, 2), (1.78, 1)]));
    f(Constant, 2, sub(mul(sin(ipow(x(), 2)), cos(x())), c(0.75)));
    f(
        Constant,
        3,
        mul(sin(mul(c(1.5), x())), cos(mul(c(0.5), y()))),
    );
    f(Constant, 4, mul(c(2.7), pow(x(), y())));
    f(Constant, 5, sqrt(mul(c(1.23), x())));
    f(Constant, 6, pow(x(), c(0.426)));
    f(
        Constant,
        7,
        mul(int(2), mul(sin(mul(c(1.3), x())), cos(y()))),
    );
    f(
        Constant,
        8,
        add(ln(add(x(), c(1.4))), ln(add(ipow(x(), 2), c(1.3)))),
    );

    fns
}

/// Registry subset for the requested suites, in registry order.
pub fn by_suites(suites: &[Suite]) -> Vec<BenchmarkFunction> {
    registry()
        .into_iter()
        .filter(|f| suites.contains(&f.suite))
        .collect()
}

pub fn find(id: &str) -> Option<BenchmarkFunction> {
    registry()
        .into_iter()
        .find(|f| f.id.eq_ignore_ascii_case(id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::eval_scalar;
    use crate::points::{sample_points, SamplingPolicy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn registry_has_the_expected_composition() {
        let fns = registry();
        assert_eq!(fns.len(), 59);
        let count = |s: Suite| fns.iter().filter(|f| f.suite == s).count();
        assert_eq!(count(Suite::Nguyen), 12);
        assert_eq!(count(Suite::R), 3);
        assert_eq!(count(Suite::Livermore), 22);
        assert_eq!(count(Suite::Koza), 2);
        assert_eq!(count(Suite::Keijzer), 12);
        assert_eq!(count(Suite::Constant), 8);
    }

    #[test]
    fn spot_check_values() {
        let fns = registry();
        let get = |id: &str| fns.iter().find(|f| f.id == id).unwrap();
        assert_eq!(eval_scalar(&get("Nguyen-1").expr, &[1.0]), 3.0);
        assert_eq!(eval_scalar(&get("Nguyen-8").expr, &[4.0]), 2.0);
        assert_eq!(eval_scalar(&get("Koza-2").expr, &[2.0]), 32.0 - 16.0 + 2.0);
        let v = eval_scalar(&get("Livermore-7").expr, &[1.0]);
        assert!((v - 1.0f64.sinh()).abs() < 1e-12);
        let v = eval_scalar(&get("Keijzer-14").expr, &[1.0, 1.0]);
        assert!((v - 2.0).abs() < 1e-12);
        let v = eval_scalar(&get("Constant-1").expr, &[1.0]);
        assert!((v - (3.39 + 2.12 + 1.78)).abs() < 1e-12);
        assert_eq!(eval_scalar(&get("Nguyen-11").expr, &[2.0, 3.0]), 8.0);
    }

    #[test]
    fn dims_are_detected() {
        let fns = registry();
        let one_d = fns.iter().filter(|f| f.dims == 1).count();
        let two_d = fns.iter().filter(|f| f.dims == 2).count();
        assert_eq!(one_d + two_d, 59);
        assert_eq!(two_d, 18);
    }

    #[test]
    fn every_function_normalizes_and_samples() {
        // Registry completeness: each function evaluates finitely on at
        // least one interval candidate.
        let policy = SamplingPolicy::default();
        for f in registry() {
            let norm = f.normalized();
            assert!(norm.vocab_ops_only(), "{}", f.id);
            let mut rng = ChaCha8Rng::seed_from_u64(0x5EED + f.id.len() as u64);
            let ps = sample_points(&norm, f.dims, &policy, &mut rng);
            assert!(ps.is_some(), "no viable interval for {}", f.id);
            let ps = ps.unwrap();
            // The normalized form agrees with the raw form on the samples.
            for i in 0..ps.n_points() {
                let raw_v = eval_scalar(&f.expr, ps.row(i));
                let norm_v = ps.outputs[i];
                assert!(
                    (raw_v - norm_v).abs() <= 1e-9 * raw_v.abs().max(1.0),
                    "{} diverges after normalization",
                    f.id
                );
            }
        }
    }

    #[test]
    fn nguyen_8_samples_from_the_positive_interval() {
        let f = find("Nguyen-8").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let ps = sample_points(&f.normalized(), 1, &SamplingPolicy::default(), &mut rng).unwrap();
        assert_eq!(ps.intervals, vec![crate::points::Interval::Positive]);
    }

    #[test]
    fn suite_parsing() {
        assert_eq!(Suite::parse("nguyen"), Some(Suite::Nguyen));
        assert_eq!(Suite::parse("KEIJZER"), Some(Suite::Keijzer));
        assert_eq!(Suite::parse("unknown"), None);
    }
}
