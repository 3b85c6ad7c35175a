//! Temporary tuning harness for RefineOptions; not part of the suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symreg_core::benchmarks::{by_suites, Suite};
use symreg_core::eval::evaluate;
use symreg_core::metrics::r_squared;
use symreg_core::points::{sample_points, SamplingPolicy};
use symreg_core::refine::{refine, OptimizerKind, RefineOptions};
use symreg_core::util::mix_seed;

fn trial_pass(opts: &RefineOptions, f: &symreg_core::benchmarks::BenchmarkFunction, seed: u64) -> bool {
    let truth = f.normalized();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Some(points) = sample_points(&truth, f.dims, &SamplingPolicy::default(), &mut rng) else {
        return false;
    };
    let consts = truth.constants();
    let init: Vec<f64> = consts
        .iter()
        .map(|&c| c * rng.random_range(0.5..=2.0))
        .collect();
    let start = truth.with_constants(&init);
    let out = refine(&start, &points, opts);
    let pred = evaluate(&out.expr, &points.inputs, points.n_dims);
    r_squared(&points.outputs, &pred).is_some_and(|r2| r2 >= 0.999)
}

#[test]
#[ignore]
fn tune() {
    let constant_suite = by_suites(&[Suite::Constant]);
    let grid = [
        (0.2, 1000, 1000),
        (0.3, 1000, 1000),
        (0.5, 1000, 1000),
        (1.0, 1000, 1000),
        (2.0, 1000, 1000),
        (0.5, 2000, 2000),
        (1.0, 2000, 2000),
        (2.0, 2000, 2000),
        (1.0, 1500, 300),
        (0.5, 1500, 300),
    ];
    for (lr, max_it, patience) in grid {
        let opts = RefineOptions {
            optimizer: OptimizerKind::Adam,
            learning_rate: lr,
            max_iterations: max_it,
            patience,
            rel_improvement: 1e-6,
            clip_norm: 10.0,
        };
        let start = std::time::Instant::now();
        let mut report = String::new();
        let mut worst = 100.0f64;
        for f in &constant_suite {
            let passes = (0..50)
                .filter(|&t| trial_pass(&opts, f, mix_seed(0xC0FFEE, t)))
                .count();
            let rate = passes as f64 / 50.0 * 100.0;
            worst = worst.min(rate);
            report.push_str(&format!("{}:{:.0}% ", f.id, rate));
        }
        // Linear skeleton accuracy with these options.
        use symreg_core::expr::build::*;
        let skeleton = add(mul(c(1.0), x()), c(1.0));
        let xs: Vec<f64> = (0..100).map(|i| -5.0 + 0.1 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&v| 2.0 * v + 3.0).collect();
        let ps = symreg_core::points::PointSet {
            inputs: xs,
            outputs: ys,
            n_dims: 1,
            intervals: vec![symreg_core::points::Interval::Full],
        };
        let out = refine(&skeleton, &ps, &opts);
        let fitted = out.expr.constants();
        let lin_err = (fitted[0] - 2.0).abs().max((fitted[1] - 3.0).abs());
        println!(
            "lr={lr} it={max_it} pat={patience}: worst={worst:.0}% lin_err={lin_err:.2e} t={:.1}s | {report}",
            start.elapsed().as_secs_f64()
        );
    }
}
