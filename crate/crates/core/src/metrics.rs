//! Fit metrics: relative error and the coefficient of determination.

/// Mean of `|y - yhat| / |y|` over pairs where both values are finite and
/// `y != 0`. Returns the metric (None when no pair qualifies) and the number
/// of included pairs.
pub fn relative_error(y: &[f64], yhat: &[f64]) -> (Option<f64>, usize) {
    assert_eq!(y.len(), yhat.len());
    let mut sum = 0.0;
    let mut included = 0usize;
    for (&yi, &pi) in y.iter().zip(yhat) {
        if yi == 0.0 || !yi.is_finite() || !pi.is_finite() {
            continue;
        }
        sum += ((yi - pi) / yi).abs();
        included += 1;
    }
    if included == 0 {
        (None, 0)
    } else {
        (Some(sum / included as f64), included)
    }
}

/// `1 - SSE/SST` over pairs where both values are finite. Undefined when
/// fewer than two pairs remain or the targets have zero variance.
pub fn r_squared(y: &[f64], yhat: &[f64]) -> Option<f64> {
    assert_eq!(y.len(), yhat.len());
    let pairs: Vec<(f64, f64)> = y
        .iter()
        .zip(yhat)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(&a, &b)| (a, b))
        .collect();
    if pairs.len() < 2 {
        return None;
    }
    let mean = pairs.iter().map(|(a, _)| a).sum::<f64>() / pairs.len() as f64;
    let sst: f64 = pairs.iter().map(|(a, _)| (a - mean) * (a - mean)).sum();
    if sst <= 0.0 {
        return None;
    }
    let sse: f64 = pairs.iter().map(|(a, b)| (a - b) * (a - b)).sum();
    Some(1.0 - sse / sst)
}
