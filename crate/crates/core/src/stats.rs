//! Sample statistics for Monte Carlo summaries.

/// z-value of a two-sided 95% normal confidence interval.
pub const Z95: f64 = 1.96;

/// Mean and 95% confidence half-width `1.96 * s / sqrt(n)` with the sample
/// standard deviation `s`. A single sample has half-width 0; no samples give
/// `(NaN, 0)`.
pub fn stats_ci(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, Z95 * var.sqrt() / (n as f64).sqrt())
}

/// Median of a non-empty slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
