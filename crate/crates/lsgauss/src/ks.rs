//! Kolmogorov-Smirnov distances used by the distributional diagnostics.

/// Exact two-sample KS statistic, computed by a sorted merge.
pub fn two_sample(x: &[f64], y: &[f64]) -> f64 {
    assert!(!x.is_empty() && !y.is_empty());
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    ys.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let (nx, ny) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut max_diff = 0.0f64;
    while i < xs.len() || j < ys.len() {
        let v = match (xs.get(i), ys.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        while i < xs.len() && xs[i] == v {
            i += 1;
        }
        while j < ys.len() && ys[j] == v {
            j += 1;
        }
        let diff = (i as f64 / nx - j as f64 / ny).abs();
        max_diff = max_diff.max(diff);
    }
    max_diff
}

/// One-sample KS statistic against a continuous CDF.
pub fn one_sample(x: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!x.is_empty());
    let mut xs = x.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = xs.len() as f64;
    let mut max_diff = 0.0f64;
    for (i, &v) in xs.iter().enumerate() {
        let f = cdf(v);
        max_diff = max_diff.max((f - i as f64 / n).abs());
        max_diff = max_diff.max(((i + 1) as f64 / n - f).abs());
    }
    max_diff
}

/// Asymptotic (1 - alpha) quantile of the two-sample KS statistic under the
/// null of equal distributions: `c(alpha) * sqrt((n + m) / (n m))` with
/// `c(alpha) = sqrt(-ln(alpha / 2) / 2)`.
pub fn two_sample_null_quantile(alpha: f64, n: usize, m: usize) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0 && n > 0 && m > 0);
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n * m) as f64).sqrt()
}
