//! Reference computations written directly from the metric and test
//! definitions, kept apart from the library code paths they check.

/// Mean absolute difference over classes.
pub fn absolute_error(p_true: &[f64], p_hat: &[f64]) -> f64 {
    let n = p_true.len();
    let mut total = 0.0;
    for y in 0..n {
        total += (p_hat[y] - p_true[y]).abs();
    }
    total / n as f64
}

/// Relative absolute error with both vectors smoothed by
/// `(eps + p) / (eps * n + sum p)`, `eps = 1 / (2 * size)`.
pub fn relative_absolute_error(p_true: &[f64], p_hat: &[f64], size: usize) -> f64 {
    let eps = 1.0 / (2.0 * size as f64);
    let n = p_true.len();
    let norm_true = eps * n as f64 + p_true.iter().sum::<f64>();
    let norm_hat = eps * n as f64 + p_hat.iter().sum::<f64>();
    let mut total = 0.0;
    for y in 0..n {
        let t = (eps + p_true[y]) / norm_true;
        let h = (eps + p_hat[y]) / norm_hat;
        total += (h - t).abs() / t;
    }
    total / n as f64
}

/// Two-sided signed-rank p-value by visiting every one of the `2^m` sign
/// assignments of the non-zero differences. Returns `(W, m, p)`.
pub fn wilcoxon_enumeration(a: &[f64], b: &[f64]) -> (f64, usize, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let m = d.len();
    if m == 0 {
        return (0.0, 0, 1.0);
    }
    let rank: Vec<f64> = d
        .iter()
        .map(|di| {
            let less = d.iter().filter(|dj| dj.abs() < di.abs()).count() as f64;
            let equal = d.iter().filter(|dj| dj.abs() == di.abs()).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = (0..m).filter(|&i| d[i] > 0.0).map(|i| rank[i]).sum();
    let (mut at_most, mut at_least) = (0u64, 0u64);
    for mask in 0u64..(1 << m) {
        let w: f64 = (0..m).filter(|&i| mask >> i & 1 == 1).map(|i| rank[i]).sum();
        if w <= observed {
            at_most += 1;
        }
        if w >= observed {
            at_least += 1;
        }
    }
    let total = (1u64 << m) as f64;
    let p = (2.0 * at_most.min(at_least) as f64 / total).min(1.0);
    (observed, m, p)
}
