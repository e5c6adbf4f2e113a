//! Wilcoxon signed-rank test on paired per-sample scores.

use std::fmt;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Largest number of non-zero differences handled by exact enumeration.
pub const EXACT_LIMIT: usize = 20;

pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestMethod {
    Exact,
    NormalApproximation,
    /// Every difference was zero.
    Degenerate,
}

impl fmt::Display for TestMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestMethod::Exact => "exact",
            TestMethod::NormalApproximation => "normal-approximation",
            TestMethod::Degenerate => "degenerate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignificanceResult {
    /// Sum of the ranks of positive differences.
    pub statistic: f64,
    /// Number of non-zero differences.
    pub pairs: usize,
    /// Two-sided p-value.
    pub p_value: f64,
    pub method: TestMethod,
}

impl SignificanceResult {
    pub fn significant(&self) -> bool {
        self.p_value < ALPHA
    }
}

/// Twice the average rank of each value (1-based), so tied ranks stay
/// integral.
fn doubled_ranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end+1, average doubled = start + end + 2
        let doubled = (start + end + 2) as u64;
        for &i in &order[start..=end] {
            ranks[i] = doubled;
        }
        start = end + 1;
    }
    ranks
}

/// Two-sided test of `a - b`. Zero differences are dropped; absolute
/// differences get average ranks on ties.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<SignificanceResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty("paired score sequence"));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let m = diffs.len();
    if m == 0 {
        return Ok(SignificanceResult {
            statistic: 0.0,
            pairs: 0,
            p_value: 1.0,
            method: TestMethod::Degenerate,
        });
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = doubled_ranks(&magnitudes);
    let w2: u64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let statistic = w2 as f64 / 2.0;

    if m <= EXACT_LIMIT {
        return Ok(SignificanceResult {
            statistic,
            pairs: m,
            p_value: exact_p_value(&ranks, w2),
            method: TestMethod::Exact,
        });
    }

    let mf = m as f64;
    let mean = mf * (mf + 1.0) / 4.0;
    let tie_term: f64 = tie_groups(&magnitudes)
        .into_iter()
        .map(|t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let variance = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 24.0 - tie_term / 48.0;
    let p_value = if variance <= 0.0 {
        1.0
    } else {
        let z = ((statistic - mean).abs() - 0.5).max(0.0) / variance.sqrt();
        erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    Ok(SignificanceResult {
        statistic,
        pairs: m,
        p_value,
        method: TestMethod::NormalApproximation,
    })
}

fn tie_groups(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .chunk_by(|x, y| x == y)
        .map(<[f64]>::len)
        .filter(|&len| len > 1)
        .collect()
}

/// Null distribution of the doubled statistic over all `2^m` sign
/// assignments, accumulated one rank at a time.
fn exact_p_value(doubled_ranks: &[u64], observed: u64) -> f64 {
    let total: u64 = doubled_ranks.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let assignments = (1u64 << doubled_ranks.len()) as f64;
    let at_most: u64 = counts[..=observed as usize].iter().sum();
    let at_least: u64 = counts[observed as usize..].iter().sum();
    let tail = at_most.min(at_least) as f64 / assignments;
    (2.0 * tail).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs_are_degenerate() {
        let r = wilcoxon_signed_rank(&[0.1, 0.2, 0.3], &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(r.method, TestMethod::Degenerate);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.pairs, 0);
    }

    #[test]
    fn three_positive_differences() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(r.statistic, 6.0);
        assert_eq!(r.pairs, 3);
        assert_eq!(r.p_value, 0.25);
        assert_eq!(r.method, TestMethod::Exact);
    }

    #[test]
    fn zero_differences_are_dropped_and_ties_averaged() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 5.0, 4.0], &[1.0, 1.0, 4.0, 6.0]).unwrap();
        // diffs (0, 1, 1, -2): ranks 1.5, 1.5, 3
        assert_eq!(r.pairs, 3);
        assert_eq!(r.statistic, 3.0);
    }

    #[test]
    fn errors() {
        assert!(wilcoxon_signed_rank(&[1.0], &[1.0, 2.0]).is_err());
        assert!(wilcoxon_signed_rank(&[], &[]).is_err());
    }

    #[test]
    fn large_samples_use_normal_approximation() {
        let a: Vec<f64> = (0..40).map(|i| i as f64 + 0.5).collect();
        let b: Vec<f64> = (0..40).map(|i| if i % 2 == 0 { i as f64 } else { i as f64 + 1.0 }).collect();
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.method, TestMethod::NormalApproximation);
        assert!(r.p_value > 0.5);

        let shifted: Vec<f64> = a.iter().map(|x| x + 1.0 + x * 1e-3).collect();
        let r = wilcoxon_signed_rank(&shifted, &a).unwrap();
        assert!(r.significant());
        assert_eq!(r.statistic, 820.0);
    }
}
