//! Prevalence vectors and the two evaluation measures.
//!
//! A [`Prevalence`] is a point on the unit simplex: one non-negative
//! proportion per class, summing to one. Absolute error is computed on
//! raw vectors; relative absolute error smooths both arguments first so
//! that it stays finite when a true proportion is zero.

use std::fmt;
use std::ops::Index;

use crate::error::{Error, Result};

/// Tolerance on the component sum for vectors built in memory.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Prevalence(Vec<f64>);

impl Prevalence {
    /// Validates `values` as a simplex point (sum within [`SIMPLEX_TOLERANCE`]).
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(values, SIMPLEX_TOLERANCE)
    }

    pub(crate) fn with_tolerance(values: Vec<f64>, tolerance: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidPrevalence("empty vector".into()));
        }
        for (i, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidPrevalence(format!(
                    "component {i} = {v} outside [0, 1]"
                )));
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > tolerance {
            return Err(Error::InvalidPrevalence(format!("sum = {sum}")));
        }
        Ok(Prevalence(values))
    }

    /// Uniform distribution over `n` classes.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPrevalence("empty vector".into()));
        }
        Ok(Prevalence(vec![1.0 / n as f64; n]))
    }

    /// Proportions `counts[i] / sum(counts)`.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidPrevalence("all counts are zero".into()));
        }
        let total = total as f64;
        Self::new(counts.iter().map(|&c| c as f64 / total).collect())
    }

    /// Clips negatives to zero and rescales to unit sum. Fails only when
    /// nothing positive is left.
    pub fn clip_and_normalize(raw: &[f64]) -> Result<Self> {
        let clipped: Vec<f64> = raw
            .iter()
            .map(|&v| if v.is_finite() && v > 0.0 { v } else { 0.0 })
            .collect();
        let sum: f64 = clipped.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidPrevalence(
                "no positive mass after clipping".into(),
            ));
        }
        Self::new(clipped.into_iter().map(|v| (v / sum).min(1.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Index<usize> for Prevalence {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl fmt::Display for Prevalence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Sample size and the additive smoothing factor derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricContext {
    sample_size: usize,
    epsilon: f64,
}

impl MetricContext {
    /// `epsilon = 1 / (2 * sample_size)`.
    pub fn new(sample_size: usize) -> Result<Self> {
        if sample_size == 0 {
            return Err(Error::InvalidArgument("sample size must be >= 1".into()));
        }
        Ok(MetricContext {
            sample_size,
            epsilon: 1.0 / (2.0 * sample_size as f64),
        })
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Additive smoothing: `(eps + p_i) / (eps * n + sum(p))`.
pub fn smooth(p: &Prevalence, ctx: &MetricContext) -> Prevalence {
    let eps = ctx.epsilon;
    let n = p.len() as f64;
    let denom = eps * n + p.0.iter().sum::<f64>();
    Prevalence(p.0.iter().map(|&v| (eps + v) / denom).collect())
}

fn check_lengths(a: &Prevalence, b: &Prevalence) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

/// Mean over classes of `|p_hat - p_true|`, on unsmoothed vectors.
pub fn absolute_error(p_true: &Prevalence, p_hat: &Prevalence) -> Result<f64> {
    check_lengths(p_true, p_hat)?;
    let total: f64 = p_true
        .0
        .iter()
        .zip(&p_hat.0)
        .map(|(t, h)| (h - t).abs())
        .sum();
    Ok(total / p_true.len() as f64)
}

/// Mean over classes of `|p_hat - p_true| / p_true`, after smoothing both
/// arguments with `ctx`.
pub fn relative_absolute_error(
    p_true: &Prevalence,
    p_hat: &Prevalence,
    ctx: &MetricContext,
) -> Result<f64> {
    check_lengths(p_true, p_hat)?;
    let t = smooth(p_true, ctx);
    let h = smooth(p_hat, ctx);
    let total: f64 = t.0.iter().zip(&h.0).map(|(t, h)| (h - t).abs() / t).sum();
    Ok(total / t.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(v: &[f64]) -> Prevalence {
        Prevalence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn construction() {
        assert_eq!(p(&[0.5, 0.5]).len(), 2);
        assert_eq!(p(&[1.0]).len(), 1);
        assert!(Prevalence::new(vec![0.5, 0.6]).is_err());
        assert!(Prevalence::new(vec![]).is_err());
        assert!(Prevalence::new(vec![1.2, -0.2]).is_err());
        assert!(Prevalence::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn epsilon_for_250() {
        let ctx = MetricContext::new(250).unwrap();
        assert_eq!(ctx.epsilon(), 0.002);
        assert!(MetricContext::new(0).is_err());
    }

    #[test]
    fn smoothing_examples() {
        let ctx = MetricContext::new(250).unwrap();
        assert_eq!(smooth(&p(&[0.5, 0.5]), &ctx), p(&[0.5, 0.5]));
        let s = smooth(&p(&[1.0, 0.0]), &ctx);
        assert!((s[0] - 1.002 / 1.004).abs() < 1e-15);
        assert!((s[1] - 0.002 / 1.004).abs() < 1e-15);
    }

    #[test]
    fn ae_examples() {
        assert_eq!(absolute_error(&p(&[0.3, 0.7]), &p(&[0.3, 0.7])).unwrap(), 0.0);
        assert_eq!(absolute_error(&p(&[0.5, 0.5]), &p(&[0.75, 0.25])).unwrap(), 0.25);
        let ae = absolute_error(&p(&[0.2, 0.3, 0.5]), &p(&[0.3, 0.3, 0.4])).unwrap();
        assert!((ae - 0.0666667).abs() < 1e-6);
        assert!(absolute_error(&p(&[1.0]), &p(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn rae_examples() {
        let ctx = MetricContext::new(250).unwrap();
        let rae = |a: &[f64], b: &[f64]| relative_absolute_error(&p(a), &p(b), &ctx).unwrap();
        assert_eq!(rae(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert!((rae(&[0.5, 0.5], &[0.75, 0.25]) - 0.498008).abs() < 1e-5);
        assert!((rae(&[1.0, 0.0], &[0.5, 0.5]) - 125.25).abs() < 0.01);
    }

    fn simplex_of(n: usize) -> impl Strategy<Value = Prevalence> {
        prop::collection::vec(0.0f64..1.0, n).prop_map(|raw| {
            let sum: f64 = raw.iter().sum::<f64>() + 1e-3;
            let mut v: Vec<f64> = raw.iter().map(|x| (x + 1e-3 / raw.len() as f64) / sum).collect();
            let rest: f64 = v[1..].iter().sum();
            v[0] = (1.0 - rest).max(0.0);
            Prevalence::new(v).unwrap()
        })
    }

    fn simplex(max_n: usize) -> impl Strategy<Value = Prevalence> {
        (1..max_n).prop_flat_map(simplex_of)
    }

    fn simplex_pair(max_n: usize) -> impl Strategy<Value = (Prevalence, Prevalence)> {
        (1..max_n).prop_flat_map(|n| (simplex_of(n), simplex_of(n)))
    }

    proptest! {
        #[test]
        fn smoothed_is_strictly_positive_simplex(p in simplex(12), size in 1usize..10_000) {
            let ctx = MetricContext::new(size).unwrap();
            let s = smooth(&p, &ctx);
            prop_assert_eq!(s.len(), p.len());
            prop_assert!((s.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(s.as_slice().iter().all(|&v| v > 0.0));
        }

        #[test]
        fn self_distance_is_zero(p in simplex(12), size in 1usize..10_000) {
            let ctx = MetricContext::new(size).unwrap();
            prop_assert_eq!(absolute_error(&p, &p).unwrap(), 0.0);
            prop_assert_eq!(relative_absolute_error(&p, &p, &ctx).unwrap(), 0.0);
        }

        #[test]
        fn ae_symmetric_rae_finite((a, b) in simplex_pair(8), size in 1usize..10_000) {
            let ctx = MetricContext::new(size).unwrap();
            prop_assert_eq!(absolute_error(&a, &b).unwrap(), absolute_error(&b, &a).unwrap());
            let r = relative_absolute_error(&a, &b, &ctx).unwrap();
            prop_assert!(r.is_finite() && r >= 0.0);
        }
    }
}
