//! Submission validation, scoring, ranking and pairwise significance.
//!
//! Systems are ranked by mean RAE over all samples. Mean AE is reported
//! next to it and used only to break exact ties.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::prevalence::{absolute_error, relative_absolute_error, MetricContext, Prevalence};
use crate::wilcoxon::{wilcoxon_signed_rank, SignificanceResult};

/// Allowed deviation of a submitted vector's sum from one.
pub const SUBMISSION_SUM_TOLERANCE: f64 = 1e-3;

/// A submission row as read, before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEntry {
    pub sample_id: u64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubmissionEntry {
    pub sample_id: u64,
    pub predicted: Prevalence,
}

fn invalid(sample_id: u64, reason: impl Into<String>) -> Error {
    Error::Validation {
        sample_id,
        reason: reason.into(),
    }
}

/// Checks a single row and renormalizes it to sum exactly one.
pub fn validate_entry(entry: &RawEntry, n: usize) -> Result<Prevalence> {
    let id = entry.sample_id;
    if entry.values.len() != n {
        return Err(invalid(
            id,
            format!("expected {n} prevalence values, got {}", entry.values.len()),
        ));
    }
    if let Some((i, v)) = entry.values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(invalid(id, format!("p{i} = {v} is not a finite number")));
    }
    if let Some((i, v)) = entry.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(invalid(id, format!("p{i} = {v} is negative")));
    }
    let sum: f64 = entry.values.iter().sum();
    if (sum - 1.0).abs() > SUBMISSION_SUM_TOLERANCE {
        return Err(invalid(
            id,
            format!("values sum to {sum}, outside 1 +/- {SUBMISSION_SUM_TOLERANCE}"),
        ));
    }
    Prevalence::new(entry.values.iter().map(|v| (v / sum).min(1.0)).collect())
        .map_err(|e| invalid(id, e.to_string()))
}

/// One entry per truth id, each a valid vector of length `n`. Returns the
/// entries ordered by sample id.
pub fn validate_submission(
    entries: &[RawEntry],
    truth_ids: &BTreeSet<u64>,
    n: usize,
) -> Result<Vec<SubmissionEntry>> {
    let mut by_id = BTreeMap::new();
    for entry in entries {
        let id = entry.sample_id;
        if !truth_ids.contains(&id) {
            return Err(invalid(id, "unknown sample id"));
        }
        if by_id.contains_key(&id) {
            return Err(invalid(id, "duplicate sample id"));
        }
        by_id.insert(id, validate_entry(entry, n)?);
    }
    if let Some(&missing) = truth_ids.iter().find(|id| !by_id.contains_key(id)) {
        return Err(invalid(missing, "missing from submission"));
    }
    Ok(by_id
        .into_iter()
        .map(|(sample_id, predicted)| SubmissionEntry {
            sample_id,
            predicted,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub system: String,
    pub sample_ids: Vec<u64>,
    pub rae: Vec<f64>,
    pub ae: Vec<f64>,
    pub mean_rae: f64,
    pub mean_ae: f64,
}

impl ScoreReport {
    /// Rebuilds a report from per-sample scores; means are recomputed.
    pub fn from_scores(system: String, sample_ids: Vec<u64>, rae: Vec<f64>, ae: Vec<f64>) -> Result<Self> {
        if rae.len() != sample_ids.len() || ae.len() != sample_ids.len() {
            return Err(Error::LengthMismatch {
                expected: sample_ids.len(),
                actual: rae.len().min(ae.len()),
            });
        }
        if sample_ids.is_empty() {
            return Err(Error::Empty("score report"));
        }
        let count = sample_ids.len() as f64;
        let mean_rae = rae.iter().sum::<f64>() / count;
        let mean_ae = ae.iter().sum::<f64>() / count;
        Ok(ScoreReport {
            system,
            sample_ids,
            rae,
            ae,
            mean_rae,
            mean_ae,
        })
    }
}

/// Scores validated entries against the ground truth. Per-sample scores are
/// listed in sample-id order whatever the entry order or `parallel`.
pub fn score_submission(
    system: &str,
    truth: &[(u64, Prevalence)],
    entries: &[SubmissionEntry],
    ctx: &MetricContext,
    parallel: bool,
) -> Result<ScoreReport> {
    let mut truth_sorted: Vec<&(u64, Prevalence)> = truth.iter().collect();
    truth_sorted.sort_by_key(|(id, _)| *id);
    let predicted: BTreeMap<u64, &Prevalence> =
        entries.iter().map(|e| (e.sample_id, &e.predicted)).collect();
    if predicted.len() != truth_sorted.len() {
        return Err(Error::LengthMismatch {
            expected: truth_sorted.len(),
            actual: predicted.len(),
        });
    }

    let score = |(id, p_true): &&(u64, Prevalence)| -> Result<(f64, f64)> {
        let p_hat = predicted
            .get(id)
            .ok_or_else(|| invalid(*id, "missing from submission"))?;
        Ok((
            relative_absolute_error(p_true, p_hat, ctx)?,
            absolute_error(p_true, p_hat)?,
        ))
    };
    let scores: Vec<(f64, f64)> = if parallel {
        truth_sorted.par_iter().map(score).collect::<Result<_>>()?
    } else {
        truth_sorted.iter().map(score).collect::<Result<_>>()?
    };
    let (rae, ae) = scores.into_iter().unzip();
    ScoreReport::from_scores(
        system.to_string(),
        truth_sorted.iter().map(|(id, _)| *id).collect(),
        rae,
        ae,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingRow {
    pub rank: usize,
    pub system: String,
    pub mean_rae: f64,
    pub mean_ae: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingTable {
    pub rows: Vec<RankingRow>,
}

fn ranking_order(a: &ScoreReport, b: &ScoreReport) -> Ordering {
    a.mean_rae
        .total_cmp(&b.mean_rae)
        .then(a.mean_ae.total_cmp(&b.mean_ae))
        .then_with(|| a.system.cmp(&b.system))
}

/// Orders reports by mean RAE, then mean AE, then system name.
pub fn sort_reports(reports: &[ScoreReport]) -> Result<Vec<&ScoreReport>> {
    if let Some(first) = reports.first() {
        for r in &reports[1..] {
            if r.sample_ids != first.sample_ids {
                return Err(Error::InvalidArgument(format!(
                    "system '{}' was scored on {} samples, '{}' on {}; reports must share the same ground truth",
                    r.system,
                    r.sample_ids.len(),
                    first.system,
                    first.sample_ids.len()
                )));
            }
        }
    }
    let mut sorted: Vec<&ScoreReport> = reports.iter().collect();
    sorted.sort_by(|a, b| ranking_order(a, b));
    Ok(sorted)
}

pub fn rank_systems(reports: &[ScoreReport]) -> Result<RankingTable> {
    let rows = sort_reports(reports)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| RankingRow {
            rank: i + 1,
            system: r.system.clone(),
            mean_rae: r.mean_rae,
            mean_ae: r.mean_ae,
        })
        .collect();
    Ok(RankingTable { rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseResult {
    pub system_a: String,
    pub system_b: String,
    pub result: SignificanceResult,
}

/// Wilcoxon test on per-sample RAE for every pair of systems, in ranking
/// order (`a` ranked above `b`).
pub fn pairwise_significance(reports: &[ScoreReport]) -> Result<Vec<PairwiseResult>> {
    let sorted = sort_reports(reports)?;
    let mut out = Vec::new();
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            out.push(PairwiseResult {
                system_a: a.system.clone(),
                system_b: b.system.clone(),
                result: wilcoxon_signed_rank(&a.rae, &b.rae)?,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prev(v: &[f64]) -> Prevalence {
        Prevalence::new(v.to_vec()).unwrap()
    }

    fn raw(id: u64, v: &[f64]) -> RawEntry {
        RawEntry {
            sample_id: id,
            values: v.to_vec(),
        }
    }

    fn ids(v: &[u64]) -> BTreeSet<u64> {
        v.iter().copied().collect()
    }

    #[test]
    fn accepts_and_renormalizes_near_unit_sums() {
        let out = validate_submission(&[raw(0, &[0.4995, 0.5])], &ids(&[0]), 2).unwrap();
        let p = &out[0].predicted;
        assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((p[0] - 0.4995 / 0.9995).abs() < 1e-15);
    }

    #[test]
    fn validation_errors_name_the_sample() {
        let truth = ids(&[3, 7]);
        let cases = [
            (vec![raw(3, &[0.5, 0.5]), raw(7, &[0.5, 0.5]), raw(7, &[0.5, 0.5])], 7, "duplicate"),
            (vec![raw(3, &[0.5, 0.5]), raw(9, &[0.5, 0.5])], 9, "unknown"),
            (vec![raw(3, &[0.5, 0.5])], 7, "missing"),
            (vec![raw(3, &[1.01, -0.01]), raw(7, &[0.5, 0.5])], 3, "negative"),
            (vec![raw(3, &[0.5, 0.5]), raw(7, &[0.5, 0.3, 0.2])], 7, "expected 2"),
            (vec![raw(3, &[0.6, 0.5]), raw(7, &[0.5, 0.5])], 3, "sum"),
        ];
        for (entries, bad_id, needle) in cases {
            match validate_submission(&entries, &truth, 2) {
                Err(Error::Validation { sample_id, reason }) => {
                    assert_eq!(sample_id, bad_id);
                    assert!(reason.contains(needle), "{reason}");
                }
                other => panic!("expected validation error, got {other:?}"),
            }
        }
    }

    fn entries(rows: &[(u64, &[f64])]) -> Vec<SubmissionEntry> {
        rows.iter()
            .map(|(id, v)| SubmissionEntry {
                sample_id: *id,
                predicted: prev(v),
            })
            .collect()
    }

    #[test]
    fn scoring_examples() {
        let ctx = MetricContext::new(250).unwrap();
        let truth = vec![(0, prev(&[0.5, 0.5])), (1, prev(&[0.2, 0.8]))];
        let perfect = entries(&[(0, &[0.5, 0.5]), (1, &[0.2, 0.8])]);
        let r = score_submission("truth", &truth, &perfect, &ctx, false).unwrap();
        assert_eq!((r.mean_rae, r.mean_ae), (0.0, 0.0));

        let single = vec![(0, prev(&[0.5, 0.5]))];
        let r = score_submission("s", &single, &entries(&[(0, &[0.75, 0.25])]), &ctx, false).unwrap();
        assert!((r.rae[0] - 0.498008).abs() < 1e-5);
        assert_eq!(r.ae[0], 0.25);

        let truth2 = vec![(0, prev(&[0.5, 0.5])), (1, prev(&[0.5, 0.5]))];
        let r = score_submission("s", &truth2, &entries(&[(0, &[0.6, 0.4]), (1, &[0.8, 0.2])]), &ctx, false)
            .unwrap();
        assert!((r.ae[0] - 0.1).abs() < 1e-12 && (r.ae[1] - 0.3).abs() < 1e-12);
        assert!((r.mean_ae - 0.2).abs() < 1e-12);
    }

    #[test]
    fn scoring_is_order_and_schedule_independent() {
        let ctx = MetricContext::new(100).unwrap();
        let truth = vec![(2, prev(&[0.1, 0.9])), (0, prev(&[0.5, 0.5])), (1, prev(&[1.0, 0.0]))];
        let e = entries(&[(1, &[0.7, 0.3]), (0, &[0.4, 0.6]), (2, &[0.2, 0.8])]);
        let mut reversed = e.clone();
        reversed.reverse();
        let a = score_submission("x", &truth, &e, &ctx, false).unwrap();
        let b = score_submission("x", &truth, &reversed, &ctx, true).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sample_ids, vec![0, 1, 2]);
    }

    fn report(name: &str, rae: f64, ae: f64) -> ScoreReport {
        ScoreReport::from_scores(name.into(), vec![0], vec![rae], vec![ae]).unwrap()
    }

    #[test]
    fn ranking_examples() {
        let t = rank_systems(&[report("A", 0.2, 0.0), report("B", 0.1, 0.5)]).unwrap();
        assert_eq!(t.rows.iter().map(|r| r.system.as_str()).collect::<Vec<_>>(), ["B", "A"]);
        assert_eq!(t.rows[0].rank, 1);

        let t = rank_systems(&[report("B", 0.1, 0.08), report("A", 0.1, 0.05)]).unwrap();
        assert_eq!(t.rows[0].system, "A");

        let t = rank_systems(&[report("Z", 0.1, 0.1), report("Y", 0.1, 0.1)]).unwrap();
        assert_eq!(t.rows[0].system, "Y");

        assert_eq!(rank_systems(&[report("solo", 1.0, 1.0)]).unwrap().rows.len(), 1);

        let two = ScoreReport::from_scores("C".into(), vec![0, 1], vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert!(rank_systems(&[report("A", 0.1, 0.1), two]).is_err());
    }

    #[test]
    fn self_comparison_is_not_significant() {
        let a = ScoreReport::from_scores("a".into(), vec![0, 1, 2], vec![0.1, 0.2, 0.3], vec![0.0; 3]).unwrap();
        let mut b = a.clone();
        b.system = "b".into();
        let pairs = pairwise_significance(&[a, b]).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].result.p_value, 1.0);
    }
}
