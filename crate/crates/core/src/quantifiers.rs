//! Baseline quantifiers: MLPE, CC, PCC, ACC and PACC.
//!
//! ACC and PACC correct the counts of CC and PCC by inverting a
//! misclassification matrix estimated with stratified k-fold
//! cross-validation on the training pool.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::classifier::{argmax, train_classifier, Classifier, ClassifierModel, TrainConfig, TrainingSummary};
use crate::data::{LabelledPool, Sample};
use crate::error::{Error, Result};
use crate::prevalence::{Prevalence, SIMPLEX_TOLERANCE};
use crate::rng;

/// Below this `|tpr - fpr|` (binary) or smallest singular value
/// (multiclass) the correction is considered unsolvable.
pub const SINGULAR_THRESHOLD: f64 = 1e-6;

pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixMode {
    /// Counts of argmax predictions.
    Hard,
    /// Averages of posterior vectors.
    Soft,
}

/// `entries[[i, j]]` is the rate of predicting class `i` for documents of
/// true class `j`; columns sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct MisclassificationMatrix {
    entries: Array2<f64>,
    mode: MatrixMode,
}

impl MisclassificationMatrix {
    pub fn new(entries: Array2<f64>, mode: MatrixMode) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::InvalidArgument(
                "misclassification matrix must be square and non-empty".into(),
            ));
        }
        if entries.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument(
                "misclassification rates must lie in [0, 1]".into(),
            ));
        }
        for (j, col) in entries.axis_iter(Axis(1)).enumerate() {
            let sum = col.sum();
            if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
                return Err(Error::InvalidArgument(format!(
                    "column {j} sums to {sum}"
                )));
            }
        }
        Ok(MisclassificationMatrix { entries, mode })
    }

    pub fn identity(n: usize, mode: MatrixMode) -> Self {
        MisclassificationMatrix {
            entries: Array2::eye(n),
            mode,
        }
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn mode(&self) -> MatrixMode {
        self.mode
    }

    pub fn num_classes(&self) -> usize {
        self.entries.nrows()
    }

    /// Divides every column by its sum.
    fn from_column_totals(mut totals: Array2<f64>, mode: MatrixMode) -> Result<Self> {
        for mut col in totals.axis_iter_mut(Axis(1)) {
            let sum = col.sum();
            col.mapv_inplace(|v| v / sum);
        }
        Self::new(totals, mode)
    }
}

/// Hard and soft matrices from out-of-fold predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct MisclassificationEstimate {
    pub hard: MisclassificationMatrix,
    pub soft: MisclassificationMatrix,
}

/// Stratified `k`-fold assignment: within each class the members are
/// shuffled and dealt round-robin.
fn fold_of_rows(pool: &LabelledPool, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng::seeded(seed);
    let mut folds = vec![0; pool.len()];
    for class in 0..pool.num_classes() {
        let mut members = pool.class_indices(class).to_vec();
        members.shuffle(&mut rng);
        for (pos, row) in members.into_iter().enumerate() {
            folds[row] = pos % k;
        }
    }
    folds
}

pub fn estimate_misclassification(
    pool: &LabelledPool,
    k: usize,
    config: &TrainConfig,
    seed: u64,
    parallel: bool,
) -> Result<MisclassificationEstimate> {
    if k < 2 {
        return Err(Error::InvalidArgument("k must be >= 2".into()));
    }
    for (class, &available) in pool.class_counts().iter().enumerate() {
        if available < k {
            return Err(Error::TooFewForFolds {
                class,
                available,
                required: k,
            });
        }
    }
    let n = pool.num_classes();
    let folds = fold_of_rows(pool, k, seed);

    let run_fold = |fold: usize| -> Result<(Array2<f64>, Array2<f64>)> {
        let (held, kept): (Vec<usize>, Vec<usize>) =
            (0..pool.len()).partition(|&i| folds[i] == fold);
        let (model, _) = train_classifier(&pool.subset(&kept), config)?;
        let held_pool = pool.subset(&held);
        let post = model.posterior_matrix(held_pool.features())?;
        let mut hard = Array2::zeros((n, n));
        let mut soft = Array2::zeros((n, n));
        for (row, &y) in post.axis_iter(Axis(0)).zip(held_pool.labels()) {
            let row = row.as_slice().expect("standard layout");
            hard[[argmax(row), y]] += 1.0;
            for (i, &p) in row.iter().enumerate() {
                soft[[i, y]] += p;
            }
        }
        Ok((hard, soft))
    };

    let per_fold: Vec<(Array2<f64>, Array2<f64>)> = if parallel {
        (0..k).into_par_iter().map(run_fold).collect::<Result<_>>()?
    } else {
        (0..k).map(run_fold).collect::<Result<_>>()?
    };
    // Summed in fold order so the result does not depend on scheduling.
    let mut hard = Array2::zeros((n, n));
    let mut soft = Array2::zeros((n, n));
    for (h, s) in per_fold {
        hard += &h;
        soft += &s;
    }
    Ok(MisclassificationEstimate {
        hard: MisclassificationMatrix::from_column_totals(hard, MatrixMode::Hard)?,
        soft: MisclassificationMatrix::from_column_totals(soft, MatrixMode::Soft)?,
    })
}

/// Output of a quantifier; `fallback` marks an adjustment that could not
/// be solved and returned the unadjusted estimate instead.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub prevalence: Prevalence,
    pub fallback: bool,
}

pub fn quantify_mlpe(summary: &TrainingSummary, _sample: &Sample) -> Prevalence {
    summary.training_prevalence.clone()
}

fn check_sample<C: Classifier + ?Sized>(model: &C, sample: &Sample) -> Result<()> {
    if sample.is_empty() {
        return Err(Error::Empty("sample"));
    }
    if sample.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: sample.dim(),
        });
    }
    Ok(())
}

/// Classify and count.
pub fn quantify_cc<C: Classifier + ?Sized>(model: &C, sample: &Sample) -> Result<Prevalence> {
    check_sample(model, sample)?;
    let mut counts = vec![0usize; model.num_classes()];
    for row in sample.features.axis_iter(Axis(0)) {
        counts[model.predict(row)?] += 1;
    }
    Prevalence::from_counts(&counts)
}

/// Mean posterior vector.
pub fn quantify_pcc<C: Classifier + ?Sized>(model: &C, sample: &Sample) -> Result<Prevalence> {
    check_sample(model, sample)?;
    let mut total = vec![0.0; model.num_classes()];
    for row in sample.features.axis_iter(Axis(0)) {
        for (t, p) in total.iter_mut().zip(model.posteriors(row)?) {
            *t += p;
        }
    }
    let size = sample.len() as f64;
    Prevalence::clip_and_normalize(&total.into_iter().map(|t| t / size).collect::<Vec<_>>())
}

fn expect_mode(m: &MisclassificationMatrix, mode: MatrixMode) -> Result<()> {
    if m.mode != mode {
        return Err(Error::InvalidArgument(format!(
            "expected a {mode:?} misclassification matrix, got {:?}",
            m.mode
        )));
    }
    Ok(())
}

/// Solves `M p = observed`, then clips to `[0, 1]` and renormalizes.
/// `None` when the system is (near) singular.
pub fn adjust(m: &MisclassificationMatrix, observed: &Prevalence) -> Result<Option<Prevalence>> {
    let n = m.num_classes();
    if observed.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: observed.len(),
        });
    }
    let raw = match n {
        1 => vec![1.0],
        2 => {
            let tpr = m.entries[[0, 0]];
            let fpr = m.entries[[0, 1]];
            if (tpr - fpr).abs() < SINGULAR_THRESHOLD {
                return Ok(None);
            }
            let p0 = (observed[0] - fpr) / (tpr - fpr);
            vec![p0, 1.0 - p0]
        }
        _ => {
            let a = DMatrix::from_fn(n, n, |i, j| m.entries[[i, j]]);
            let b = DVector::from_column_slice(observed.as_slice());
            let svd = a.svd(true, true);
            if svd.singular_values.min() < SINGULAR_THRESHOLD {
                return Ok(None);
            }
            match svd.solve(&b, 0.0) {
                Ok(x) => x.iter().copied().collect(),
                Err(_) => return Ok(None),
            }
        }
    };
    let clipped: Vec<f64> = raw.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Ok(Prevalence::clip_and_normalize(&clipped).ok())
}

fn adjusted(m: &MisclassificationMatrix, base: Prevalence) -> Result<Estimate> {
    Ok(match adjust(m, &base)? {
        Some(prevalence) => Estimate {
            prevalence,
            fallback: false,
        },
        None => Estimate {
            prevalence: base,
            fallback: true,
        },
    })
}

/// Adjusted classify and count; falls back to CC when the hard matrix
/// cannot be inverted.
pub fn quantify_acc<C: Classifier + ?Sized>(
    model: &C,
    m: &MisclassificationMatrix,
    sample: &Sample,
) -> Result<Estimate> {
    expect_mode(m, MatrixMode::Hard)?;
    adjusted(m, quantify_cc(model, sample)?)
}

/// Probabilistic adjusted classify and count; falls back to PCC.
pub fn quantify_pacc<C: Classifier + ?Sized>(
    model: &C,
    m: &MisclassificationMatrix,
    sample: &Sample,
) -> Result<Estimate> {
    expect_mode(m, MatrixMode::Soft)?;
    adjusted(m, quantify_pcc(model, sample)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Mlpe,
    Cc,
    Pcc,
    Acc,
    Pacc,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Mlpe, Method::Cc, Method::Pcc, Method::Acc, Method::Pacc];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mlpe => "mlpe",
            Method::Cc => "cc",
            Method::Pcc => "pcc",
            Method::Acc => "acc",
            Method::Pacc => "pacc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::InvalidArgument(format!(
                    "unknown method '{s}' (valid: {})",
                    names.join(", ")
                ))
            })
    }
}

/// A trained classifier bundled with everything the five methods need.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedQuantifier {
    pub model: ClassifierModel,
    pub summary: TrainingSummary,
    pub misclassification: MisclassificationEstimate,
}

impl FittedQuantifier {
    pub fn fit(
        pool: &LabelledPool,
        config: &TrainConfig,
        folds: usize,
        seed: u64,
        parallel: bool,
    ) -> Result<Self> {
        let (model, summary) = train_classifier(pool, config)?;
        let misclassification = estimate_misclassification(pool, folds, config, seed, parallel)?;
        Ok(FittedQuantifier {
            model,
            summary,
            misclassification,
        })
    }

    pub fn quantify(&self, method: Method, sample: &Sample) -> Result<Estimate> {
        let plain = |prevalence| Estimate {
            prevalence,
            fallback: false,
        };
        match method {
            Method::Mlpe => Ok(plain(quantify_mlpe(&self.summary, sample))),
            Method::Cc => quantify_cc(&self.model, sample).map(plain),
            Method::Pcc => quantify_pcc(&self.model, sample).map(plain),
            Method::Acc => quantify_acc(&self.model, &self.misclassification.hard, sample),
            Method::Pacc => quantify_pacc(&self.model, &self.misclassification.soft, sample),
        }
    }
}
