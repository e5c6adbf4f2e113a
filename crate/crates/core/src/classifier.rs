//! Multinomial logistic regression trained by full-batch gradient descent.

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::data::LabelledPool;
use crate::error::{Error, Result};
use crate::prevalence::Prevalence;

/// Anything that maps a feature vector to a posterior distribution over
/// classes. Quantifiers only need this much.
pub trait Classifier {
    fn num_classes(&self) -> usize;

    fn dim(&self) -> usize;

    fn posteriors(&self, x: ArrayView1<'_, f64>) -> Result<Vec<f64>>;

    /// Argmax of the posteriors, ties to the lowest class index.
    fn predict(&self, x: ArrayView1<'_, f64>) -> Result<usize> {
        Ok(argmax(&self.posteriors(x)?))
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 500,
            learning_rate: 0.1,
            l2: 1e-4,
        }
    }
}

/// Linear softmax model: `softmax(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    weights: Array2<f64>,
    biases: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSummary {
    pub training_prevalence: Prevalence,
    /// Objective before each update, then once after the last one.
    pub loss_trace: Vec<f64>,
}

impl ClassifierModel {
    pub fn new(weights: Array2<f64>, biases: Array1<f64>) -> Result<Self> {
        if weights.nrows() != biases.len() {
            return Err(Error::LengthMismatch {
                expected: weights.nrows(),
                actual: biases.len(),
            });
        }
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::InvalidArgument("empty weight matrix".into()));
        }
        if weights.iter().chain(biases.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite model parameter".into()));
        }
        Ok(ClassifierModel { weights, biases })
    }

    pub fn zeros(num_classes: usize, dim: usize) -> Self {
        ClassifierModel {
            weights: Array2::zeros((num_classes, dim)),
            biases: Array1::zeros(num_classes),
        }
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn biases(&self) -> &Array1<f64> {
        &self.biases
    }

    /// Row-wise softmax posteriors for a feature matrix.
    pub fn posterior_matrix(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.ncols(),
            });
        }
        let mut scores = x.dot(&self.weights.t()) + &self.biases;
        for mut row in scores.axis_iter_mut(Axis(0)) {
            softmax_in_place(row.as_slice_mut().expect("standard layout"));
        }
        Ok(scores)
    }
}

impl Classifier for ClassifierModel {
    fn num_classes(&self) -> usize {
        self.weights.nrows()
    }

    fn dim(&self) -> usize {
        self.weights.ncols()
    }

    fn posteriors(&self, x: ArrayView1<'_, f64>) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let mut scores = (self.weights.dot(&x) + &self.biases).to_vec();
        softmax_in_place(&mut scores);
        Ok(scores)
    }
}

pub fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}

/// Gradient of the training objective with respect to weights and biases.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

/// Mean cross-entropy plus `l2 / 2 * ||W||^2` (biases unpenalized), and its
/// gradient.
pub fn loss_and_gradient(
    model: &ClassifierModel,
    x: &Array2<f64>,
    labels: &[usize],
    l2: f64,
) -> Result<(f64, Gradient)> {
    if x.nrows() == 0 {
        return Err(Error::Empty("training pool"));
    }
    let n = x.nrows() as f64;
    let mut residual = model.posterior_matrix(x)?;
    let mut loss = 0.0;
    for (mut row, &y) in residual.axis_iter_mut(Axis(0)).zip(labels) {
        loss -= row[y].max(f64::MIN_POSITIVE).ln();
        row[y] -= 1.0;
    }
    loss = loss / n + 0.5 * l2 * model.weights.iter().map(|w| w * w).sum::<f64>();

    let weights = residual.t().dot(x) / n + &(&model.weights * l2);
    let biases = residual.sum_axis(Axis(0)) / n;
    Ok((loss, Gradient { weights, biases }))
}

/// Trains from zero initialization. Deterministic: full-batch updates, no
/// random state.
pub fn train_classifier(
    pool: &LabelledPool,
    config: &TrainConfig,
) -> Result<(ClassifierModel, TrainingSummary)> {
    if pool.is_empty() {
        return Err(Error::Empty("training pool"));
    }
    if let Some(class) = pool.class_counts().iter().position(|&c| c == 0) {
        return Err(Error::MissingClass(class));
    }
    let mut model = ClassifierModel::zeros(pool.num_classes(), pool.dim());
    let mut loss_trace = Vec::with_capacity(config.epochs + 1);
    for _ in 0..config.epochs {
        let (loss, grad) = loss_and_gradient(&model, pool.features(), pool.labels(), config.l2)?;
        loss_trace.push(loss);
        model.weights.scaled_add(-config.learning_rate, &grad.weights);
        model.biases.scaled_add(-config.learning_rate, &grad.biases);
    }
    let (final_loss, _) = loss_and_gradient(&model, pool.features(), pool.labels(), config.l2)?;
    loss_trace.push(final_loss);
    if loss_trace.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidArgument(
            "training diverged; lower the learning rate".into(),
        ));
    }
    let summary = TrainingSummary {
        training_prevalence: pool.prevalence()?,
        loss_trace,
    };
    Ok((model, summary))
}

/// Fraction of pool rows whose predicted label matches the true one.
pub fn accuracy<C: Classifier + ?Sized>(model: &C, pool: &LabelledPool) -> Result<f64> {
    let mut hits = 0usize;
    for (i, &y) in pool.labels().iter().enumerate() {
        if model.predict(pool.row(i))? == y {
            hits += 1;
        }
    }
    Ok(hits as f64 / pool.len() as f64)
}
