//! Labelled pools and unlabelled samples.

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::prevalence::Prevalence;

#[derive(Debug, Clone, PartialEq)]
pub struct LabelledInstance {
    pub features: Vec<f64>,
    pub label: usize,
}

/// Feature vectors with class labels, indexed by class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledPool {
    features: Array2<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    by_class: Vec<Vec<usize>>,
}

impl LabelledPool {
    /// Builds a pool from a row-major feature matrix. An empty pool is
    /// allowed (it still carries its dimension and class count).
    pub fn new(features: Array2<f64>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::InvalidArgument("num_classes must be >= 1".into()));
        }
        if features.ncols() == 0 {
            return Err(Error::InvalidArgument("feature dimension must be >= 1".into()));
        }
        if features.nrows() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: features.nrows(),
                actual: labels.len(),
            });
        }
        let mut by_class = vec![Vec::new(); num_classes];
        for (i, &y) in labels.iter().enumerate() {
            if y >= num_classes {
                return Err(Error::InvalidArgument(format!(
                    "label {y} at row {i} outside 0..{num_classes}"
                )));
            }
            by_class[y].push(i);
        }
        Ok(LabelledPool {
            features,
            labels,
            num_classes,
            by_class,
        })
    }

    pub fn from_instances(
        instances: &[LabelledInstance],
        dim: usize,
        num_classes: usize,
    ) -> Result<Self> {
        let mut flat = Vec::with_capacity(instances.len() * dim);
        for inst in instances {
            if inst.features.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: inst.features.len(),
                });
            }
            flat.extend_from_slice(&inst.features);
        }
        let features = Array2::from_shape_vec((instances.len(), dim), flat)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let labels = instances.iter().map(|i| i.label).collect();
        Self::new(features, labels, num_classes)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    /// Row indexes of class `class`, in pool order.
    pub fn class_indices(&self, class: usize) -> &[usize] {
        &self.by_class[class]
    }

    pub fn class_counts(&self) -> Vec<usize> {
        self.by_class.iter().map(Vec::len).collect()
    }

    pub fn prevalence(&self) -> Result<Prevalence> {
        Prevalence::from_counts(&self.class_counts())
    }

    /// New pool made of the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> LabelledPool {
        let features = self.features.select(Axis(0), rows);
        let labels = rows.iter().map(|&r| self.labels[r]).collect();
        LabelledPool::new(features, labels, self.num_classes)
            .expect("subset of a valid pool is valid")
    }
}

/// An unlabelled bag of documents to be quantified.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: u64,
    pub features: Array2<f64>,
    /// Realized class composition; only known on the generator side.
    pub true_prevalence: Option<Prevalence>,
    /// Pool rows the documents were drawn from, in sample order.
    pub source_rows: Option<Vec<usize>>,
}

impl Sample {
    pub fn unlabelled(id: u64, features: Array2<f64>) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::Empty("sample"));
        }
        Ok(Sample {
            id,
            features,
            true_prevalence: None,
            source_rows: None,
        })
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }
}
