//! Toolkit for evaluating class-prevalence estimators ("quantifiers").
//!
//! * [`prevalence`]: simplex vectors, smoothing, AE and RAE.
//! * [`sampling`]: uniform simplex draws, APP sample extraction, stratified
//!   draws and a synthetic Gaussian dataset generator.
//! * [`classifier`] and [`quantifiers`]: a softmax regression model and the
//!   MLPE, CC, PCC, ACC and PACC baselines built on it.
//! * [`evaluation`] and [`wilcoxon`]: submission validation, scoring,
//!   ranking and paired significance tests.
//! * [`formats`]: the CSV and model file formats shared with the CLI.

pub mod classifier;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod formats;
pub mod preset;
pub mod prevalence;
pub mod quantifiers;
pub mod rng;
pub mod sampling;
pub mod wilcoxon;

pub use data::{LabelledInstance, LabelledPool, Sample};
pub use error::{Error, Result};
pub use prevalence::{MetricContext, Prevalence};
