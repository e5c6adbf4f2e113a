//! Sample generation under the artificial prevalence protocol.
//!
//! A collection is produced by repeatedly drawing a prevalence vector
//! uniformly from the unit simplex, turning it into integer per-class
//! counts, and picking that many documents of each class from a labelled
//! pool. Each sample gets its own random stream derived from the master
//! seed, so generation order (and thread count) never changes the output.

use ndarray::Axis;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::data::{LabelledPool, Sample};
use crate::error::{Error, Result};
use crate::prevalence::Prevalence;
use crate::rng::{self, SeededRng};

/// Draws a point uniformly from the unit `(n-1)`-simplex using sorted
/// uniform spacings.
pub fn sample_uniform_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Prevalence> {
    if n == 0 {
        return Err(Error::InvalidArgument("class count must be >= 1".into()));
    }
    let draws: Vec<f64> = (0..n - 1).map(|_| rng.random::<f64>()).collect();
    simplex_from_uniforms(&draws)
}

/// Spacings of `{0, sorted(draws), 1}`. `draws` must lie in `[0, 1]`.
pub fn simplex_from_uniforms(draws: &[f64]) -> Result<Prevalence> {
    if let Some(bad) = draws.iter().find(|u| !(0.0..=1.0).contains(*u)) {
        return Err(Error::InvalidArgument(format!("draw {bad} outside [0, 1]")));
    }
    let mut cuts = Vec::with_capacity(draws.len() + 2);
    cuts.push(0.0);
    cuts.extend_from_slice(draws);
    cuts.push(1.0);
    cuts[1..=draws.len()].sort_by(f64::total_cmp);
    Prevalence::new(cuts.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Largest-remainder rounding of `size * p` to integer counts summing to
/// `size`. Remainder ties go to the lower class index.
pub fn integer_allocation(p: &Prevalence, size: usize) -> Vec<usize> {
    let targets: Vec<f64> = p.as_slice().iter().map(|&v| v * size as f64).collect();
    let mut counts: Vec<usize> = targets.iter().map(|t| t.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();

    let mut order: Vec<usize> = (0..counts.len()).collect();
    // Fractional parts are compared at 1e-9 resolution so that rounding
    // noise in `p` does not override the index tie-break.
    let frac_key = |i: usize| ((targets[i] - targets[i].floor()) * 1e9).round() as i64;
    order.sort_by(|&a, &b| frac_key(b).cmp(&frac_key(a)).then(a.cmp(&b)));

    if assigned <= size {
        for &i in order.iter().cycle().take(size - assigned) {
            counts[i] += 1;
        }
    } else {
        // Only reachable when the components sum slightly above one.
        let mut excess = assigned - size;
        for &i in order.iter().rev() {
            if excess == 0 {
                break;
            }
            if counts[i] > 0 {
                counts[i] -= 1;
                excess -= 1;
            }
        }
    }
    counts
}

/// Picks `integer_allocation(p, size)` documents of each class from `pool`
/// without replacement, then shuffles them. The recorded true prevalence is
/// the realized composition.
pub fn extract_sample(
    pool: &LabelledPool,
    p: &Prevalence,
    size: usize,
    id: u64,
    rng: &mut SeededRng,
) -> Result<Sample> {
    if size == 0 {
        return Err(Error::InvalidArgument("sample size must be >= 1".into()));
    }
    if p.len() != pool.num_classes() {
        return Err(Error::LengthMismatch {
            expected: pool.num_classes(),
            actual: p.len(),
        });
    }
    let counts = integer_allocation(p, size);
    for (class, &want) in counts.iter().enumerate() {
        let available = pool.class_indices(class).len();
        if want > available {
            return Err(Error::Shortfall {
                class,
                requested: want,
                available,
                shortfall: want - available,
            });
        }
    }

    let mut rows = Vec::with_capacity(size);
    for (class, &want) in counts.iter().enumerate() {
        let members = pool.class_indices(class);
        rows.extend(
            index::sample(rng, members.len(), want)
                .into_iter()
                .map(|k| members[k]),
        );
    }
    rows.shuffle(rng);

    Ok(Sample {
        id,
        features: pool.features().select(Axis(0), &rows),
        true_prevalence: Some(Prevalence::from_counts(&counts)?),
        source_rows: Some(rows),
    })
}

/// Stratified draw of `size` documents. Returns `(drawn, residual)`; both
/// keep the pool's row order.
pub fn stratified_draw(
    pool: &LabelledPool,
    size: usize,
    rng: &mut SeededRng,
) -> Result<(LabelledPool, LabelledPool)> {
    if size > pool.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {size} documents from a pool of {}",
            pool.len()
        )));
    }
    if pool.is_empty() {
        return Ok((pool.clone(), pool.clone()));
    }
    let counts = integer_allocation(&pool.prevalence()?, size);
    let mut taken = vec![false; pool.len()];
    for (class, &want) in counts.iter().enumerate() {
        let members = pool.class_indices(class);
        for k in index::sample(rng, members.len(), want) {
            taken[members[k]] = true;
        }
    }
    let (drawn, residual): (Vec<usize>, Vec<usize>) = (0..pool.len()).partition(|&i| taken[i]);
    Ok((pool.subset(&drawn), pool.subset(&residual)))
}

/// Generated samples with their ground truth, ordered by sample id.
#[derive(Debug, Clone, PartialEq)]
pub struct Collection {
    pub samples: Vec<Sample>,
}

impl Collection {
    /// `(sample_id, realized prevalence)` rows.
    pub fn truth(&self) -> Vec<(u64, Prevalence)> {
        self.samples
            .iter()
            .map(|s| {
                let p = s
                    .true_prevalence
                    .clone()
                    .expect("generated samples carry their prevalence");
                (s.id, p)
            })
            .collect()
    }
}

fn generate_one(pool: &LabelledPool, id: u64, size: usize, master_seed: u64) -> Result<Sample> {
    let mut rng = rng::stream(master_seed, id);
    let p = sample_uniform_simplex(pool.num_classes(), &mut rng)?;
    extract_sample(pool, &p, size, id, &mut rng)
}

/// `n_samples` APP samples with ids `0..n_samples`. Sample `i` depends only
/// on `(master_seed, i)`; `parallel` only changes how the work is scheduled.
pub fn generate_collection(
    pool: &LabelledPool,
    n_samples: usize,
    size: usize,
    master_seed: u64,
    parallel: bool,
) -> Result<Collection> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("number of samples must be >= 1".into()));
    }
    let ids = 0..n_samples as u64;
    let samples = if parallel {
        ids.into_par_iter()
            .map(|id| generate_one(pool, id, size, master_seed))
            .collect::<Result<Vec<_>>>()?
    } else {
        ids.map(|id| generate_one(pool, id, size, master_seed))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(Collection { samples })
}

/// Spherical unit-variance Gaussian clouds, class `i` centred at
/// `separation * e_(i mod d)`. Rows are grouped by class.
pub fn synth_dataset(
    n: usize,
    d: usize,
    per_class: &[usize],
    separation: f64,
    rng: &mut SeededRng,
) -> Result<LabelledPool> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "quantification needs at least 2 classes".into(),
        ));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    if per_class.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: per_class.len(),
        });
    }
    let total: usize = per_class.iter().sum();
    let mut flat = Vec::with_capacity(total * d);
    let mut labels = Vec::with_capacity(total);
    for (class, &count) in per_class.iter().enumerate() {
        let axis = class % d;
        for _ in 0..count {
            for j in 0..d {
                let noise: f64 = rng.sample(StandardNormal);
                flat.push(if j == axis { separation + noise } else { noise });
            }
            labels.push(class);
        }
    }
    let features = ndarray::Array2::from_shape_vec((total, d), flat)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    LabelledPool::new(features, labels, n)
}
