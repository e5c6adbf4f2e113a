//! Run configuration: a task preset plus command-line overrides.

use std::path::PathBuf;

use clap::Args;
use quantbench::preset::TaskPreset;

use crate::error::{CliError, CliResult};

/// Stream ids under the master seed, one per pipeline stage.
pub mod streams {
    pub const SYNTH: u64 = 0x5359_4e54;
    pub const TRAIN_SPLIT: u64 = 0x5452_4149;
    pub const DEV: u64 = 0x0044_4556;
    pub const TEST: u64 = 0x5445_5354;
    pub const FOLDS: u64 = 0x464f_4c44;
}

#[derive(Debug, Clone, Args)]
pub struct PresetArgs {
    /// Task preset: t1a-desk, t1b-desk, t1b-quick, t1a-paper, t1b-paper.
    #[arg(long, default_value = "t1a-desk")]
    pub preset: String,
    /// Number of classes (overrides the preset).
    #[arg(long)]
    pub classes: Option<usize>,
    /// Feature dimension (defaults to the class count when --classes is set).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Documents per sample.
    #[arg(long = "sample-size")]
    pub sample_size: Option<usize>,
    /// Number of samples to generate (overrides the preset's dev/test count).
    #[arg(long = "num-samples")]
    pub num_samples: Option<usize>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub master_seed: u64,
    pub preset: TaskPreset,
    pub classes: usize,
    pub dim: usize,
    pub sample_size: usize,
    pub training_size: usize,
    pub dev_samples: usize,
    pub test_samples: usize,
    pub separation: f64,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn resolve(args: &PresetArgs, seed: u64, out: PathBuf) -> CliResult<Self> {
        let preset: TaskPreset = args.preset.parse()?;
        let classes = args.classes.unwrap_or(preset.classes);
        let dim = match (args.dim, args.classes) {
            (Some(d), _) => d,
            (None, Some(c)) => c,
            (None, None) => preset.dim,
        };
        let sample_size = args.sample_size.unwrap_or(preset.sample_size);
        if classes < 2 {
            return Err(CliError::usage(
                "quantification needs at least 2 classes (--classes >= 2)",
            ));
        }
        if dim == 0 || sample_size == 0 {
            return Err(CliError::usage("--dim and --sample-size must be >= 1"));
        }
        if args.num_samples == Some(0) {
            return Err(CliError::usage("--num-samples must be >= 1"));
        }
        Ok(RunConfig {
            master_seed: seed,
            preset,
            classes,
            dim,
            sample_size,
            training_size: preset.training_size,
            dev_samples: args.num_samples.unwrap_or(preset.dev_samples),
            test_samples: args.num_samples.unwrap_or(preset.test_samples),
            separation: preset.separation,
            out,
        })
    }

    /// Per-class size of a synthetic pool: the stratified training draw plus
    /// one full sample of any class.
    pub fn pool_per_class(&self) -> usize {
        self.training_size.div_ceil(self.classes) + self.sample_size
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(preset: &str) -> PresetArgs {
        PresetArgs {
            preset: preset.into(),
            classes: None,
            dim: None,
            sample_size: None,
            num_samples: None,
        }
    }

    #[test]
    fn paper_presets_expand() {
        let a = RunConfig::resolve(&args("t1a-paper"), 1, "o".into()).unwrap();
        assert_eq!(
            (a.classes, a.sample_size, a.training_size, a.dev_samples, a.test_samples),
            (2, 250, 5_000, 1_000, 5_000)
        );
        let b = RunConfig::resolve(&args("t1b-paper"), 1, "o".into()).unwrap();
        assert_eq!(
            (b.classes, b.sample_size, b.training_size, b.dev_samples, b.test_samples),
            (28, 1_000, 20_000, 1_000, 5_000)
        );
    }

    #[test]
    fn overrides_and_rejections() {
        let mut a = args("t1a-desk");
        a.classes = Some(28);
        let c = RunConfig::resolve(&a, 0, "o".into()).unwrap();
        assert_eq!((c.classes, c.dim), (28, 28));

        a.classes = Some(1);
        let err = RunConfig::resolve(&a, 0, "o".into()).unwrap_err();
        assert_eq!(err.exit_code(), 1);

        let err = RunConfig::resolve(&args("t7"), 0, "o".into()).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.message.contains("t1a-desk"));
    }
}
