use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use quantbench::classifier::TrainConfig;
use quantbench::data::Sample;
use quantbench::evaluation::{
    pairwise_significance, rank_systems, score_submission, validate_submission, ScoreReport,
};
use quantbench::formats;
use quantbench::prevalence::{MetricContext, Prevalence};
use quantbench::quantifiers::{FittedQuantifier, Method, DEFAULT_FOLDS};
use quantbench::rng;
use quantbench::sampling::{generate_collection, stratified_draw, synth_dataset};

use crate::config::{streams, PresetArgs, RunConfig};
use crate::error::{CliError, CliResult};
use crate::fsio::{numbered_csv_files, open, system_name, write_atomic};

const FORMATS_HELP: &str = "\
File formats (all UTF-8 CSV unless noted):
  training pool / pool   header `label,f0,...,f{d-1}`; label is a 0-based class
                         index; features printed with up to 8 significant digits
  sample                 `samples/<id>.csv`, header `f0,...,f{d-1}`, one row per document
  ground truth           `truth.csv`, header `id,p0,...,p{n-1}`, one row per sample,
                         prevalences with 6 decimal places
  submission             same layout as ground truth; each row must have n
                         non-negative values summing to 1 +/- 0.001 (rows are
                         renormalized before scoring)
  report                 `# system=...` comment line, header `id,rae,ae`, one row per
                         sample, final row `mean,<mean rae>,<mean ae>`; RAE uses
                         additive smoothing with eps = 1/(2 * sample size), AE is unsmoothed
  ranking                header `rank,system,mean_rae,mean_ae`, ordered by mean RAE
                         (ties: mean AE, then name)
  significance           header `system_a,system_b,w,pairs,p_value,method,significant`;
                         two-sided Wilcoxon signed-rank on per-sample RAE, alpha = 0.05
  model (plain text)     `quantbench-model 1`, then `classes`, `dim`,
                         `training_prevalence`, `loss_trace`, `bias`, n `weight` rows,
                         n `hard` and n `soft` misclassification rows; 17 significant digits

Exit codes: 0 success, 1 usage error, 2 validation error, 3 data/capacity error.
All randomness is derived from --seed.";

#[derive(Debug, Parser)]
#[command(
    name = "quantbench",
    version,
    about = "Generate, quantify and score prevalence-estimation experiments",
    after_long_help = FORMATS_HELP
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a labelled Gaussian pool; write `train.csv` (stratified
    /// draw) and `pool.csv` (the remaining documents).
    Synth(SynthArgs),
    /// Draw APP samples from a pool; write `samples/<id>.csv` and `truth.csv`.
    GenSamples(GenSamplesArgs),
    /// Train the classifier and misclassification matrices; write a model file.
    Train(TrainArgs),
    /// Quantify every sample in a directory; write one submission per method.
    Quantify(QuantifyArgs),
    /// Score submissions against ground truth; write reports, ranking and
    /// significance tables.
    Evaluate(EvaluateArgs),
    /// Rank systems from report files.
    Rank(ReportsArgs),
    /// Pairwise Wilcoxon signed-rank tests between report files.
    Significance(ReportsArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub preset: PresetArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Distance of each class centre from the origin.
    #[arg(long)]
    pub separation: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Split {
    Dev,
    Test,
}

#[derive(Debug, Args)]
pub struct GenSamplesArgs {
    #[command(flatten)]
    pub preset: PresetArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Labelled pool to draw from.
    #[arg(long)]
    pub pool: PathBuf,
    /// Which collection to generate; selects the preset's sample count and
    /// an independent random stream.
    #[arg(long, value_enum, default_value = "test")]
    pub split: Split,
    /// Worker threads (1 = serial, 0 = all cores).
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labelled training pool.
    #[arg(long)]
    pub train: PathBuf,
    /// Number of classes (defaults to the largest label + 1).
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long = "learning-rate", default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    /// Cross-validation folds for the misclassification matrices.
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    pub folds: usize,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct QuantifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Directory of `<id>.csv` sample files.
    #[arg(long)]
    pub samples: PathBuf,
    /// Comma-separated methods (mlpe, cc, pcc, acc, pacc) or `all`.
    #[arg(long, default_value = "all")]
    pub method: String,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory; one `<method>.csv` per method.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Ground-truth table.
    #[arg(long)]
    pub truth: PathBuf,
    /// Preset supplying the sample size used for RAE smoothing.
    #[arg(long, default_value = "t1a-desk")]
    pub preset: String,
    /// Documents per sample (overrides the preset).
    #[arg(long = "sample-size")]
    pub sample_size: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Submission files; the system name is the file name up to its first dot.
    #[arg(required = true)]
    pub submissions: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportsArgs {
    /// Output file.
    #[arg(long)]
    pub out: PathBuf,
    /// Report files written by `evaluate`.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
}

pub fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::GenSamples(a) => cmd_gen_samples(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Quantify(a) => cmd_quantify(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Rank(a) => cmd_rank(&a),
        Command::Significance(a) => cmd_significance(&a),
    }
}

/// Runs `work` serially (`jobs == 1`) or on a dedicated pool; the flag
/// passed to `work` says which.
fn with_jobs<T>(jobs: usize, work: impl FnOnce(bool) -> T + Send) -> CliResult<T>
where
    T: Send,
{
    if jobs == 1 {
        return Ok(work(false));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::data(format!("cannot start worker threads: {e}")))?;
    Ok(pool.install(|| work(true)))
}

pub fn cmd_synth(a: &SynthArgs) -> CliResult<()> {
    let mut cfg = RunConfig::resolve(&a.preset, a.seed, a.out.clone())?;
    if let Some(s) = a.separation {
        cfg.separation = s;
    }
    let per_class = vec![cfg.pool_per_class(); cfg.classes];
    let mut synth_rng = rng::stream(cfg.master_seed, streams::SYNTH);
    let omega = synth_dataset(cfg.classes, cfg.dim, &per_class, cfg.separation, &mut synth_rng)?;
    let mut split_rng = rng::stream(cfg.master_seed, streams::TRAIN_SPLIT);
    let (train, residual) = stratified_draw(&omega, cfg.training_size, &mut split_rng)?;

    write_atomic(&cfg.out.join("train.csv"), |w| formats::write_pool(&train, w))?;
    write_atomic(&cfg.out.join("pool.csv"), |w| formats::write_pool(&residual, w))?;
    eprintln!(
        "wrote {} training and {} pool documents ({} classes, dim {}) to {}",
        train.len(),
        residual.len(),
        cfg.classes,
        cfg.dim,
        cfg.out.display()
    );
    Ok(())
}

pub fn cmd_gen_samples(a: &GenSamplesArgs) -> CliResult<()> {
    let cfg = RunConfig::resolve(&a.preset, a.seed, a.out.clone())?;
    let pool = formats::read_pool(open(&a.pool)?, Some(cfg.classes))
        .map_err(|e| CliError::from(e).context(a.pool.display()))?;
    let (n_samples, stream) = match a.split {
        Split::Dev => (cfg.dev_samples, streams::DEV),
        Split::Test => (cfg.test_samples, streams::TEST),
    };
    let master = rng::stream_seed(cfg.master_seed, stream);
    let collection = with_jobs(a.jobs, |parallel| {
        generate_collection(&pool, n_samples, cfg.sample_size, master, parallel)
    })?
    .map_err(|e| CliError::data(e.to_string()).context("pool too small for sample allocation"))?;

    let sample_dir = cfg.out.join("samples");
    fs::create_dir_all(&sample_dir)?;
    // Leftovers from an earlier, larger run would be picked up by `quantify`.
    for (id, path) in numbered_csv_files(&sample_dir)? {
        if id >= n_samples as u64 {
            fs::remove_file(path)?;
        }
    }
    let write_one = |s: &Sample| {
        write_atomic(&sample_dir.join(format!("{}.csv", s.id)), |w| formats::write_sample(s, w))
    };
    with_jobs(a.jobs, |parallel| {
        if parallel {
            collection.samples.par_iter().try_for_each(write_one)
        } else {
            collection.samples.iter().try_for_each(write_one)
        }
    })??;

    let truth = collection.truth();
    write_atomic(&cfg.out.join("truth.csv"), |w| {
        formats::write_prevalence_table(truth.iter().map(|(id, p)| (*id, p)), cfg.classes, w)
    })?;
    eprintln!(
        "wrote {n_samples} samples of {} documents to {}",
        cfg.sample_size,
        cfg.out.display()
    );
    Ok(())
}

pub fn cmd_train(a: &TrainArgs) -> CliResult<()> {
    let pool = formats::read_pool(open(&a.train)?, a.classes)
        .map_err(|e| CliError::from(e).context(a.train.display()))?;
    if pool.num_classes() < 2 {
        return Err(CliError::data("training pool needs at least 2 classes"));
    }
    let config = TrainConfig {
        epochs: a.epochs,
        learning_rate: a.learning_rate,
        l2: a.l2,
    };
    let fold_seed = rng::stream_seed(a.seed, streams::FOLDS);
    let fitted = with_jobs(a.jobs, |parallel| {
        FittedQuantifier::fit(&pool, &config, a.folds, fold_seed, parallel)
    })??;
    write_atomic(&a.out, |w| formats::write_model(&fitted, w))?;
    eprintln!(
        "trained on {} documents; final loss {:.6}",
        pool.len(),
        fitted.summary.loss_trace.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

pub fn parse_methods(spec: &str) -> CliResult<Vec<Method>> {
    if spec.trim().eq_ignore_ascii_case("all") {
        return Ok(Method::ALL.to_vec());
    }
    let mut methods = Vec::new();
    for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let m: Method = name.parse()?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    if methods.is_empty() {
        return Err(CliError::usage("no quantification method given"));
    }
    Ok(methods)
}

pub fn cmd_quantify(a: &QuantifyArgs) -> CliResult<()> {
    let methods = parse_methods(&a.method)?;
    let fitted = formats::read_model(open(&a.model)?)
        .map_err(|e| CliError::from(e).context(a.model.display()))?;
    let files = numbered_csv_files(&a.samples)?;
    if files.is_empty() {
        return Err(CliError::data(format!("no <id>.csv samples in {}", a.samples.display())));
    }

    let quantify_file = |(id, path): &(u64, PathBuf)| -> CliResult<Vec<(Prevalence, bool)>> {
        let sample = formats::read_sample(open(path)?, *id)
            .map_err(|e| CliError::from(e).context(path.display()))?;
        methods
            .iter()
            .map(|&m| {
                fitted
                    .quantify(m, &sample)
                    .map(|e| (e.prevalence, e.fallback))
                    .map_err(|e| CliError::data(format!("sample {id}: {e}")))
            })
            .collect()
    };
    let per_sample: Vec<Vec<(Prevalence, bool)>> = with_jobs(a.jobs, |parallel| {
        if parallel {
            files.par_iter().map(quantify_file).collect::<CliResult<_>>()
        } else {
            files.iter().map(quantify_file).collect::<CliResult<_>>()
        }
    })??;

    let n = fitted.model.weights().nrows();
    for (k, method) in methods.iter().enumerate() {
        let rows: Vec<(u64, &Prevalence)> = files
            .iter()
            .zip(&per_sample)
            .map(|((id, _), est)| (*id, &est[k].0))
            .collect();
        let fallbacks = per_sample.iter().filter(|est| est[k].1).count();
        let path = a.out.join(format!("{method}.csv"));
        write_atomic(&path, |w| formats::write_prevalence_table(rows.iter().copied(), n, w))?;
        if fallbacks > 0 {
            eprintln!("{method}: {fallbacks} samples fell back to the unadjusted estimate");
        }
    }
    eprintln!(
        "quantified {} samples with {} method(s) into {}",
        files.len(),
        methods.len(),
        a.out.display()
    );
    Ok(())
}

fn unique_names(paths: &[PathBuf]) -> CliResult<()> {
    let mut seen = HashSet::new();
    for p in paths {
        if !seen.insert(system_name(p)) {
            return Err(CliError::usage(format!(
                "two inputs share the system name '{}'",
                system_name(p)
            )));
        }
    }
    Ok(())
}

fn write_tables(reports: &[ScoreReport], ranking: &Path, significance: &Path) -> CliResult<()> {
    let table = rank_systems(reports)?;
    write_atomic(ranking, |w| formats::write_ranking(&table, w))?;
    let pairs = pairwise_significance(reports)?;
    write_atomic(significance, |w| formats::write_significance(&pairs, w))?;
    Ok(())
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> CliResult<()> {
    unique_names(&a.submissions)?;
    let preset: quantbench::preset::TaskPreset = a.preset.parse()?;
    let ctx = MetricContext::new(a.sample_size.unwrap_or(preset.sample_size))?;
    let (n, truth) = formats::read_truth(open(&a.truth)?)
        .map_err(|e| CliError::from(e).context(a.truth.display()))?;
    let truth_ids: BTreeSet<u64> = truth.iter().map(|(id, _)| *id).collect();

    let mut reports = Vec::with_capacity(a.submissions.len());
    for path in &a.submissions {
        let system = system_name(path);
        let (_, raw) = formats::read_prevalence_table(open(path)?)
            .map_err(|e| CliError::from(e).context(path.display()))?;
        let entries = validate_submission(&raw, &truth_ids, n)
            .map_err(|e| CliError::from(e).context(path.display()))?;
        let report = with_jobs(a.jobs, |parallel| {
            score_submission(&system, &truth, &entries, &ctx, parallel)
        })??;
        write_atomic(&a.out.join(format!("{system}.report.csv")), |w| {
            formats::write_report(&report, &ctx, w)
        })?;
        reports.push(report);
    }
    write_tables(
        &reports,
        &a.out.join("ranking.csv"),
        &a.out.join("significance.csv"),
    )?;
    for row in rank_systems(&reports)?.rows {
        println!(
            "{:>3}  {:<12} mean RAE {:.6}  mean AE {:.6}",
            row.rank, row.system, row.mean_rae, row.mean_ae
        );
    }
    Ok(())
}

fn load_reports(paths: &[PathBuf]) -> CliResult<Vec<ScoreReport>> {
    paths
        .iter()
        .map(|p| {
            formats::read_report(open(p)?).map_err(|e| CliError::from(e).context(p.display()))
        })
        .collect()
}

pub fn cmd_rank(a: &ReportsArgs) -> CliResult<()> {
    let reports = load_reports(&a.reports)?;
    let table = rank_systems(&reports)?;
    write_atomic(&a.out, |w| formats::write_ranking(&table, w))
}

pub fn cmd_significance(a: &ReportsArgs) -> CliResult<()> {
    let reports = load_reports(&a.reports)?;
    let pairs = pairwise_significance(&reports)?;
    write_atomic(&a.out, |w| formats::write_significance(&pairs, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_lists() {
        assert_eq!(parse_methods("all").unwrap().len(), 5);
        assert_eq!(parse_methods("cc, acc,cc").unwrap(), vec![Method::Cc, Method::Acc]);
        let err = parse_methods("cc,hdy").unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.message.contains("mlpe, cc, pcc, acc, pacc"));
    }

    #[test]
    fn help_documents_formats() {
        use clap::CommandFactory;
        let help = Cli::command().render_long_help().to_string();
        for needle in ["label,f0", "id,p0", "id,rae,ae", "rank,system,mean_rae,mean_ae", "quantbench-model 1"] {
            assert!(help.contains(needle), "{needle}");
        }
    }
}
