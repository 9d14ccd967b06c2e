use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use edgelbp::classify::{self, ClassifierConfig, ClassifierKind, ForestConfig, MlpConfig, TrainedModel};
use edgelbp::dataset::{self, LabeledDataset, SyntheticSpec};
use edgelbp::descriptors::{extract, ExtractionConfig, FeatureVector, Scheme};
use edgelbp::edms::EdgeDirectionMode;
use edgelbp::eval::{compare_schemes, ExperimentConfig};
use edgelbp::io::{self, FeatureRow};
use edgelbp::moments::MomentScaling;
use edgelbp::stats::StdConvention;
use edgelbp::Error;

#[derive(Parser)]
#[command(name = "edgelbp", version, about = "Edge-direction and LBP image descriptors, classifiers and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract one descriptor scheme for every sample into a feature CSV.
    Extract(ExtractArgs),
    /// Train a classifier on a dataset or a feature CSV and save the model.
    Train(TrainArgs),
    /// Label samples with a saved model and write a prediction CSV.
    Predict(PredictArgs),
    /// Run the scheme × classifier matrix over repeated holdout splits.
    Bench(BenchArgs),
    /// Write a synthetic shape dataset to disk as PGM files.
    Synth(SynthArgs),
}

#[derive(Args, Clone)]
struct FeatureOpts {
    /// Gray levels for the co-occurrence matrix.
    #[arg(long, default_value_t = 16)]
    glcm_levels: usize,
    /// Store the maximal count in the edge-direction slot instead of its index.
    #[arg(long)]
    raw_edge_direction: bool,
    /// Keep Hu moments uncompressed.
    #[arg(long)]
    raw_moments: bool,
}

impl FeatureOpts {
    fn config(&self) -> ExtractionConfig {
        ExtractionConfig {
            glcm_levels: self.glcm_levels,
            edge_direction: if self.raw_edge_direction {
                EdgeDirectionMode::RawCount
            } else {
                EdgeDirectionMode::ArgmaxIndex
            },
            moment_scaling: if self.raw_moments {
                MomentScaling::Raw
            } else {
                MomentScaling::SignedLog
            },
        }
    }
}

#[derive(Args, Clone)]
struct ClassifierOpts {
    /// Trees in the random forest.
    #[arg(long, default_value_t = 100)]
    trees: usize,
    /// Maximum tree depth (unbounded by default).
    #[arg(long)]
    max_depth: Option<usize>,
    /// Hidden units in the perceptron.
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    /// Training epochs for the perceptron.
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    /// Gradient-descent step for the perceptron.
    #[arg(long, default_value_t = 0.5)]
    learning_rate: f64,
}

impl ClassifierOpts {
    fn config(&self, kind: ClassifierKind, seed: u64) -> ClassifierConfig {
        match kind {
            ClassifierKind::Knn => ClassifierConfig::Knn,
            ClassifierKind::Forest => ClassifierConfig::Forest(ForestConfig {
                n_trees: self.trees,
                max_depth: self.max_depth,
                seed,
                ..ForestConfig::default()
            }),
            ClassifierKind::Mlp => ClassifierConfig::Mlp(MlpConfig {
                hidden_units: self.hidden,
                epochs: self.epochs,
                learning_rate: self.learning_rate,
                seed,
            }),
        }
    }
}

#[derive(Args)]
struct ExtractArgs {
    /// Dataset directory (one sub-directory per class) or `synthetic:<classes>x<per_class>@<seed>`.
    #[arg(long)]
    dataset: String,
    #[arg(long, default_value = "PROPOSED")]
    scheme: Scheme,
    #[command(flatten)]
    features: FeatureOpts,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset to extract features from.
    #[arg(long, conflicts_with = "features", required_unless_present = "features")]
    dataset: Option<String>,
    /// Feature CSV written by `extract`.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Scheme to extract when training from a dataset.
    #[arg(long, default_value = "PROPOSED")]
    scheme: Scheme,
    #[arg(long, default_value = "rf")]
    classifier: ClassifierKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Z-score features before training: on or off (default: on for mlp only).
    #[arg(long, value_parser = parse_switch)]
    normalize: Option<bool>,
    #[command(flatten)]
    feature_opts: FeatureOpts,
    #[command(flatten)]
    classifier_opts: ClassifierOpts,
    /// Output model path (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Model written by `train`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, conflicts_with = "features", required_unless_present = "features")]
    dataset: Option<String>,
    #[arg(long)]
    features: Option<PathBuf>,
    /// Scheme of the input; must match the model when given.
    #[arg(long)]
    scheme: Option<Scheme>,
    #[command(flatten)]
    feature_opts: FeatureOpts,
    /// Output CSV: sample_id,label,predicted.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum StdChoice {
    Population,
    Sample,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "synthetic:5x100@0")]
    dataset: String,
    /// Name shown in the report's dataset column (defaults to the dataset flag).
    #[arg(long)]
    name: Option<String>,
    /// Comma-separated schemes (default: all seven).
    #[arg(long, value_delimiter = ',')]
    schemes: Vec<Scheme>,
    /// Comma-separated classifiers.
    #[arg(long, value_delimiter = ',', default_value = "rf,mlp")]
    classifiers: Vec<ClassifierKind>,
    /// Training fraction, as 0.7 or 70.
    #[arg(long, default_value = "0.7", value_parser = parse_fraction)]
    split: f64,
    /// Cycle the training fraction through 60, 62.5, 65, 67.5 and 70 percent.
    #[arg(long)]
    sweep_split: bool,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = parse_switch)]
    normalize: Option<bool>,
    /// Stddev convention for the St.Dv column.
    #[arg(long, value_enum, default_value = "population")]
    std: StdChoice,
    #[command(flatten)]
    feature_opts: FeatureOpts,
    #[command(flatten)]
    classifier_opts: ClassifierOpts,
    /// Report path prefix; writes `<out>.csv` and `<out>.txt`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// `synthetic:<classes>x<per_class>@<seed>`.
    #[arg(long, default_value = "synthetic:5x100@0")]
    dataset: String,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn parse_switch(s: &str) -> Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected on or off, got `{s}`")),
    }
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    Ok(if v > 1.0 { v / 100.0 } else { v })
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidArgument(_) => 2,
            Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn load(source: &str) -> CliResult<LabeledDataset> {
    if SyntheticSpec::parse(source).is_none() && !Path::new(source).is_dir() {
        return Err(Failure::usage(format!("dataset directory `{source}` does not exist")));
    }
    Ok(dataset::resolve(source)?)
}

fn check_output(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => Err(Failure::usage(format!(
            "output directory `{}` does not exist",
            p.display()
        ))),
        _ => Ok(()),
    }
}

fn check_levels(opts: &FeatureOpts) -> CliResult<()> {
    if !(2..=256).contains(&opts.glcm_levels) {
        return Err(Failure::usage("--glcm-levels must be between 2 and 256"));
    }
    Ok(())
}

/// Extract every sample, reporting all failing sample ids at once.
fn extract_rows(d: &LabeledDataset, scheme: Scheme, cfg: &ExtractionConfig) -> CliResult<Vec<FeatureRow>> {
    let results: Vec<Result<FeatureVector, Error>> =
        d.samples.par_iter().map(|s| extract(&s.image, scheme, cfg)).collect();
    let mut rows = Vec::with_capacity(d.len());
    let mut failed = Vec::new();
    for (s, r) in d.samples.iter().zip(results) {
        match r {
            Ok(features) => rows.push(FeatureRow {
                sample_id: s.id.clone(),
                label: s.label.clone(),
                features,
            }),
            Err(e) => failed.push(format!("  {}: {e}", s.id)),
        }
    }
    if !failed.is_empty() {
        return Err(Failure {
            code: 1,
            message: format!("extraction failed for {} sample(s):\n{}", failed.len(), failed.join("\n")),
        });
    }
    Ok(rows)
}

fn read_rows(path: &Path) -> CliResult<Vec<FeatureRow>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Failure::usage(format!("cannot open `{}`: {e}", path.display())))?;
    Ok(io::read_feature_csv(std::io::BufReader::new(file))?)
}

fn cmd_extract(a: ExtractArgs) -> CliResult<()> {
    check_levels(&a.features)?;
    check_output(&a.out)?;
    let d = load(&a.dataset)?;
    let rows = extract_rows(&d, a.scheme, &a.features.config())?;
    let mut buf = Vec::new();
    io::write_feature_csv(&mut buf, &rows)?;
    io::write_atomic(&a.out, &buf)?;
    eprintln!("wrote {} rows of {} features to {}", rows.len(), a.scheme, a.out.display());
    Ok(())
}

fn cmd_train(a: TrainArgs) -> CliResult<()> {
    check_levels(&a.feature_opts)?;
    check_output(&a.out)?;
    let rows = match (&a.dataset, &a.features) {
        (Some(src), _) => extract_rows(&load(src)?, a.scheme, &a.feature_opts.config())?,
        (None, Some(path)) => read_rows(path)?,
        (None, None) => unreachable!("clap requires one input"),
    };
    let (vectors, labels): (Vec<FeatureVector>, Vec<String>) =
        rows.into_iter().map(|r| (r.features, r.label)).unzip();
    let config = a.classifier_opts.config(a.classifier, a.seed);
    let normalize = a.normalize.unwrap_or(a.classifier == ClassifierKind::Mlp);
    let model = if normalize {
        classify::train_normalized(&config, &vectors, &labels)?
    } else {
        classify::train(&config, &vectors, &labels)?
    };
    io::write_atomic(&a.out, model.to_json()?.as_bytes())?;
    eprintln!(
        "trained {} on {} samples ({} classes, {}) -> {}",
        model.kind,
        vectors.len(),
        model.classes.len(),
        model.scheme,
        a.out.display()
    );
    Ok(())
}

fn cmd_predict(a: PredictArgs) -> CliResult<()> {
    check_levels(&a.feature_opts)?;
    check_output(&a.out)?;
    let text = std::fs::read_to_string(&a.model)
        .map_err(|e| Failure::usage(format!("cannot read model `{}`: {e}", a.model.display())))?;
    let model = TrainedModel::from_json(&text)?;
    if let Some(s) = a.scheme {
        if s != model.scheme {
            return Err(Error::SchemeMismatch {
                expected: model.scheme.to_string(),
                found: s.to_string(),
            }
            .into());
        }
    }
    let rows = match (&a.dataset, &a.features) {
        (Some(src), _) => extract_rows(&load(src)?, model.scheme, &a.feature_opts.config())?,
        (None, Some(path)) => read_rows(path)?,
        (None, None) => unreachable!("clap requires one input"),
    };

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sample_id", "label", "predicted"]).map_err(Error::from)?;
    let mut correct = 0usize;
    for r in &rows {
        let predicted = model.predict(&r.features).map_err(|e| e.in_sample(&r.sample_id))?;
        correct += usize::from(predicted == r.label);
        w.write_record([r.sample_id.as_str(), r.label.as_str(), predicted])
            .map_err(Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    io::write_atomic(&a.out, &bytes)?;
    if !rows.is_empty() {
        println!(
            "accuracy {:.2}% ({correct}/{}) -> {}",
            100.0 * correct as f64 / rows.len() as f64,
            rows.len(),
            a.out.display()
        );
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> CliResult<()> {
    check_levels(&a.feature_opts)?;
    if let Some(out) = &a.out {
        check_output(out)?;
    }
    let schemes = if a.schemes.is_empty() {
        Scheme::ALL.to_vec()
    } else {
        a.schemes.clone()
    };
    if a.classifiers.is_empty() {
        return Err(Failure::usage("--classifiers must name at least one classifier"));
    }
    let classifiers: Vec<ClassifierConfig> = a
        .classifiers
        .iter()
        .map(|&k| a.classifier_opts.config(k, 0))
        .collect();
    let cfg = ExperimentConfig {
        train_fraction: a.split,
        repetitions: a.reps,
        base_seed: a.seed,
        normalize: a.normalize,
        sweep_split: a.sweep_split,
        extraction: a.feature_opts.config(),
        std_convention: match a.std {
            StdChoice::Population => StdConvention::Population,
            StdChoice::Sample => StdConvention::Sample,
        },
    };
    let d = load(&a.dataset)?;
    let name = a.name.clone().unwrap_or_else(|| a.dataset.clone());
    let report = compare_schemes(&d, &name, &schemes, &classifiers, &cfg)?;
    log::info!("feature extraction took {:.2?}", report.extraction_time);
    for r in &report.rows {
        log::info!("{}: train {:.2?}, predict {:.2?}", r.method(), r.timings.train, r.timings.predict);
    }
    let text = report.to_text();
    if let Some(out) = &a.out {
        io::write_atomic(&with_suffix(out, "csv"), report.to_csv()?.as_bytes())?;
        io::write_atomic(&with_suffix(out, "txt"), text.as_bytes())?;
    }
    print!("{text}");
    Ok(())
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn cmd_synth(a: SynthArgs) -> CliResult<()> {
    let spec = SyntheticSpec::parse(&a.dataset)
        .ok_or_else(|| Failure::usage("--dataset must be synthetic:<classes>x<per_class>@<seed>"))??;
    let d = spec.generate()?;
    std::fs::create_dir_all(&a.out).map_err(Error::from)?;
    dataset::save_dataset_pgm(&d, &a.out)?;
    eprintln!("wrote {} images to {}", d.len(), a.out.display());
    Ok(())
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("EDGELBP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage(format!("EDGELBP_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure {
            code: 1,
            message: e.to_string(),
        })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Extract(a) => cmd_extract(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Synth(a) => cmd_synth(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
