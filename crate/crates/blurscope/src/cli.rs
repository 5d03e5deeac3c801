//! Command-line driver: `synth`, `calibrate`, `train`, `classify`,
//! `evaluate`, `compare`.
//!
//! Conventions shared by every subcommand:
//! - exit 0 on success, 1 on runtime/data failures, 2 on usage errors;
//! - machine-readable output (TSV lines, JSON) goes to stdout, human
//!   diagnostics to stderr;
//! - `--seed` flags fall back to the `BLURSCOPE_SEED` environment variable,
//!   then to 0;
//! - nothing is written outside paths named in flags.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cnn::{self, load_model, save_model, CnnModel, TrainConfig};
use crate::error::Error;
use crate::eval::{evaluate, split_dataset, MetricsReport, Method, Split};
use crate::imageio::{load_image, read_labels_csv, synth_dataset, LabeledDataset, SynthParams};
use crate::laplacian::{
    calibrate_with, classify_laplacian, laplacian_variance, score_batch, scores_by_class,
    CentreWeighting, ThresholdModel,
};
use crate::Label;

pub const ENV_SEED: &str = "BLURSCOPE_SEED";

#[derive(Parser)]
#[command(
    name = "blurscope",
    version,
    about = "Blur detection: variance-of-Laplacian and CNN classifiers with a confusion-matrix harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled corpus (PGM files + labels.csv)
    Synth {
        /// RNG seed (default: $BLURSCOPE_SEED, then 0)
        #[arg(long)]
        seed: Option<u64>,
        /// Total images; half sharp, half blurred
        #[arg(long)]
        count: usize,
        /// Blur strength range as lo:hi (e.g. 2:4)
        #[arg(long)]
        sigma: String,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibrate the Laplacian threshold from a labeled corpus
    Calibrate {
        /// Labels CSV
        #[arg(long)]
        labels: PathBuf,
        /// Where to write the threshold model JSON
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        split: SplitArgs,
        /// How the two class centres combine into the threshold
        #[arg(long, value_enum, default_value_t = WeightingArg::Counts)]
        weighting: WeightingArg,
    },
    /// Train the CNN on the 80% split of a labeled corpus
    Train {
        /// Labels CSV
        #[arg(long)]
        labels: PathBuf,
        /// Where to write the model file
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 30)]
        epochs: usize,
        /// RNG seed for init and shuffling (default: $BLURSCOPE_SEED, then 0)
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0.05)]
        lr: f64,
        #[arg(long, default_value_t = 16)]
        batch: usize,
        /// Fraction of samples used for training
        #[arg(long, default_value_t = 0.8)]
        train_fraction: f64,
        /// Seed for the train/validation shuffle (default: --seed)
        #[arg(long)]
        split_seed: Option<u64>,
    },
    /// Score images and print one verdict line per image
    Classify {
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Threshold JSON (laplacian) or model file (cnn)
        #[arg(long)]
        model: PathBuf,
        /// Images to classify
        #[arg(required = true)]
        images: Vec<PathBuf>,
    },
    /// Evaluate a classifier on a labeled corpus and write a report
    Evaluate {
        #[arg(long, value_enum)]
        method: EvalMethodArg,
        /// Threshold JSON (laplacian) or model file (cnn); unused for oracle
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        labels: PathBuf,
        /// Where to write the report JSON
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        split: SplitArgs,
    },
    /// Evaluate both classifiers on the same corpus and print the deltas
    Compare {
        /// Laplacian threshold JSON
        #[arg(long)]
        threshold: PathBuf,
        /// CNN model file
        #[arg(long)]
        cnn: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[command(flatten)]
        split: SplitArgs,
    },
}

/// Restricting a command to one side of the seeded train/validation split.
#[derive(Args)]
struct SplitArgs {
    /// Use only this side of the split (omit to use the whole corpus)
    #[arg(long, value_enum)]
    split: Option<SplitPart>,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    /// Seed of the split shuffle (default: $BLURSCOPE_SEED, then 0)
    #[arg(long)]
    split_seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitPart {
    Train,
    Validation,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Laplacian,
    Cnn,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalMethodArg {
    Laplacian,
    Cnn,
    /// Test hook: echo the ground-truth label
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    /// Class-count-weighted mean of the centres
    Counts,
    /// Plain midpoint of the centres
    Midpoint,
}

/// Failure modes mapped onto the exit-code discipline.
#[derive(Debug)]
enum Failure {
    /// Exit 2: bad flags or unusable inputs detected up front.
    Usage(String),
    /// Exit 1: the pipeline itself failed.
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

/// Parses and runs a full command line (including `argv[0]`), returning the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders help/version on stdout with success
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Synth {
            seed,
            count,
            sigma,
            out,
        } => cmd_synth(seed, count, &sigma, &out),
        Command::Calibrate {
            labels,
            out,
            split,
            weighting,
        } => cmd_calibrate(&labels, &out, &split, weighting),
        Command::Train {
            labels,
            out,
            epochs,
            seed,
            lr,
            batch,
            train_fraction,
            split_seed,
        } => cmd_train(&labels, &out, epochs, seed, lr, batch, train_fraction, split_seed),
        Command::Classify {
            method,
            model,
            images,
        } => cmd_classify(method, &model, &images),
        Command::Evaluate {
            method,
            model,
            labels,
            out,
            split,
        } => cmd_evaluate(method, model.as_deref(), &labels, Some(&out), &split).map(|_| ()),
        Command::Compare {
            threshold,
            cnn,
            labels,
            split,
        } => cmd_compare(&threshold, &cnn, &labels, &split),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("blurscope: {msg}");
            2
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("blurscope: {msg}");
            1
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(ENV_SEED) {
        Ok(text) => text.trim().parse().map_err(|_| {
            Failure::Usage(format!("{ENV_SEED}={text:?} is not a valid u64 seed"))
        }),
        Err(_) => Ok(0),
    }
}

fn parse_sigma_range(text: &str) -> Result<(f64, f64), Failure> {
    let usage = || {
        Failure::Usage(format!(
            "--sigma expects lo:hi with 0 < lo <= hi, got {text:?}"
        ))
    };
    let (lo, hi) = text.split_once(':').ok_or_else(usage)?;
    let lo: f64 = lo.trim().parse().map_err(|_| usage())?;
    let hi: f64 = hi.trim().parse().map_err(|_| usage())?;
    if !(lo > 0.0 && lo <= hi) {
        return Err(usage());
    }
    Ok((lo, hi))
}

fn require_file(path: &Path, what: &str) -> Result<(), Failure> {
    if !path.is_file() {
        return Err(Failure::Usage(format!(
            "{what} {} does not exist",
            path.display()
        )));
    }
    Ok(())
}

fn read_dataset(labels: &Path, split: &SplitArgs) -> Result<(LabeledDataset, String), Failure> {
    require_file(labels, "labels csv")?;
    let dataset = read_labels_csv(labels)?;
    let Some(part) = split.split else {
        return Ok((dataset, labels.display().to_string()));
    };
    if !(split.train_fraction > 0.0 && split.train_fraction <= 1.0) {
        return Err(Failure::Usage(format!(
            "--train-fraction must be in (0, 1], got {}",
            split.train_fraction
        )));
    }
    let seed = resolve_seed(split.split_seed)?;
    let Split { train, validation } = split_dataset(&dataset, split.train_fraction, seed)?;
    let (chosen, name) = match part {
        SplitPart::Train => (train, "train"),
        SplitPart::Validation => (validation, "validation"),
    };
    let id = format!(
        "{}[{name} f={} seed={seed}]",
        labels.display(),
        split.train_fraction
    );
    Ok((chosen, id))
}

fn cmd_synth(seed: Option<u64>, count: usize, sigma: &str, out: &Path) -> CmdResult {
    if count < 2 || count % 2 != 0 {
        return Err(Failure::Usage(format!(
            "--count must be even and >= 2, got {count}"
        )));
    }
    let (sigma_min, sigma_max) = parse_sigma_range(sigma)?;
    let seed = resolve_seed(seed)?;
    let params = SynthParams::new(count, sigma_min, sigma_max);
    synth_dataset(seed, &params, out)?;
    println!("{}", out.join("labels.csv").display());
    Ok(())
}

fn cmd_calibrate(
    labels: &Path,
    out: &Path,
    split: &SplitArgs,
    weighting: WeightingArg,
) -> CmdResult {
    let (dataset, id) = read_dataset(labels, split)?;
    let scored = score_batch(&dataset)?;
    let (blurry, sharp) = scores_by_class(&scored);
    let weighting = match weighting {
        WeightingArg::Counts => CentreWeighting::ClassCounts,
        WeightingArg::Midpoint => CentreWeighting::Midpoint,
    };
    let model = calibrate_with(&blurry, &sharp, weighting)?;
    model.save(out)?;
    eprintln!(
        "calibrated on {id}: {} blurry, {} sharp",
        model.n_blurry, model.n_sharp
    );
    println!("threshold\t{}", model.threshold);
    println!("centre_blurry\t{}", model.centre_blurry);
    println!("centre_sharp\t{}", model.centre_sharp);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    labels: &Path,
    out: &Path,
    epochs: usize,
    seed: Option<u64>,
    lr: f64,
    batch: usize,
    train_fraction: f64,
    split_seed: Option<u64>,
) -> CmdResult {
    if epochs < 1 {
        return Err(Failure::Usage("--epochs must be >= 1".into()));
    }
    if batch < 1 {
        return Err(Failure::Usage("--batch must be >= 1".into()));
    }
    if !(lr > 0.0) {
        return Err(Failure::Usage(format!("--lr must be positive, got {lr}")));
    }
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(Failure::Usage(format!(
            "--train-fraction must be in (0, 1], got {train_fraction}"
        )));
    }
    require_file(labels, "labels csv")?;
    let seed = resolve_seed(seed)?;
    let split_seed = split_seed.unwrap_or(seed);

    let dataset = read_labels_csv(labels)?;
    let Split { train, validation } = split_dataset(&dataset, train_fraction, split_seed)?;
    let config = TrainConfig {
        epochs,
        learning_rate: lr,
        batch_size: batch,
        seed,
        ..TrainConfig::default()
    };
    let run = cnn::train(&train, &config)?;
    for stats in &run.log {
        println!(
            "epoch\t{}\tloss\t{:.6}\taccuracy\t{:.4}",
            stats.epoch, stats.mean_loss, stats.train_accuracy
        );
    }
    save_model(&run.model, out)?;
    eprintln!("model written to {}", out.display());

    if validation.is_empty() {
        eprintln!("no validation split (train fraction {train_fraction})");
    } else if !validation.has_both_classes() {
        eprintln!("validation split has a single class; skipping metrics");
    } else {
        let report = evaluate(
            Method::Cnn,
            &validation,
            format!("{}[validation f={train_fraction} seed={split_seed}]", labels.display()),
            |_, image| cnn::predict(&run.model, image).map(|(_, label)| label),
        )?;
        eprint!("{}", render_table(&report));
    }
    Ok(())
}

enum LoadedClassifier {
    Laplacian(ThresholdModel),
    Cnn(Box<CnnModel>),
    Oracle,
}

impl LoadedClassifier {
    fn classify(&self, truth: Label, image: &crate::GrayImage) -> crate::Result<Label> {
        match self {
            LoadedClassifier::Laplacian(model) => Ok(classify_laplacian(image, model)),
            LoadedClassifier::Cnn(model) => cnn::predict(model, image).map(|(_, label)| label),
            LoadedClassifier::Oracle => Ok(truth),
        }
    }

    fn method(&self) -> Method {
        match self {
            LoadedClassifier::Laplacian(_) => Method::Laplacian,
            LoadedClassifier::Cnn(_) => Method::Cnn,
            LoadedClassifier::Oracle => Method::Oracle,
        }
    }
}

fn load_laplacian(path: &Path) -> Result<LoadedClassifier, Failure> {
    require_file(path, "threshold json")?;
    Ok(LoadedClassifier::Laplacian(ThresholdModel::load(path)?))
}

fn load_cnn(path: &Path) -> Result<LoadedClassifier, Failure> {
    require_file(path, "model file")?;
    Ok(LoadedClassifier::Cnn(Box::new(load_model(path)?)))
}

fn cmd_classify(method: MethodArg, model_path: &Path, images: &[PathBuf]) -> CmdResult {
    let classifier = match method {
        MethodArg::Laplacian => load_laplacian(model_path)?,
        MethodArg::Cnn => load_cnn(model_path)?,
    };
    let mut failures = 0usize;
    for path in images {
        match load_image(path) {
            Ok(image) => {
                let (score, label) = match &classifier {
                    LoadedClassifier::Laplacian(model) => {
                        let score = laplacian_variance(&image);
                        (score, classify_laplacian(&image, model))
                    }
                    LoadedClassifier::Cnn(model) => cnn::predict(model, &image)?,
                    LoadedClassifier::Oracle => unreachable!("not a classify method"),
                };
                println!("{}\t{}\t{}", path.display(), score, label);
            }
            Err(e) => {
                eprintln!("blurscope: {e}");
                failures += 1;
            }
        }
    }
    if failures > 0 {
        return Err(Failure::Runtime(format!(
            "{failures} image(s) failed to load"
        )));
    }
    Ok(())
}

fn cmd_evaluate(
    method: EvalMethodArg,
    model_path: Option<&Path>,
    labels: &Path,
    out: Option<&Path>,
    split: &SplitArgs,
) -> Result<MetricsReport, Failure> {
    let classifier = match method {
        EvalMethodArg::Laplacian => {
            let path = model_path.ok_or_else(|| {
                Failure::Usage("--model is required for --method laplacian".into())
            })?;
            load_laplacian(path)?
        }
        EvalMethodArg::Cnn => {
            let path = model_path
                .ok_or_else(|| Failure::Usage("--model is required for --method cnn".into()))?;
            load_cnn(path)?
        }
        EvalMethodArg::Oracle => LoadedClassifier::Oracle,
    };
    let (dataset, id) = read_dataset(labels, split)?;
    let report = evaluate(classifier.method(), &dataset, id, |sample, image| {
        classifier.classify(sample.label, image)
    })?;
    if let Some(out) = out {
        report.save(out)?;
        print!("{}", report.to_json());
    }
    eprint!("{}", render_table(&report));
    Ok(report)
}

fn cmd_compare(threshold: &Path, cnn_model: &Path, labels: &Path, split: &SplitArgs) -> CmdResult {
    let lap = cmd_evaluate(
        EvalMethodArg::Laplacian,
        Some(threshold),
        labels,
        None,
        split,
    )?;
    let cnn = cmd_evaluate(EvalMethodArg::Cnn, Some(cnn_model), labels, None, split)?;

    for report in [&lap, &cnn] {
        println!("[{}]", report.method);
        print!("{}", render_block(report));
        println!();
    }
    println!("[delta cnn-laplacian]");
    println!("sensitivity\t{:+.3}", cnn.sensitivity - lap.sensitivity);
    println!("specificity\t{:+.3}", cnn.specificity - lap.specificity);
    println!("accuracy\t{:+.3}", cnn.accuracy - lap.accuracy);
    Ok(())
}

/// TSV block with counts and 3-decimal metrics.
fn render_block(report: &MetricsReport) -> String {
    let c = &report.confusion;
    format!(
        "tp\t{}\nfp\t{}\nfn\t{}\ntn\t{}\nsensitivity\t{:.3}\nspecificity\t{:.3}\naccuracy\t{:.3}\n",
        c.true_pos, c.false_pos, c.false_neg, c.true_neg,
        report.sensitivity, report.specificity, report.accuracy,
    )
}

/// Human 2x2 table in the usual verdict-by-condition layout.
fn render_table(report: &MetricsReport) -> String {
    let c = &report.confusion;
    format!(
        "method {} on {}\n\
         {:>18} {:>12} {:>12}\n\
         {:>18} {:>12} {:>12}\n\
         {:>18} {:>12} {:>12}\n\
         sensitivity {:.3}\nspecificity {:.3}\naccuracy    {:.3}\n",
        report.method,
        report.dataset_id,
        "",
        "is blurry",
        "not blurry",
        "verdict blurry",
        c.true_pos,
        c.false_pos,
        "verdict sharp",
        c.false_neg,
        c.true_neg,
        report.sensitivity,
        report.specificity,
        report.accuracy,
    )
}
