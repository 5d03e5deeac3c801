//! Experiment protocol: deterministic dataset split, confusion-matrix
//! construction, and the three comparison metrics (sensitivity, specificity,
//! accuracy) with Blurry as the positive class.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageio::{load_image, GrayImage, Label, LabeledDataset, LabeledSample};

/// Counts of a binary confusion matrix; Blurry is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    #[serde(rename = "tp")]
    pub true_pos: u64,
    #[serde(rename = "fp")]
    pub false_pos: u64,
    #[serde(rename = "fn")]
    pub false_neg: u64,
    #[serde(rename = "tn")]
    pub true_neg: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }

    /// True positive rate: `tp / (tp + fn)`.
    pub fn sensitivity(&self) -> Result<f64> {
        match self.true_pos + self.false_neg {
            0 => Err(Error::NoPositives),
            den => Ok(self.true_pos as f64 / den as f64),
        }
    }

    /// True negative rate: `tn / (tn + fp)`.
    pub fn specificity(&self) -> Result<f64> {
        match self.true_neg + self.false_pos {
            0 => Err(Error::NoNegatives),
            den => Ok(self.true_neg as f64 / den as f64),
        }
    }

    /// Correctly classified instances over all classified instances.
    pub fn accuracy(&self) -> Result<f64> {
        match self.total() {
            0 => Err(Error::EmptyMatrix),
            total => Ok((self.true_pos + self.true_neg) as f64 / total as f64),
        }
    }
}

/// Tallies verdicts against ground truth.
pub fn build_confusion(predictions: &[Label], truths: &[Label]) -> Result<ConfusionMatrix> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch {
            predictions: predictions.len(),
            truths: truths.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut cm = ConfusionMatrix {
        true_pos: 0,
        false_pos: 0,
        false_neg: 0,
        true_neg: 0,
    };
    for (&pred, &truth) in predictions.iter().zip(truths) {
        match (pred, truth) {
            (Label::Blurry, Label::Blurry) => cm.true_pos += 1,
            (Label::Blurry, Label::Sharp) => cm.false_pos += 1,
            (Label::Sharp, Label::Blurry) => cm.false_neg += 1,
            (Label::Sharp, Label::Sharp) => cm.true_neg += 1,
        }
    }
    Ok(cm)
}

/// Which classifier produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Laplacian,
    Cnn,
    /// Test hook: echoes the ground-truth label. Useful for exercising the
    /// harness itself (all metrics must come out 1.0).
    Oracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Laplacian => "laplacian",
            Method::Cnn => "cnn",
            Method::Oracle => "oracle",
        })
    }
}

/// Confusion counts plus the derived metrics for one classifier run.
/// Serializes flat: `method`, `dataset_id`, the four counts, three metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: Method,
    pub dataset_id: String,
    #[serde(flatten)]
    pub confusion: ConfusionMatrix,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
}

impl MetricsReport {
    pub fn from_confusion(
        method: Method,
        dataset_id: impl Into<String>,
        confusion: ConfusionMatrix,
    ) -> Result<Self> {
        Ok(Self {
            method,
            dataset_id: dataset_id.into(),
            confusion,
            sensitivity: confusion.sensitivity()?,
            specificity: confusion.specificity()?,
            accuracy: confusion.accuracy()?,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Disjoint train/validation partition of a dataset.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: LabeledDataset,
    pub validation: LabeledDataset,
}

/// Seeded uniform shuffle, then the first `floor(n * train_fraction)`
/// samples become the training set.
pub fn split_dataset(
    dataset: &LabeledDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<Split> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(Error::BadRange(format!(
            "train fraction must be in (0, 1], got {train_fraction}"
        )));
    }
    let mut samples: Vec<LabeledSample> = dataset.samples().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    samples.shuffle(&mut rng);
    let cut = (samples.len() as f64 * train_fraction).floor() as usize;
    let validation = samples.split_off(cut);
    Ok(Split {
        train: LabeledDataset::new(samples)?,
        validation: LabeledDataset::new(validation)?,
    })
}

/// Like [`split_dataset`] but shuffles and cuts each class separately, so
/// the train fraction holds per class.
pub fn split_dataset_stratified(
    dataset: &LabeledDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<Split> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(Error::BadRange(format!(
            "train fraction must be in (0, 1], got {train_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut validation = Vec::new();
    for class in [Label::Blurry, Label::Sharp] {
        let mut members: Vec<LabeledSample> = dataset
            .iter()
            .filter(|s| s.label == class)
            .cloned()
            .collect();
        members.shuffle(&mut rng);
        let cut = (members.len() as f64 * train_fraction).floor() as usize;
        validation.extend(members.split_off(cut));
        train.extend(members);
    }
    Ok(Split {
        train: LabeledDataset::new(train)?,
        validation: LabeledDataset::new(validation)?,
    })
}

/// Runs a classifier over every sample, loading each image, and assembles
/// the full report. The dataset must contain both classes.
///
/// The closure receives the sample (for test hooks that need the truth) and
/// the decoded image.
pub fn evaluate<F>(
    method: Method,
    dataset: &LabeledDataset,
    dataset_id: impl Into<String>,
    mut classify: F,
) -> Result<MetricsReport>
where
    F: FnMut(&LabeledSample, &GrayImage) -> Result<Label>,
{
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !dataset.has_both_classes() {
        return Err(Error::SingleClassDataset);
    }
    let mut predictions = Vec::with_capacity(dataset.len());
    let mut truths = Vec::with_capacity(dataset.len());
    for sample in dataset.iter() {
        let image = load_image(&sample.path)?;
        predictions.push(classify(sample, &image)?);
        truths.push(sample.label);
    }
    let confusion = build_confusion(&predictions, &truths)?;
    MetricsReport::from_confusion(method, dataset_id, confusion)
}
