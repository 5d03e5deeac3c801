//! Labeled datasets and the labels CSV format.
//!
//! CSV layout: header line `path,label`, one record per line, label is
//! `blurry` or `sharp`, paths are relative to the CSV's directory, UTF-8
//! with LF line endings.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Binary verdict; `Blurry` is the positive class throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Blurry,
    Sharp,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Blurry => "blurry",
            Label::Sharp => "sharp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "blurry" => Some(Label::Blurry),
            "sharp" => Some(Label::Sharp),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One image file and its expert label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSample {
    pub path: PathBuf,
    pub label: Label,
}

/// Ordered list of labeled samples with unique paths.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabeledDataset {
    samples: Vec<LabeledSample>,
}

impl LabeledDataset {
    pub fn new(samples: Vec<LabeledSample>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for s in &samples {
            if !seen.insert(&s.path) {
                return Err(Error::DuplicatePath(s.path.clone()));
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LabeledSample> {
        self.samples.iter()
    }

    pub fn count(&self, label: Label) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }

    /// True when at least one sample of each class is present.
    pub fn has_both_classes(&self) -> bool {
        self.count(Label::Blurry) >= 1 && self.count(Label::Sharp) >= 1
    }
}

/// Reads a labels CSV; relative record paths are resolved against the CSV's
/// directory so the returned samples are loadable as-is.
pub fn read_labels_csv(csv_path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let csv_path = csv_path.as_ref();
    let text = fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let base = csv_path.parent().unwrap_or(Path::new(""));

    let bad = |line_no: usize, reason: String| Error::BadCsv {
        path: csv_path.into(),
        reason: format!("line {line_no}: {reason}"),
    };

    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "path,label")) => {}
        Some((_, other)) => {
            return Err(bad(1, format!("expected header 'path,label', got {other:?}")))
        }
        None => return Err(bad(1, "empty file".into())),
    }

    let mut samples = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (raw_path, raw_label) = line
            .split_once(',')
            .ok_or_else(|| bad(idx + 1, "missing comma".into()))?;
        let label = Label::parse(raw_label)
            .ok_or_else(|| bad(idx + 1, format!("unknown label {raw_label:?}")))?;
        let path = if Path::new(raw_path).is_absolute() {
            PathBuf::from(raw_path)
        } else {
            base.join(raw_path)
        };
        samples.push(LabeledSample { path, label });
    }
    LabeledDataset::new(samples)
}

/// Writes the labels CSV. Sample paths under the CSV's directory are stored
/// relative to it; anything else is stored verbatim.
pub fn write_labels_csv(dataset: &LabeledDataset, csv_path: impl AsRef<Path>) -> Result<()> {
    let csv_path = csv_path.as_ref();
    let base = csv_path.parent().unwrap_or(Path::new(""));
    let mut out = String::from("path,label\n");
    for sample in dataset.iter() {
        let shown = sample.path.strip_prefix(base).unwrap_or(&sample.path);
        out.push_str(&format!("{},{}\n", shown.display(), sample.label));
    }
    fs::write(csv_path, out).map_err(|e| Error::io(csv_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_paths() {
        let s = LabeledSample {
            path: "a.pgm".into(),
            label: Label::Sharp,
        };
        assert!(matches!(
            LabeledDataset::new(vec![s.clone(), s]),
            Err(Error::DuplicatePath(_))
        ));
    }

    #[test]
    fn csv_round_trip_resolves_relative_paths() {
        let dir = std::env::temp_dir().join(format!("blurscope-csv-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let dataset = LabeledDataset::new(vec![
            LabeledSample {
                path: dir.join("img0.pgm"),
                label: Label::Sharp,
            },
            LabeledSample {
                path: dir.join("img1.pgm"),
                label: Label::Blurry,
            },
        ])
        .unwrap();
        let csv = dir.join("labels.csv");
        write_labels_csv(&dataset, &csv).unwrap();

        let text = fs::read_to_string(&csv).unwrap();
        assert_eq!(text, "path,label\nimg0.pgm,sharp\nimg1.pgm,blurry\n");

        let back = read_labels_csv(&csv).unwrap();
        assert_eq!(back, dataset);
    }

    #[test]
    fn csv_rejects_garbage() {
        let dir = std::env::temp_dir();
        let p = dir.join(format!("blurscope-badcsv-{}.csv", std::process::id()));
        fs::write(&p, "path,label\nimg.pgm,smeared\n").unwrap();
        assert!(matches!(read_labels_csv(&p), Err(Error::BadCsv { .. })));

        fs::write(&p, "file,verdict\n").unwrap();
        assert!(matches!(read_labels_csv(&p), Err(Error::BadCsv { .. })));
    }
}
