//! Variance-of-Laplacian blur scoring and weight-centre threshold
//! calibration.
//!
//! The blurriness score of an image is the population variance of its
//! Laplacian response: edge-rich images produce a wide spread of responses,
//! blurred images a narrow one. Calibration places the decision threshold at
//! the weighted mean of the two per-class mean scores; classification marks
//! an image blurry when its score falls strictly below that threshold.
//!
//! Scores are computed on `[0, 1]` intensities at native resolution. The
//! unit choice rescales every score by the same factor, so verdicts are
//! unaffected as long as calibration and classification agree on it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageio::{load_image, GrayImage, Label, LabeledDataset, LabeledSample};

/// Square convolution kernel with odd size (centered support).
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    taps: Vec<f64>,
}

impl Kernel {
    pub fn new(size: usize, taps: Vec<f64>) -> Result<Self> {
        if size % 2 == 0 || size == 0 {
            return Err(Error::EvenKernel(size));
        }
        if taps.len() != size * size {
            return Err(Error::ShapeMismatch(format!(
                "kernel of size {size} needs {} taps, got {}",
                size * size,
                taps.len()
            )));
        }
        Ok(Self { size, taps })
    }

    /// 4-neighbor discrete Laplacian, the default second-derivative mask.
    pub fn laplacian_4() -> Self {
        Self::new(3, vec![0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0]).expect("static kernel")
    }

    /// 8-neighbor variant, selectable instead of [`Kernel::laplacian_4`].
    pub fn laplacian_8() -> Self {
        Self::new(3, vec![1.0, 1.0, 1.0, 1.0, -8.0, 1.0, 1.0, 1.0, 1.0]).expect("static kernel")
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }
}

/// Raw convolution output; values are unbounded in sign and magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ResponseMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Same-size correlation-style convolution with zero padding.
///
/// `out(x, y) = sum over (i, j) of taps(i, j) * I(x + j - c, y + i - c)`
/// with `c = size / 2`; samples outside the image read as zero, so edge
/// pixels still contribute responses.
pub fn convolve(image: &GrayImage, kernel: &Kernel) -> ResponseMap {
    let (w, h) = (image.width() as i64, image.height() as i64);
    let c = (kernel.size / 2) as i64;
    let mut values = Vec::with_capacity(image.pixels().len());
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for i in 0..kernel.size as i64 {
                let sy = y + i - c;
                if sy < 0 || sy >= h {
                    continue;
                }
                for j in 0..kernel.size as i64 {
                    let sx = x + j - c;
                    if sx < 0 || sx >= w {
                        continue;
                    }
                    acc += kernel.taps[(i * kernel.size as i64 + j) as usize]
                        * image.get(sx as usize, sy as usize);
                }
            }
            values.push(acc);
        }
    }
    ResponseMap {
        width: image.width(),
        height: image.height(),
        values,
    }
}

/// Population variance (divide by `n`): the mean squared deviation from the
/// mean. The divisor is part of the score's definition; thresholds only
/// transfer between runs that agree on it.
pub fn variance(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Ok(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n)
}

/// Blurriness score: variance of the 4-neighbor Laplacian response.
pub fn laplacian_variance(image: &GrayImage) -> f64 {
    laplacian_variance_with(image, &Kernel::laplacian_4())
}

/// Same score under a caller-chosen mask (e.g. [`Kernel::laplacian_8`]).
/// Calibration and classification must use the same mask for a threshold to
/// be meaningful.
pub fn laplacian_variance_with(image: &GrayImage, kernel: &Kernel) -> f64 {
    variance(convolve(image, kernel).values()).expect("image is nonempty by construction")
}

/// How [`calibrate_with`] weights the two class centres.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CentreWeighting {
    /// Weight each centre by its class sample count.
    #[default]
    ClassCounts,
    /// Plain midpoint of the two centres.
    Midpoint,
}

/// Calibrated decision boundary plus the two class weight centres that
/// produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdModel {
    pub threshold: f64,
    pub centre_blurry: f64,
    pub centre_sharp: f64,
    pub n_blurry: usize,
    pub n_sharp: usize,
}

impl ThresholdModel {
    /// Serializes as JSON. serde_json writes floats in shortest-round-trip
    /// form, so the stored numbers reload to exactly the same values.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Places the threshold from per-class score lists using class-count
/// weights: `(n_b * centre_b + n_s * centre_s) / (n_b + n_s)`.
pub fn calibrate(blurry_scores: &[f64], sharp_scores: &[f64]) -> Result<ThresholdModel> {
    calibrate_with(blurry_scores, sharp_scores, CentreWeighting::ClassCounts)
}

pub fn calibrate_with(
    blurry_scores: &[f64],
    sharp_scores: &[f64],
    weighting: CentreWeighting,
) -> Result<ThresholdModel> {
    if blurry_scores.is_empty() || sharp_scores.is_empty() {
        return Err(Error::EmptyClass);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let centre_blurry = mean(blurry_scores);
    let centre_sharp = mean(sharp_scores);
    if centre_blurry >= centre_sharp {
        return Err(Error::InvertedCentres {
            centre_blurry,
            centre_sharp,
        });
    }
    let (n_blurry, n_sharp) = (blurry_scores.len(), sharp_scores.len());
    let threshold = match weighting {
        CentreWeighting::ClassCounts => {
            (n_blurry as f64 * centre_blurry + n_sharp as f64 * centre_sharp)
                / (n_blurry + n_sharp) as f64
        }
        CentreWeighting::Midpoint => (centre_blurry + centre_sharp) / 2.0,
    };
    Ok(ThresholdModel {
        threshold,
        centre_blurry,
        centre_sharp,
        n_blurry,
        n_sharp,
    })
}

/// Blurry iff the score falls strictly below the threshold; a score exactly
/// at the threshold is Sharp.
pub fn classify_laplacian(image: &GrayImage, model: &ThresholdModel) -> Label {
    if laplacian_variance(image) < model.threshold {
        Label::Blurry
    } else {
        Label::Sharp
    }
}

/// Scores every sample in dataset order. Load failures abort with the
/// offending path named in the error.
pub fn score_batch(dataset: &LabeledDataset) -> Result<Vec<(LabeledSample, f64)>> {
    dataset
        .iter()
        .map(|sample| {
            let image = load_image(&sample.path)?;
            Ok((sample.clone(), laplacian_variance(&image)))
        })
        .collect()
}

/// Splits scored samples into (blurry, sharp) score lists for [`calibrate`].
pub fn scores_by_class(scored: &[(LabeledSample, f64)]) -> (Vec<f64>, Vec<f64>) {
    let mut blurry = Vec::new();
    let mut sharp = Vec::new();
    for (sample, score) in scored {
        match sample.label {
            Label::Blurry => blurry.push(*score),
            Label::Sharp => sharp.push(*score),
        }
    }
    (blurry, sharp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageio::{gaussian_blur, synth_texture};

    fn center_impulse() -> GrayImage {
        GrayImage::from_fn(3, 3, |x, y| if (x, y) == (1, 1) { 1.0 } else { 0.0 })
    }

    #[test]
    fn kernel_rejects_even_sizes_and_bad_tap_counts() {
        assert!(matches!(Kernel::new(2, vec![0.0; 4]), Err(Error::EvenKernel(2))));
        assert!(matches!(Kernel::new(3, vec![0.0; 8]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn identity_kernel_reproduces_the_image() {
        let img = GrayImage::from_fn(4, 3, |x, y| (x + y) as f64 / 6.0);
        let identity = Kernel::new(1, vec![1.0]).unwrap();
        assert_eq!(convolve(&img, &identity).values(), img.pixels());
    }

    #[test]
    fn zero_image_has_zero_response() {
        let img = GrayImage::constant(3, 3, 0.0);
        let out = convolve(&img, &Kernel::laplacian_4());
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn center_impulse_reproduces_the_mask_under_zero_padding() {
        let out = convolve(&center_impulse(), &Kernel::laplacian_4());
        assert_eq!(
            out.values(),
            &[0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0]
        );
    }

    #[test]
    fn convolve_is_scale_equivariant() {
        let img = GrayImage::from_fn(5, 5, |x, y| ((x * 3 + y * 7) % 8) as f64 / 14.0);
        let base = convolve(&img, &Kernel::laplacian_4());
        for alpha in [0.0, 0.5, 2.0] {
            let scaled = GrayImage::from_fn(5, 5, |x, y| alpha * img.get(x, y));
            let out = convolve(&scaled, &Kernel::laplacian_4());
            for (s, b) in out.values().iter().zip(base.values()) {
                assert!((s - alpha * b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn variance_of_constant_is_zero() {
        assert!(variance(&[0.7; 12]).unwrap() < 1e-30);
        assert_eq!(variance(&[2.5; 8]).unwrap(), 0.0);
    }

    #[test]
    fn variance_uses_the_population_divisor() {
        assert_eq!(variance(&[0.0, 2.0]).unwrap(), 1.0);
        let response = [0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0];
        assert!((variance(&response).unwrap() - 20.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn variance_rejects_empty_input() {
        assert!(matches!(variance(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn variance_is_translation_invariant() {
        let v: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let shifted: Vec<f64> = v.iter().map(|x| x + 5.25).collect();
        assert!((variance(&v).unwrap() - variance(&shifted).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn laplacian_variance_examples() {
        // flat black image: response identically zero everywhere
        assert_eq!(laplacian_variance(&GrayImage::constant(7, 7, 0.0)), 0.0);
        assert!((laplacian_variance(&center_impulse()) - 20.0 / 9.0).abs() < 1e-12);
        // zero padding makes borders of a nonzero flat image respond
        assert!(laplacian_variance(&GrayImage::constant(7, 7, 0.3)) > 0.0);
    }

    #[test]
    fn blur_lowers_the_score_of_textures() {
        for seed in 0..3 {
            let sharp = synth_texture(seed, 48, 48);
            let blurred = gaussian_blur(&sharp, 2.0).unwrap();
            assert!(
                laplacian_variance(&blurred) < laplacian_variance(&sharp),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn calibrate_midpoint_for_equal_counts() {
        let model = calibrate(&[0.0], &[10.0]).unwrap();
        assert_eq!(model.centre_blurry, 0.0);
        assert_eq!(model.centre_sharp, 10.0);
        assert_eq!(model.threshold, 5.0);
    }

    #[test]
    fn calibrate_weights_centres_by_class_counts() {
        let model = calibrate(&[10.0, 20.0], &[100.0, 110.0, 120.0]).unwrap();
        assert_eq!(model.centre_blurry, 15.0);
        assert_eq!(model.centre_sharp, 110.0);
        assert_eq!(model.threshold, 72.0);
        assert_eq!((model.n_blurry, model.n_sharp), (2, 3));
    }

    #[test]
    fn calibrate_midpoint_mode_ignores_counts() {
        let model =
            calibrate_with(&[10.0, 20.0], &[100.0, 110.0, 120.0], CentreWeighting::Midpoint)
                .unwrap();
        assert_eq!(model.threshold, 62.5);
    }

    #[test]
    fn calibrate_rejects_inverted_and_empty_classes() {
        assert!(matches!(
            calibrate(&[50.0], &[10.0]),
            Err(Error::InvertedCentres { .. })
        ));
        assert!(matches!(calibrate(&[], &[1.0]), Err(Error::EmptyClass)));
        assert!(matches!(calibrate(&[1.0], &[]), Err(Error::EmptyClass)));
    }

    #[test]
    fn threshold_lies_strictly_between_the_centres() {
        let mut state = 0x243f6a8885a308d3u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let blurry: Vec<f64> = (0..1 + (next() * 9.0) as usize).map(|_| next()).collect();
            let sharp: Vec<f64> = (0..1 + (next() * 9.0) as usize)
                .map(|_| 2.0 + next())
                .collect();
            let model = calibrate(&blurry, &sharp).unwrap();
            assert!(model.centre_blurry < model.threshold);
            assert!(model.threshold < model.centre_sharp);
        }
    }

    #[test]
    fn black_image_classifies_blurry_under_any_positive_threshold() {
        let model = ThresholdModel {
            threshold: 1e-12,
            centre_blurry: 0.0,
            centre_sharp: 2e-12,
            n_blurry: 1,
            n_sharp: 1,
        };
        assert_eq!(
            classify_laplacian(&GrayImage::constant(5, 5, 0.0), &model),
            Label::Blurry
        );
    }

    #[test]
    fn score_exactly_at_threshold_is_sharp() {
        let img = center_impulse();
        let score = laplacian_variance(&img);
        let model = ThresholdModel {
            threshold: score,
            centre_blurry: 0.0,
            centre_sharp: 2.0 * score,
            n_blurry: 1,
            n_sharp: 1,
        };
        assert_eq!(classify_laplacian(&img, &model), Label::Sharp);
    }

    #[test]
    fn score_batch_keeps_dataset_order() {
        let dir = tempfile::tempdir().unwrap();
        let mut samples = Vec::new();
        for i in 0..3 {
            let path = dir.path().join(format!("img{i}.pgm"));
            let img = GrayImage::from_fn(4, 4, |x, y| ((x + y + i) % 2) as f64);
            crate::imageio::save_pgm(&img, &path).unwrap();
            samples.push(LabeledSample {
                path,
                label: if i == 0 { Label::Sharp } else { Label::Blurry },
            });
        }
        let dataset = LabeledDataset::new(samples.clone()).unwrap();
        let scored = score_batch(&dataset).unwrap();
        assert_eq!(scored.len(), 3);
        for ((sample, score), expect) in scored.iter().zip(&samples) {
            assert_eq!(sample, expect);
            assert!(*score > 0.0, "checkerboards have edges");
        }

        let empty = score_batch(&LabeledDataset::default()).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn score_batch_scores_a_black_image_zero() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("black.pgm");
        crate::imageio::save_pgm(&GrayImage::constant(6, 6, 0.0), &path).unwrap();
        let dataset = LabeledDataset::new(vec![LabeledSample {
            path,
            label: Label::Blurry,
        }])
        .unwrap();
        let scored = score_batch(&dataset).unwrap();
        assert_eq!(scored[0].1, 0.0);
    }

    #[test]
    fn score_batch_names_the_missing_file() {
        let dataset = LabeledDataset::new(vec![LabeledSample {
            path: "definitely/not/here.pgm".into(),
            label: Label::Sharp,
        }])
        .unwrap();
        match score_batch(&dataset) {
            Err(Error::Io { path, .. }) => assert!(path.ends_with("here.pgm")),
            other => panic!("expected Io error, got {other:?}"),
        }
    }

    #[test]
    fn threshold_model_round_trips_through_json() {
        let model = calibrate(&[0.01, 0.033], &[0.31, 0.45, 0.5]).unwrap();
        let path = std::env::temp_dir().join(format!("blurscope-thr-{}.json", std::process::id()));
        model.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        for key in ["threshold", "centre_blurry", "centre_sharp", "n_blurry", "n_sharp"] {
            assert!(text.contains(&format!("\"{key}\"")), "missing key {key}");
        }
        assert_eq!(ThresholdModel::load(&path).unwrap(), model);
    }
}
