//! Synthetic labeled corpus: seeded sinusoidal textures, half of them
//! Gaussian-blurred, written as PGM files plus a labels CSV.
//!
//! All randomness flows through ChaCha8 generators seeded by a splitmix64
//! derivation of `(seed, lane, sample index)`, so every sample is a pure
//! function of the seed and its index, independent of generation order.
//! The derivation and the draw order are frozen; regenerating with the same
//! seed must reproduce the corpus byte for byte.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::{Label, LabeledDataset, LabeledSample};
use super::pnm::{quantize, save_pgm};
use super::{gaussian_blur, write_labels_csv, GrayImage};
use crate::error::{Error, Result};

const GRATING_COUNT: usize = 8;
const NOISE_AMPLITUDE: f64 = 0.2;
const MIN_CYCLES: f64 = 2.0;

const LANE_TEXTURE: u64 = 0;
const LANE_SIGMA: u64 = 1;

/// splitmix64 finalizer, chained to derive per-sample seeds.
fn mix(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn subseed(seed: u64, lane: u64, index: u64) -> u64 {
    mix(mix(mix(seed) ^ lane) ^ index)
}

/// Deterministic edge-rich test texture.
///
/// Sums [`GRATING_COUNT`] sinusoidal gratings with seeded orientation in
/// `[0, pi)`, spatial frequency in `[2, width/4]` cycles per image and random
/// phase, adds seeded uniform noise of amplitude [`NOISE_AMPLITUDE`], then
/// rescales affinely so the output spans exactly `[0, 1]`.
pub fn synth_texture(seed: u64, width: usize, height: usize) -> GrayImage {
    assert!(width >= 8 && height >= 8, "texture dimensions must be >= 8");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // One grating per sub-band of [2, width/4], so every texture is
    // guaranteed high-frequency content for blur to destroy.
    let band = (width as f64 / 4.0 - MIN_CYCLES) / GRATING_COUNT as f64;
    let gratings: Vec<(f64, f64, f64)> = (0..GRATING_COUNT)
        .map(|k| {
            let theta = rng.gen_range(0.0..PI);
            let lo = MIN_CYCLES + k as f64 * band;
            let freq = rng.gen_range(lo..=lo + band);
            let phase = rng.gen_range(0.0..TAU);
            (theta, freq, phase)
        })
        .collect();

    let mut field = vec![0.0f64; width * height];
    for (y, row) in field.chunks_exact_mut(width).enumerate() {
        let v = y as f64 / height as f64;
        for (x, value) in row.iter_mut().enumerate() {
            let u = x as f64 / width as f64;
            *value = gratings
                .iter()
                .map(|&(theta, freq, phase)| {
                    (TAU * freq * (u * theta.cos() + v * theta.sin()) + phase).sin()
                })
                .sum();
        }
    }
    for value in &mut field {
        *value += rng.gen_range(-NOISE_AMPLITUDE..=NOISE_AMPLITUDE);
    }

    let (lo, hi) = field
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
            (lo.min(p), hi.max(p))
        });
    if hi == lo {
        return GrayImage::constant(width, height, 0.5);
    }
    GrayImage::from_fn(width, height, |x, y| (field[y * width + x] - lo) / (hi - lo))
}

/// Corpus shape: sample count, blur strength range and texture resolution.
#[derive(Debug, Clone, Copy)]
pub struct SynthParams {
    /// Total sample count; exactly half sharp, half blurry.
    pub count: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub width: usize,
    pub height: usize,
}

impl SynthParams {
    /// Default 96x96 textures.
    pub fn new(count: usize, sigma_min: f64, sigma_max: f64) -> Self {
        Self {
            count,
            sigma_min,
            sigma_max,
            width: 96,
            height: 96,
        }
    }
}

/// Generates `count/2` sharp textures plus `count/2` blurred counterparts
/// into `out_dir`, with a `labels.csv` naming every file.
///
/// The sharp image on disk is the 8-bit quantized texture, and the blurry
/// counterpart is the Gaussian blur of that *quantized* image. Knowing the
/// sigma, anyone can regenerate a blurry file from its sharp sibling:
/// `save_pgm(gaussian_blur(load_image(sharp), sigma))` is byte-identical.
pub fn synth_dataset(seed: u64, params: &SynthParams, out_dir: impl AsRef<Path>) -> Result<LabeledDataset> {
    let out_dir = out_dir.as_ref();
    if params.count < 2 || params.count % 2 != 0 {
        return Err(Error::BadRange(format!(
            "count must be even and >= 2, got {}",
            params.count
        )));
    }
    if !(params.sigma_min > 0.0 && params.sigma_min <= params.sigma_max) {
        return Err(Error::BadRange(format!(
            "need 0 < sigma_min <= sigma_max, got {}:{}",
            params.sigma_min, params.sigma_max
        )));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut samples = Vec::with_capacity(params.count);
    for i in 0..params.count / 2 {
        let texture = synth_texture(subseed(seed, LANE_TEXTURE, i as u64), params.width, params.height);
        let sharp = quantized(&texture);

        let mut sigma_rng = ChaCha8Rng::seed_from_u64(subseed(seed, LANE_SIGMA, i as u64));
        let sigma = sigma_rng.gen_range(params.sigma_min..=params.sigma_max);
        let blurry = gaussian_blur(&sharp, sigma)?;

        let sharp_path = out_dir.join(format!("sharp_{i:04}.pgm"));
        let blurry_path = out_dir.join(format!("blurry_{i:04}.pgm"));
        save_pgm(&sharp, &sharp_path)?;
        save_pgm(&blurry, &blurry_path)?;
        samples.push(LabeledSample {
            path: sharp_path,
            label: Label::Sharp,
        });
        samples.push(LabeledSample {
            path: blurry_path,
            label: Label::Blurry,
        });
    }

    let dataset = LabeledDataset::new(samples)?;
    write_labels_csv(&dataset, out_dir.join("labels.csv"))?;
    Ok(dataset)
}

/// The image as it will read back from an 8-bit PGM.
fn quantized(image: &GrayImage) -> GrayImage {
    GrayImage::from_fn(image.width(), image.height(), |x, y| {
        quantize(image.get(x, y)) as f64 / 255.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageio::load_image;

    #[test]
    fn texture_is_deterministic() {
        let a = synth_texture(42, 32, 32);
        let b = synth_texture(42, 32, 32);
        assert_eq!(a, b);
    }

    #[test]
    fn texture_spans_unit_range() {
        for seed in [0, 7, 99] {
            let t = synth_texture(seed, 48, 32);
            let lo = t.pixels().iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = t.pixels().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(lo, 0.0);
            assert_eq!(hi, 1.0);
        }
    }

    #[test]
    fn distinct_seeds_give_distinct_textures() {
        for pair in 0..100u64 {
            let a = synth_texture(2 * pair, 32, 32);
            let b = synth_texture(2 * pair + 1, 32, 32);
            let differing = a
                .pixels()
                .iter()
                .zip(b.pixels())
                .filter(|(x, y)| x != y)
                .count();
            assert!(
                differing >= a.pixels().len() / 100,
                "seeds {} vs {}: only {differing} pixels differ",
                2 * pair,
                2 * pair + 1
            );
        }
    }

    #[test]
    fn dataset_is_balanced_and_complete() {
        let dir = tempfile::tempdir().unwrap();
        let ds = synth_dataset(5, &SynthParams::new(4, 1.0, 2.0), dir.path()).unwrap();
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.count(Label::Sharp), 2);
        assert_eq!(ds.count(Label::Blurry), 2);
        let pgms = std::fs::read_dir(dir.path())
            .unwrap()
            .filter(|e| {
                e.as_ref().unwrap().path().extension().is_some_and(|x| x == "pgm")
            })
            .count();
        assert_eq!(pgms, 4);
        assert!(dir.path().join("labels.csv").is_file());
    }

    #[test]
    fn dataset_regenerates_byte_identically() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let params = SynthParams::new(6, 1.5, 3.0);
        synth_dataset(11, &params, dir_a.path()).unwrap();
        synth_dataset(11, &params, dir_b.path()).unwrap();
        for name in ["labels.csv", "sharp_0000.pgm", "blurry_0002.pgm"] {
            let a = std::fs::read(dir_a.path().join(name)).unwrap();
            let b = std::fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn blurry_files_regenerate_from_their_sharp_siblings() {
        let dir = tempfile::tempdir().unwrap();
        let mut params = SynthParams::new(4, 2.0, 2.0);
        params.width = 48;
        params.height = 48;
        synth_dataset(3, &params, dir.path()).unwrap();
        for i in 0..2 {
            let sharp = load_image(dir.path().join(format!("sharp_{i:04}.pgm"))).unwrap();
            let redone = gaussian_blur(&sharp, 2.0).unwrap();
            let check = dir.path().join(format!("check_{i:04}.pgm"));
            save_pgm(&redone, &check).unwrap();
            let expect = std::fs::read(dir.path().join(format!("blurry_{i:04}.pgm"))).unwrap();
            assert_eq!(std::fs::read(&check).unwrap(), expect);
        }
    }

    #[test]
    fn dataset_rejects_bad_parameters() {
        let dir = tempfile::tempdir().unwrap();
        for params in [
            SynthParams::new(3, 1.0, 2.0),
            SynthParams::new(0, 1.0, 2.0),
            SynthParams::new(4, 0.0, 2.0),
            SynthParams::new(4, 3.0, 2.0),
        ] {
            assert!(
                matches!(synth_dataset(1, &params, dir.path()), Err(Error::BadRange(_))),
                "{params:?} should be rejected"
            );
        }
    }
}
