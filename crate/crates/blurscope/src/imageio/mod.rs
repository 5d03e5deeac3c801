//! Image decoding/encoding, grayscale conversion, resizing, Gaussian blur,
//! and synthetic labeled-corpus generation.
//!
//! Pixel values are `f64` in `[0, 1]` everywhere; 8-bit netpbm samples are
//! normalized on load and re-quantized on save.

mod blur;
mod dataset;
mod pnm;
mod synth;

pub use blur::{gaussian_blur, gaussian_kernel};
pub use dataset::{read_labels_csv, write_labels_csv, Label, LabeledDataset, LabeledSample};
pub use pnm::{load_image, save_pgm};
pub use synth::{synth_dataset, synth_texture, SynthParams};

use crate::error::{Error, Result};

/// Single-channel raster with row-major `f64` intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    /// Builds an image, validating dimensions, pixel count and value range.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be >= 1, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidImage(format!(
                "pixel value {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Fills an image from a per-pixel function; values are clamped to `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width >= 1 && height >= 1, "dimensions must be >= 1");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }
}

/// BT.601 luma: `0.299 r + 0.587 g + 0.114 b`, clamped to `[0, 1]`.
pub fn to_grayscale(r: f64, g: f64, b: f64) -> f64 {
    (0.299 * r + 0.587 * g + 0.114 * b).clamp(0.0, 1.0)
}

/// Bilinear resize with half-pixel-centered sample coordinates.
///
/// A resize to the image's own dimensions reproduces it bit-exactly.
pub fn resize_bilinear(image: &GrayImage, new_width: usize, new_height: usize) -> GrayImage {
    assert!(new_width >= 1 && new_height >= 1, "dimensions must be >= 1");

    let x_scale = image.width() as f64 / new_width as f64;
    let y_scale = image.height() as f64 / new_height as f64;

    GrayImage::from_fn(new_width, new_height, |x, y| {
        let src_x = ((x as f64 + 0.5) * x_scale - 0.5).clamp(0.0, (image.width() - 1) as f64);
        let src_y = ((y as f64 + 0.5) * y_scale - 0.5).clamp(0.0, (image.height() - 1) as f64);

        let x0 = src_x.floor() as usize;
        let y0 = src_y.floor() as usize;
        let x1 = (x0 + 1).min(image.width() - 1);
        let y1 = (y0 + 1).min(image.height() - 1);
        let tx = src_x - x0 as f64;
        let ty = src_y - y0 as f64;

        // lerp in a + t*(b - a) form so identical endpoints blend exactly
        let top = {
            let a = image.get(x0, y0);
            a + tx * (image.get(x1, y0) - a)
        };
        let bottom = {
            let a = image.get(x0, y1);
            a + tx * (image.get(x1, y1) - a)
        };
        top + ty * (bottom - top)
    })
}
