//! Separable Gaussian blur with replicate border handling.

use super::GrayImage;
use crate::error::{Error, Result};

/// Normalized 1D Gaussian kernel truncated at `3 * sigma`.
///
/// Length is `2 * ceil(3 sigma) + 1`; entries are proportional to
/// `exp(-i^2 / (2 sigma^2))` and sum to 1.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(Error::NonpositiveSigma(sigma));
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    Ok(taps)
}

/// Blurs with `gaussian_kernel(sigma)`, horizontal pass then vertical pass.
/// Pixels beyond the border replicate the nearest edge pixel, so constant
/// images pass through unchanged and the dynamic range never grows.
pub fn gaussian_blur(image: &GrayImage, sigma: f64) -> Result<GrayImage> {
    let taps = gaussian_kernel(sigma)?;
    let radius = (taps.len() / 2) as i64;
    let (w, h) = (image.width(), image.height());

    let mut horizontal = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, tap) in taps.iter().enumerate() {
                let sx = (x as i64 + k as i64 - radius).clamp(0, w as i64 - 1) as usize;
                acc += tap * image.get(sx, y);
            }
            horizontal[y * w + x] = acc;
        }
    }

    Ok(GrayImage::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for (k, tap) in taps.iter().enumerate() {
            let sy = (y as i64 + k as i64 - radius).clamp(0, h as i64 - 1) as usize;
            acc += tap * horizontal[sy * w + x];
        }
        acc
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_rejects_nonpositive_sigma() {
        assert!(matches!(gaussian_kernel(0.0), Err(Error::NonpositiveSigma(_))));
        assert!(matches!(gaussian_kernel(-1.0), Err(Error::NonpositiveSigma(_))));
    }

    #[test]
    fn tiny_sigma_concentrates_on_the_center_tap() {
        let taps = gaussian_kernel(0.1).unwrap();
        assert_eq!(taps.len(), 3);
        assert!(taps[1] > 0.99);
    }

    #[test]
    fn kernel_length_follows_three_sigma_truncation() {
        assert_eq!(gaussian_kernel(1.0).unwrap().len(), 7);
        assert_eq!(gaussian_kernel(2.0).unwrap().len(), 13);
    }

    #[test]
    fn kernel_is_normalized() {
        for sigma in [0.3, 0.5, 1.0, 2.5, 4.0, 11.0] {
            let sum: f64 = gaussian_kernel(sigma).unwrap().iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12, "sigma {sigma}: sum {sum}");
        }
    }

    #[test]
    fn constant_image_is_a_fixed_point() {
        let img = GrayImage::constant(6, 4, 0.42);
        let blurred = gaussian_blur(&img, 1.7).unwrap();
        for (a, b) in img.pixels().iter().zip(blurred.pixels()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn blur_preserves_mean_away_from_texture() {
        // texture confined to the middle, constant margin wider than the
        // kernel radius, so replicate padding sees only the constant
        let img = GrayImage::from_fn(24, 24, |x, y| {
            if (8..16).contains(&x) && (8..16).contains(&y) {
                0.5 + 0.4 * (((x + y) % 2) as f64 - 0.5)
            } else {
                0.5
            }
        });
        let blurred = gaussian_blur(&img, 1.0).unwrap();
        let mean = |im: &GrayImage| im.pixels().iter().sum::<f64>() / im.pixels().len() as f64;
        assert!((mean(&img) - mean(&blurred)).abs() < 1e-6);
    }

    #[test]
    fn blur_never_expands_the_dynamic_range() {
        let img = GrayImage::from_fn(11, 9, |x, y| ((x * 5 + y * 11) % 7) as f64 / 6.0);
        let blurred = gaussian_blur(&img, 2.0).unwrap();
        let bounds = |im: &GrayImage| {
            im.pixels()
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
                    (lo.min(p), hi.max(p))
                })
        };
        let (in_lo, in_hi) = bounds(&img);
        let (out_lo, out_hi) = bounds(&blurred);
        assert!(out_hi <= in_hi + 1e-9);
        assert!(out_lo >= in_lo - 1e-9);
    }

    /// Independent oracle: full 2D convolution with the outer-product kernel
    /// and replicate borders, no separable passes.
    fn naive_blur(image: &GrayImage, sigma: f64) -> Vec<f64> {
        let taps = gaussian_kernel(sigma).unwrap();
        let r = (taps.len() / 2) as i64;
        let (w, h) = (image.width() as i64, image.height() as i64);
        let mut out = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for (j, ty) in taps.iter().enumerate() {
                    for (i, tx) in taps.iter().enumerate() {
                        let sx = (x + i as i64 - r).clamp(0, w - 1) as usize;
                        let sy = (y + j as i64 - r).clamp(0, h - 1) as usize;
                        acc += tx * ty * image.get(sx, sy);
                    }
                }
                out.push(acc);
            }
        }
        out
    }

    #[test]
    fn separable_passes_match_full_2d_convolution() {
        let img = GrayImage::from_fn(10, 8, |x, y| ((x * 13 + y * 7) % 11) as f64 / 10.0);
        let fast = gaussian_blur(&img, 1.3).unwrap();
        let slow = naive_blur(&img, 1.3);
        for (a, b) in fast.pixels().iter().zip(&slow) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn center_impulse_response_is_the_separable_product() {
        let img = GrayImage::from_fn(5, 5, |x, y| if (x, y) == (2, 2) { 1.0 } else { 0.0 });
        let blurred = gaussian_blur(&img, 1.0).unwrap();
        let taps = gaussian_kernel(1.0).unwrap();
        let center = taps[taps.len() / 2];
        assert!((blurred.get(2, 2) - center * center).abs() < 1e-12);
    }
}
