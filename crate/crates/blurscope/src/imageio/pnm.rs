//! Netpbm reader/writer.
//!
//! Supported on load: `P2` (ASCII PGM), `P5` (binary PGM), `P6` (binary PPM,
//! converted to luma). Only 8-bit files (maxval 1..=255) are accepted.
//! Saved files are always binary `P5` with maxval 255:
//! `"P5\n<w> <h>\n255\n"` followed by `w*h` bytes, row-major, top-left origin.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{to_grayscale, GrayImage};
use crate::error::{Error, Result};

/// Loads a netpbm image and normalizes it to grayscale `[0, 1]`.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

/// Writes `image` as a binary PGM (P5, maxval 255). Each pixel is stored as
/// `round(p * 255)`, so a save/load round trip moves a pixel by at most
/// `1/510`.
pub fn save_pgm(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(32 + image.pixels().len());
    write!(out, "P5\n{} {}\n255\n", image.width(), image.height()).expect("vec write");
    out.extend(image.pixels().iter().map(|&p| quantize(p)));
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// `[0, 1]` intensity to the 8-bit sample a P5 file stores.
pub(crate) fn quantize(p: f64) -> u8 {
    (p * 255.0).round() as u8
}

fn decode(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    if bytes.len() < 2 {
        return Err(Error::Truncated {
            path: path.into(),
            context: "no magic number".into(),
        });
    }
    let magic = &bytes[..2];
    if !matches!(magic, b"P2" | b"P5" | b"P6") {
        return Err(Error::UnknownMagic {
            path: path.into(),
            found: String::from_utf8_lossy(magic).into_owned(),
        });
    }

    let mut header = HeaderScanner {
        bytes,
        pos: 2,
        path,
    };
    let width = header.next_value("width")?;
    let height = header.next_value("height")?;
    let maxval = header.next_value("maxval")?;
    if width < 1 || height < 1 {
        return Err(Error::BadHeader {
            path: path.into(),
            reason: format!("nonpositive dimensions {width}x{height}"),
        });
    }
    if !(1..=255).contains(&maxval) {
        return Err(Error::BadHeader {
            path: path.into(),
            reason: format!("maxval {maxval} outside [1, 255]"),
        });
    }
    let max = maxval as f64;
    let (width, height) = (width as usize, height as usize);

    let pixels = match magic {
        b"P2" => {
            let mut pixels = Vec::with_capacity(width * height);
            for _ in 0..width * height {
                let v = header.next_value("pixel")?;
                if v > maxval {
                    return Err(Error::BadHeader {
                        path: path.into(),
                        reason: format!("sample {v} exceeds maxval {maxval}"),
                    });
                }
                pixels.push(v as f64 / max);
            }
            pixels
        }
        b"P5" => raster(&mut header, width * height, 1)?
            .iter()
            .map(|px| px[0] as f64 / max)
            .collect(),
        b"P6" => raster(&mut header, width * height, 3)?
            .iter()
            .map(|px| {
                to_grayscale(px[0] as f64 / max, px[1] as f64 / max, px[2] as f64 / max)
            })
            .collect(),
        _ => unreachable!(),
    };

    GrayImage::new(width, height, pixels)
}

/// Binary raster: exactly one whitespace byte separates the header from the
/// payload, then `count` samples of `stride` bytes each.
fn raster<'a>(header: &mut HeaderScanner<'a>, count: usize, stride: usize) -> Result<Vec<&'a [u8]>> {
    let start = header.pos + 1; // consume the single post-maxval whitespace byte
    let need = count * stride;
    let payload = header.bytes.get(start..start + need).ok_or_else(|| {
        Error::Truncated {
            path: header.path.into(),
            context: format!(
                "raster needs {need} bytes, file has {}",
                header.bytes.len().saturating_sub(start)
            ),
        }
    })?;
    Ok(payload.chunks_exact(stride).collect())
}

struct HeaderScanner<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl HeaderScanner<'_> {
    /// Next whitespace-delimited unsigned integer, skipping `#` comments.
    fn next_value(&mut self, what: &str) -> Result<u32> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'#') => {
                    while !matches!(self.bytes.get(self.pos), None | Some(b'\n')) {
                        self.pos += 1;
                    }
                }
                Some(_) => break,
                None => {
                    return Err(Error::Truncated {
                        path: self.path.into(),
                        context: format!("missing {what}"),
                    })
                }
            }
        }
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_digit())
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(Error::BadHeader {
                path: self.path.into(),
                reason: format!(
                    "expected a number for {what}, found byte {:?}",
                    self.bytes[start] as char
                ),
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::BadHeader {
                path: self.path.into(),
                reason: format!("unparsable {what}"),
            })
    }
}
