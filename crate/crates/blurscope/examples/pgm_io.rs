//! Netpbm image I/O.
//!
//! Loads P2/P5/P6 files into `[0, 1]` grayscale, converts color to BT.601
//! luma, writes binary P5, and demonstrates the quantization bound of the
//! save/load round trip.
//!
//! ```bash
//! cargo run --example pgm_io
//! ```

use blurscope::imageio::{load_image, resize_bilinear, save_pgm, synth_texture, to_grayscale};
use blurscope::Result;

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("blurscope-example-pgm");
    std::fs::create_dir_all(&dir).expect("create example dir");

    // color is collapsed to luma on load
    let ppm = dir.join("pixel.ppm");
    std::fs::write(&ppm, b"P6\n1 1\n255\n\xff\x00\x00").expect("write ppm");
    let red = load_image(&ppm)?;
    println!(
        "pure red loads as luma {:.3} (weights: {:.3})",
        red.pixels()[0],
        to_grayscale(1.0, 0.0, 0.0)
    );

    // save / load round trip moves pixels by at most 1/510
    let texture = synth_texture(3, 48, 48);
    let pgm = dir.join("texture.pgm");
    save_pgm(&texture, &pgm)?;
    let back = load_image(&pgm)?;
    let worst = texture
        .pixels()
        .iter()
        .zip(back.pixels())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    println!("round-trip worst pixel deviation: {worst:.6} (bound {:.6})", 1.0 / 510.0);

    // bilinear resize with half-pixel-centered sampling
    let small = resize_bilinear(&texture, 16, 16);
    save_pgm(&small, &dir.join("texture_16.pgm"))?;
    println!(
        "resized {}x{} -> {}x{}, files in {}",
        texture.width(),
        texture.height(),
        small.width(),
        small.height(),
        dir.display()
    );
    Ok(())
}
