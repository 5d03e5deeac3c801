//! Classify individual images with both methods.
//!
//! Builds a tiny corpus, calibrates the Laplacian threshold, trains a quick
//! CNN, then prints per-image scores and verdicts from each classifier next
//! to the ground truth.
//!
//! ```bash
//! cargo run --example classify_images
//! ```

use blurscope::cnn::{predict, train, TrainConfig};
use blurscope::imageio::{load_image, synth_dataset, SynthParams};
use blurscope::laplacian::{calibrate, classify_laplacian, laplacian_variance, score_batch, scores_by_class};
use blurscope::Result;

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("blurscope-example-classify");
    let dataset = synth_dataset(21, &SynthParams::new(16, 2.0, 4.0), &dir)?;

    let (blurry, sharp) = scores_by_class(&score_batch(&dataset)?);
    let threshold = calibrate(&blurry, &sharp)?;

    let config = TrainConfig {
        epochs: 20,
        input_side: 32,
        seed: 21,
        ..TrainConfig::default()
    };
    let cnn = train(&dataset, &config)?.model;

    println!(
        "{:<18} {:>10} {:>10} {:>6} {:>6}  truth",
        "image", "lap score", "cnn prob", "lap", "cnn"
    );
    for sample in dataset.iter() {
        let image = load_image(&sample.path)?;
        let score = laplacian_variance(&image);
        let lap_verdict = classify_laplacian(&image, &threshold);
        let (prob, cnn_verdict) = predict(&cnn, &image)?;
        println!(
            "{:<18} {score:>10.5} {prob:>10.5} {:>6} {:>6}  {}",
            sample
                .path
                .file_name()
                .unwrap_or_default()
                .to_string_lossy(),
            lap_verdict,
            cnn_verdict,
            sample.label
        );
    }
    Ok(())
}
