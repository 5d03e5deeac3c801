//! Train the CNN classifier from scratch.
//!
//! Uses a small corpus and a 32x32 input so the run finishes in seconds;
//! the defaults (64x64, 30 epochs) are what the full pipeline uses. The
//! model file round-trips bit-exactly.
//!
//! ```bash
//! cargo run --example train_cnn
//! ```

use blurscope::cnn::{load_model, predict, save_model, train, TrainConfig};
use blurscope::eval::split_dataset;
use blurscope::imageio::{load_image, synth_dataset, SynthParams};
use blurscope::Result;

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("blurscope-example-train");
    let dataset = synth_dataset(7, &SynthParams::new(40, 2.0, 4.0), &dir)?;
    let split = split_dataset(&dataset, 0.8, 7)?;

    let config = TrainConfig {
        epochs: 10,
        input_side: 32,
        seed: 7,
        ..TrainConfig::default()
    };
    let run = train(&split.train, &config)?;
    for stats in &run.log {
        println!(
            "epoch {:2}  mean loss {:.4}  train accuracy {:.3}",
            stats.epoch, stats.mean_loss, stats.train_accuracy
        );
    }

    let model_path = dir.join("cnn.model");
    save_model(&run.model, &model_path)?;
    let model = load_model(&model_path)?;
    println!("model round-trips bit-exactly: {}", model == run.model);

    let mut correct = 0;
    for sample in split.validation.iter() {
        let image = load_image(&sample.path)?;
        let (_, label) = predict(&model, &image)?;
        correct += (label == sample.label) as usize;
    }
    println!(
        "validation: {correct}/{} correct",
        split.validation.len()
    );
    Ok(())
}
