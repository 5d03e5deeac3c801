//! The full comparison protocol, as library calls.
//!
//! Generates a corpus, splits it 80/20, calibrates the Laplacian threshold
//! and trains the CNN on the training split, evaluates both on the held-out
//! validation split, and prints the two confusion-matrix reports plus the
//! metric deltas.
//!
//! ```bash
//! cargo run --example evaluate_and_compare
//! ```

use blurscope::cnn::{predict, train, TrainConfig};
use blurscope::eval::{evaluate, split_dataset, Method, MetricsReport};
use blurscope::imageio::{synth_dataset, SynthParams};
use blurscope::laplacian::{calibrate, classify_laplacian, score_batch, scores_by_class};
use blurscope::Result;

fn print_report(report: &MetricsReport) {
    let c = &report.confusion;
    println!("[{}]", report.method);
    println!("  tp {:>3}   fp {:>3}", c.true_pos, c.false_pos);
    println!("  fn {:>3}   tn {:>3}", c.false_neg, c.true_neg);
    println!("  sensitivity {:.3}", report.sensitivity);
    println!("  specificity {:.3}", report.specificity);
    println!("  accuracy    {:.3}", report.accuracy);
}

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("blurscope-example-compare");
    let dataset = synth_dataset(7, &SynthParams::new(60, 2.0, 4.0), &dir)?;
    let split = split_dataset(&dataset, 0.8, 7)?;

    // both methods learn from the same training split
    let (blurry, sharp) = scores_by_class(&score_batch(&split.train)?);
    let threshold = calibrate(&blurry, &sharp)?;
    let config = TrainConfig {
        epochs: 10,
        input_side: 32,
        seed: 7,
        ..TrainConfig::default()
    };
    let cnn = train(&split.train, &config)?.model;

    let lap_report = evaluate(Method::Laplacian, &split.validation, "validation", |_, img| {
        Ok(classify_laplacian(img, &threshold))
    })?;
    let cnn_report = evaluate(Method::Cnn, &split.validation, "validation", |_, img| {
        predict(&cnn, img).map(|(_, label)| label)
    })?;

    print_report(&lap_report);
    println!();
    print_report(&cnn_report);
    println!();
    println!("[delta cnn-laplacian]");
    println!("  sensitivity {:+.3}", cnn_report.sensitivity - lap_report.sensitivity);
    println!("  specificity {:+.3}", cnn_report.specificity - lap_report.specificity);
    println!("  accuracy    {:+.3}", cnn_report.accuracy - lap_report.accuracy);
    Ok(())
}
