//! Weight-centre threshold calibration.
//!
//! Scores a labeled corpus, computes the mean score of each class (the two
//! "weight centres"), places the decision threshold at their
//! class-count-weighted mean, and saves the model as JSON.
//!
//! ```bash
//! cargo run --example calibrate_threshold
//! ```

use blurscope::imageio::{synth_dataset, SynthParams};
use blurscope::laplacian::{calibrate, score_batch, scores_by_class};
use blurscope::Result;

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("blurscope-example-calibrate");
    let dataset = synth_dataset(7, &SynthParams::new(40, 2.0, 4.0), &dir)?;

    let scored = score_batch(&dataset)?;
    let (blurry_scores, sharp_scores) = scores_by_class(&scored);

    let model = calibrate(&blurry_scores, &sharp_scores)?;
    println!("centre_blurry  {:.6}  (n = {})", model.centre_blurry, model.n_blurry);
    println!("centre_sharp   {:.6}  (n = {})", model.centre_sharp, model.n_sharp);
    println!("threshold      {:.6}", model.threshold);

    let json_path = dir.join("threshold.json");
    model.save(&json_path)?;
    println!("saved to {}", json_path.display());

    // scores below the threshold read blurry, everything else sharp
    let below = scored.iter().filter(|(_, s)| *s < model.threshold).count();
    println!(
        "{below} of {} corpus images fall below the threshold",
        scored.len()
    );
    Ok(())
}
