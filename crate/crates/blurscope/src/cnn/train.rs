//! Seeded He initialization, plain SGD, and the epoch loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{backward_from_trace, bce_loss, forward, CnnModel, Gradients, LayerParams, LayerSpec, Tensor};
use crate::error::{Error, Result};
use crate::imageio::{load_image, resize_bilinear, Label, LabeledDataset};

/// Training hyperparameters. The defaults are the frozen configuration the
/// synthetic-corpus suites run with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Square side every image is resized to before entering the network.
    pub input_side: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            learning_rate: 0.05,
            batch_size: 16,
            seed: 0,
            input_side: 64,
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_accuracy: f64,
}

/// A trained model plus its per-epoch log.
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub model: CnnModel,
    pub log: Vec<EpochStats>,
}

// ChaCha streams carved out of the training seed.
const STREAM_INIT: u64 = 0;
const STREAM_SHUFFLE: u64 = 1;

/// He-style initialization: weights from a seeded normal with standard
/// deviation `sqrt(2 / fan_in)`, biases zero.
pub fn init_weights(input_side: usize, layers: &[LayerSpec], seed: u64) -> Result<CnnModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_INIT);
    let params = layers
        .iter()
        .map(|layer| {
            layer.parameter_shapes().map(|(w_shape, b_shape)| {
                let fan_in = match layer {
                    LayerSpec::Conv3x3 { in_channels, .. } => in_channels * 9,
                    LayerSpec::Dense { in_features, .. } => *in_features,
                    LayerSpec::MaxPool2x2 => unreachable!("pool has no parameters"),
                };
                let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt())
                    .expect("positive std");
                let len = w_shape.iter().product();
                let weights = (0..len).map(|_| normal.sample(&mut rng)).collect();
                LayerParams {
                    weights: Tensor::new(w_shape.clone(), weights).expect("init shape"),
                    bias: Tensor::zeros(b_shape),
                }
            })
        })
        .collect();
    CnnModel::new(input_side, layers.to_vec(), params)
}

/// One gradient-descent step: `theta <- theta - lr * g` for every parameter.
/// No momentum, no weight decay.
pub fn sgd_step(model: &mut CnnModel, gradients: &Gradients, learning_rate: f64) -> Result<()> {
    if gradients.per_layer.len() != model.params().len() {
        return Err(Error::ShapeMismatch(format!(
            "gradients cover {} layers, model has {}",
            gradients.per_layer.len(),
            model.params().len()
        )));
    }
    for (slot, grad) in model.params_mut().iter_mut().zip(&gradients.per_layer) {
        match (slot, grad) {
            (Some(p), Some(g)) => {
                if p.weights.shape() != g.weights.shape() || p.bias.shape() != g.bias.shape() {
                    return Err(Error::ShapeMismatch(
                        "gradient shapes do not match parameters".into(),
                    ));
                }
                for (w, gw) in p.weights.data_mut().iter_mut().zip(g.weights.data()) {
                    *w -= learning_rate * gw;
                }
                for (b, gb) in p.bias.data_mut().iter_mut().zip(g.bias.data()) {
                    *b -= learning_rate * gb;
                }
            }
            (None, None) => {}
            _ => {
                return Err(Error::ShapeMismatch(
                    "gradient layout does not match the model's layers".into(),
                ));
            }
        }
    }
    Ok(())
}

fn accumulate(total: &mut Gradients, part: &Gradients) {
    for (acc, g) in total.per_layer.iter_mut().zip(&part.per_layer) {
        if let (Some(acc), Some(g)) = (acc, g) {
            for (a, v) in acc.weights.data_mut().iter_mut().zip(g.weights.data()) {
                *a += v;
            }
            for (a, v) in acc.bias.data_mut().iter_mut().zip(g.bias.data()) {
                *a += v;
            }
        }
    }
}

fn scale(grads: &mut Gradients, factor: f64) {
    for slot in grads.per_layer.iter_mut().flatten() {
        for v in slot.weights.data_mut() {
            *v *= factor;
        }
        for v in slot.bias.data_mut() {
            *v *= factor;
        }
    }
}

/// Trains the default architecture on a labeled dataset.
///
/// Every image is loaded once and resized to `input_side`. Each epoch
/// shuffles the sample order with a seeded generator and runs minibatch SGD
/// on the binary cross-entropy of the Blurry probability (`y = 1` for
/// Blurry). Gradients are averaged within a batch. The whole trajectory is
/// a deterministic function of the dataset and config.
pub fn train(dataset: &LabeledDataset, config: &TrainConfig) -> Result<TrainRun> {
    if config.epochs < 1 {
        return Err(Error::BadRange("epochs must be >= 1".into()));
    }
    if config.batch_size < 1 {
        return Err(Error::BadRange("batch size must be >= 1".into()));
    }
    if !(config.learning_rate > 0.0) {
        return Err(Error::BadRange(format!(
            "learning rate must be positive, got {}",
            config.learning_rate
        )));
    }
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !dataset.has_both_classes() {
        return Err(Error::SingleClassDataset);
    }

    let side = config.input_side;
    let examples: Vec<(Tensor, f64)> = dataset
        .iter()
        .map(|sample| {
            let image = load_image(&sample.path)?;
            let resized = resize_bilinear(&image, side, side);
            let y = match sample.label {
                Label::Blurry => 1.0,
                Label::Sharp => 0.0,
            };
            Ok((Tensor::new(vec![1, side, side], resized.pixels().to_vec())?, y))
        })
        .collect::<Result<_>>()?;

    let mut model = init_weights(side, &super::default_layers(side), config.seed)?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(STREAM_SHUFFLE);

    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;

        for batch in order.chunks(config.batch_size) {
            let mut batch_grads = model.zero_gradients();
            for &idx in batch {
                let (input, y) = &examples[idx];
                let trace = forward(&model, input)?;
                let p = trace.probability();
                loss_sum += bce_loss(p, *y).0;
                let predicted_blurry = p >= 0.5;
                if predicted_blurry == (*y == 1.0) {
                    correct += 1;
                }
                let grads = backward_from_trace(&model, &trace, *y)?;
                accumulate(&mut batch_grads, &grads);
            }
            scale(&mut batch_grads, 1.0 / batch.len() as f64);
            sgd_step(&mut model, &batch_grads, config.learning_rate)?;
        }

        log.push(EpochStats {
            epoch,
            mean_loss: loss_sum / examples.len() as f64,
            train_accuracy: correct as f64 / examples.len() as f64,
        });
    }

    Ok(TrainRun { model, log })
}
