//! From-scratch convolutional network for binary blur classification.
//!
//! The architecture is data-driven: a [`CnnModel`] is an ordered list of
//! [`LayerSpec`]s plus parameter tensors, validated so consecutive shapes
//! chain and the final layer emits a single sigmoid probability of Blurry.
//! The default stack is
//! `Conv3x3(1->8)+ReLU, MaxPool2x2, Conv3x3(8->16)+ReLU, MaxPool2x2,
//! Dense(->32)+ReLU, Dense(32->1)+Sigmoid` on a 64x64 grayscale input.
//!
//! Forward, backward and SGD are all plain sequential `f64` loops, so a
//! fixed seed reproduces the training trajectory and the saved model file
//! byte for byte.

mod format;
mod layers;
mod train;

pub use format::{load_model, save_model};
pub use layers::{
    bce_loss, conv3x3_backward, conv3x3_forward, dense_backward, dense_forward,
    maxpool2x2_backward, maxpool2x2_forward, relu, relu_backward, sigmoid,
};
pub use train::{init_weights, sgd_step, train, EpochStats, TrainConfig, TrainRun};

use crate::error::{Error, Result};
use crate::imageio::{resize_bilinear, GrayImage, Label};

/// Dense row-major value container, up to 4 dimensions.
/// Activations use `[channels, height, width]` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.len() > 4 {
            return Err(Error::ShapeMismatch(format!(
                "tensors have 1 to 4 dimensions, got {shape:?}"
            )));
        }
        if shape.iter().any(|&e| e == 0) {
            return Err(Error::ShapeMismatch(format!(
                "all extents must be >= 1, got {shape:?}"
            )));
        }
        let want: usize = shape.iter().product();
        if data.len() != want {
            return Err(Error::ShapeMismatch(format!(
                "shape {shape:?} needs {want} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self::new(shape, vec![0.0; len]).expect("zeros of a valid shape")
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Same data viewed under a new shape of equal volume.
    pub fn reshaped(&self, shape: Vec<usize>) -> Result<Self> {
        Self::new(shape, self.data.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    None,
    Relu,
    Sigmoid,
}

/// One layer of the network.
///
/// `Conv3x3` is stride-1 with zero same-padding; `MaxPool2x2` is stride-2
/// with no padding (extents must be even).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Conv3x3 {
        in_channels: usize,
        out_channels: usize,
        activation: Activation,
    },
    MaxPool2x2,
    Dense {
        in_features: usize,
        out_features: usize,
        activation: Activation,
    },
}

impl LayerSpec {
    pub fn activation(&self) -> Activation {
        match self {
            LayerSpec::Conv3x3 { activation, .. } | LayerSpec::Dense { activation, .. } => {
                *activation
            }
            LayerSpec::MaxPool2x2 => Activation::None,
        }
    }

    /// Weight/bias shapes for parameterized layers.
    pub fn parameter_shapes(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        match *self {
            LayerSpec::Conv3x3 {
                in_channels,
                out_channels,
                ..
            } => Some((vec![out_channels, in_channels, 3, 3], vec![out_channels])),
            LayerSpec::Dense {
                in_features,
                out_features,
                ..
            } => Some((vec![out_features, in_features], vec![out_features])),
            LayerSpec::MaxPool2x2 => None,
        }
    }
}

/// Weight and bias tensors of one layer; also reused for their gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Tensor,
    pub bias: Tensor,
}

/// Per-layer parameter gradients, aligned with the model's layer list.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub per_layer: Vec<Option<LayerParams>>,
}

/// The default six-layer stack for a square input of side `input_side`
/// (must be a positive multiple of 4: two 2x2 pools have to divide it).
pub fn default_layers(input_side: usize) -> Vec<LayerSpec> {
    assert!(
        input_side >= 4 && input_side % 4 == 0,
        "input side must be a positive multiple of 4"
    );
    let flat = 16 * (input_side / 4) * (input_side / 4);
    vec![
        LayerSpec::Conv3x3 {
            in_channels: 1,
            out_channels: 8,
            activation: Activation::Relu,
        },
        LayerSpec::MaxPool2x2,
        LayerSpec::Conv3x3 {
            in_channels: 8,
            out_channels: 16,
            activation: Activation::Relu,
        },
        LayerSpec::MaxPool2x2,
        LayerSpec::Dense {
            in_features: flat,
            out_features: 32,
            activation: Activation::Relu,
        },
        LayerSpec::Dense {
            in_features: 32,
            out_features: 1,
            activation: Activation::Sigmoid,
        },
    ]
}

/// Ordered layer stack with its parameters and the fixed square input side.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    input_side: usize,
    layers: Vec<LayerSpec>,
    params: Vec<Option<LayerParams>>,
}

impl CnnModel {
    /// Validates that layer shapes chain from `[1, side, side]` down to a
    /// single sigmoid output, and that parameter tensors match their specs.
    pub fn new(
        input_side: usize,
        layers: Vec<LayerSpec>,
        params: Vec<Option<LayerParams>>,
    ) -> Result<Self> {
        if input_side == 0 {
            return Err(Error::ShapeMismatch("input side must be >= 1".into()));
        }
        if layers.is_empty() {
            return Err(Error::ShapeMismatch("a model needs at least one layer".into()));
        }
        if layers.len() != params.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} layers but {} parameter slots",
                layers.len(),
                params.len()
            )));
        }

        let mut shape = vec![1usize, input_side, input_side];
        for (idx, (layer, param)) in layers.iter().zip(&params).enumerate() {
            let mismatch = |msg: String| Error::ShapeMismatch(format!("layer {idx}: {msg}"));
            match (layer.parameter_shapes(), param) {
                (Some((w, b)), Some(p)) => {
                    if p.weights.shape() != w || p.bias.shape() != b {
                        return Err(mismatch(format!(
                            "parameter shapes {:?}/{:?} do not match spec {w:?}/{b:?}",
                            p.weights.shape(),
                            p.bias.shape()
                        )));
                    }
                }
                (Some(_), None) => return Err(mismatch("missing parameters".into())),
                (None, Some(_)) => return Err(mismatch("pool layers carry no parameters".into())),
                (None, None) => {}
            }
            shape = match *layer {
                LayerSpec::Conv3x3 {
                    in_channels,
                    out_channels,
                    ..
                } => {
                    if shape.len() != 3 || shape[0] != in_channels {
                        return Err(mismatch(format!(
                            "conv expects [{in_channels}, h, w], got {shape:?}"
                        )));
                    }
                    vec![out_channels, shape[1], shape[2]]
                }
                LayerSpec::MaxPool2x2 => {
                    if shape.len() != 3 {
                        return Err(mismatch(format!("pool expects [c, h, w], got {shape:?}")));
                    }
                    if shape[1] % 2 != 0 || shape[2] % 2 != 0 {
                        return Err(Error::OddExtent(shape[1].max(shape[2])));
                    }
                    vec![shape[0], shape[1] / 2, shape[2] / 2]
                }
                LayerSpec::Dense {
                    in_features,
                    out_features,
                    ..
                } => {
                    let flat: usize = shape.iter().product();
                    if flat != in_features {
                        return Err(mismatch(format!(
                            "dense expects {in_features} inputs, previous layer yields {flat}"
                        )));
                    }
                    vec![out_features]
                }
            };
        }
        if shape != [1] {
            return Err(Error::ShapeMismatch(format!(
                "final layer must emit a single value, got {shape:?}"
            )));
        }
        if layers.last().map(LayerSpec::activation) != Some(Activation::Sigmoid) {
            return Err(Error::ShapeMismatch(
                "final layer must apply a sigmoid".into(),
            ));
        }
        Ok(Self {
            input_side,
            layers,
            params,
        })
    }

    pub fn input_side(&self) -> usize {
        self.input_side
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn params(&self) -> &[Option<LayerParams>] {
        &self.params
    }

    /// Mutable access to the parameter tensors, e.g. for custom update
    /// rules or perturbation studies. Shapes must stay as validated.
    pub fn params_mut(&mut self) -> &mut [Option<LayerParams>] {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params
            .iter()
            .flatten()
            .map(|p| p.weights.len() + p.bias.len())
            .sum()
    }

    /// Zero-filled gradient holder matching this model's parameters.
    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            per_layer: self
                .params
                .iter()
                .map(|slot| {
                    slot.as_ref().map(|p| LayerParams {
                        weights: Tensor::zeros(p.weights.shape().to_vec()),
                        bias: Tensor::zeros(p.bias.shape().to_vec()),
                    })
                })
                .collect(),
        }
    }
}

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Activation entering each layer (index k = input of layer k).
    layer_inputs: Vec<Tensor>,
    /// Linear output of each layer before its activation
    /// (pool layers store the pooled values).
    pre_activations: Vec<Tensor>,
    /// Argmax indices for pool layers.
    argmaxes: Vec<Option<Vec<usize>>>,
    probability: f64,
}

impl ForwardTrace {
    pub fn probability(&self) -> f64 {
        self.probability
    }
}

/// Runs the network on a `[1, side, side]` tensor, recording intermediates.
pub fn forward(model: &CnnModel, input: &Tensor) -> Result<ForwardTrace> {
    let want = [1, model.input_side, model.input_side];
    if input.shape() != want {
        return Err(Error::ShapeMismatch(format!(
            "input shape {:?}, model expects {want:?}",
            input.shape()
        )));
    }
    let mut trace = ForwardTrace {
        layer_inputs: Vec::with_capacity(model.layers.len()),
        pre_activations: Vec::with_capacity(model.layers.len()),
        argmaxes: Vec::with_capacity(model.layers.len()),
        probability: 0.0,
    };
    let mut current = input.clone();
    for (layer, param) in model.layers.iter().zip(&model.params) {
        let (pre, argmax) = match layer {
            LayerSpec::Conv3x3 { .. } => {
                let p = param.as_ref().expect("validated conv parameters");
                (conv3x3_forward(&current, &p.weights, &p.bias)?, None)
            }
            LayerSpec::MaxPool2x2 => {
                let (pooled, argmax) = maxpool2x2_forward(&current)?;
                (pooled, Some(argmax))
            }
            LayerSpec::Dense { in_features, .. } => {
                let p = param.as_ref().expect("validated dense parameters");
                let flat = current.reshaped(vec![*in_features])?;
                (dense_forward(&flat, &p.weights, &p.bias)?, None)
            }
        };
        let post = match layer.activation() {
            Activation::None => pre.clone(),
            Activation::Relu => relu(&pre),
            Activation::Sigmoid => {
                let data = pre.data().iter().map(|&z| sigmoid(z)).collect();
                Tensor::new(pre.shape().to_vec(), data)?
            }
        };
        trace.layer_inputs.push(current);
        trace.pre_activations.push(pre);
        trace.argmaxes.push(argmax);
        current = post;
    }
    trace.probability = current.data()[0];
    Ok(trace)
}

/// Exact reverse-mode gradients of the binary cross-entropy loss at `(input,
/// y)` with respect to every weight and bias.
///
/// The final sigmoid and the loss combine to `dL/dz = p - y`; ReLU masks by
/// the sign of its pre-activation; pooling routes gradient to the stored
/// argmax; conv and dense accumulate over their spatial/feature extents.
pub fn backward(model: &CnnModel, input: &Tensor, y: f64) -> Result<(ForwardTrace, Gradients)> {
    let trace = forward(model, input)?;
    let grads = backward_from_trace(model, &trace, y)?;
    Ok((trace, grads))
}

pub fn backward_from_trace(
    model: &CnnModel,
    trace: &ForwardTrace,
    y: f64,
) -> Result<Gradients> {
    let mut grads = model.zero_gradients();
    let last = model.layers.len() - 1;

    // dL/dz of the sigmoid output under BCE
    let mut upstream = Tensor::new(vec![1], vec![trace.probability - y])?;

    for idx in (0..model.layers.len()).rev() {
        let layer = &model.layers[idx];
        let layer_input = &trace.layer_inputs[idx];
        let pre = &trace.pre_activations[idx];

        // grad w.r.t. this layer's pre-activation
        let gz = if idx == last {
            upstream // sigmoid folded into the loss above
        } else {
            match layer.activation() {
                Activation::None => upstream,
                Activation::Relu => relu_backward(pre, &upstream)?,
                Activation::Sigmoid => {
                    let data = pre
                        .data()
                        .iter()
                        .zip(upstream.data())
                        .map(|(&z, &g)| {
                            let s = sigmoid(z);
                            s * (1.0 - s) * g
                        })
                        .collect();
                    Tensor::new(pre.shape().to_vec(), data)?
                }
            }
        };

        upstream = match layer {
            LayerSpec::Conv3x3 { .. } => {
                let p = model.params[idx].as_ref().expect("validated conv parameters");
                let (gw, gb, gin) = conv3x3_backward(layer_input, &p.weights, &gz)?;
                grads.per_layer[idx] = Some(LayerParams {
                    weights: gw,
                    bias: gb,
                });
                gin
            }
            LayerSpec::MaxPool2x2 => {
                let argmax = trace.argmaxes[idx].as_ref().expect("pool stored argmax");
                maxpool2x2_backward(layer_input.shape(), argmax, &gz)?
            }
            LayerSpec::Dense { in_features, .. } => {
                let p = model.params[idx].as_ref().expect("validated dense parameters");
                let flat_input = layer_input.reshaped(vec![*in_features])?;
                let (gw, gb, gin) = dense_backward(&flat_input, &p.weights, &gz)?;
                grads.per_layer[idx] = Some(LayerParams {
                    weights: gw,
                    bias: gb,
                });
                gin.reshaped(layer_input.shape().to_vec())?
            }
        };
    }
    Ok(grads)
}

/// Resizes to the model's input side, runs the network, and thresholds the
/// Blurry probability at 0.5 (a probability of exactly 0.5 reads Blurry).
pub fn predict(model: &CnnModel, image: &GrayImage) -> Result<(f64, Label)> {
    let side = model.input_side;
    let resized = resize_bilinear(image, side, side);
    let input = Tensor::new(vec![1, side, side], resized.pixels().to_vec())?;
    let trace = forward(model, &input)?;
    let p = trace.probability();
    let label = if p >= 0.5 { Label::Blurry } else { Label::Sharp };
    Ok((p, label))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_validates_shape_and_volume() {
        assert!(Tensor::new(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(matches!(
            Tensor::new(vec![2, 3], vec![0.0; 5]),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            Tensor::new(vec![2, 0], vec![]),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            Tensor::new(vec![1; 5], vec![0.0]),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn default_architecture_chains_from_64() {
        let model = init_weights(64, &default_layers(64), 0).unwrap();
        assert_eq!(model.input_side(), 64);
        // conv keeps spatial size, two pools divide by 4, flatten feeds 4096
        let shapes: Vec<Vec<usize>> = {
            let input = Tensor::zeros(vec![1, 64, 64]);
            let trace = forward(&model, &input).unwrap();
            trace
                .pre_activations
                .iter()
                .map(|t| t.shape().to_vec())
                .collect()
        };
        assert_eq!(
            shapes,
            vec![
                vec![8, 64, 64],
                vec![8, 32, 32],
                vec![16, 32, 32],
                vec![16, 16, 16],
                vec![32],
                vec![1],
            ]
        );
    }

    #[test]
    fn model_rejects_broken_chains() {
        let layers = vec![
            LayerSpec::Conv3x3 {
                in_channels: 2, // input has one channel
                out_channels: 4,
                activation: Activation::Relu,
            },
            LayerSpec::Dense {
                in_features: 4 * 8 * 8,
                out_features: 1,
                activation: Activation::Sigmoid,
            },
        ];
        let params = layers
            .iter()
            .map(|l| {
                l.parameter_shapes().map(|(w, b)| LayerParams {
                    weights: Tensor::zeros(w),
                    bias: Tensor::zeros(b),
                })
            })
            .collect();
        assert!(matches!(
            CnnModel::new(8, layers, params),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn model_requires_final_sigmoid() {
        let layers = vec![LayerSpec::Dense {
            in_features: 64,
            out_features: 1,
            activation: Activation::None,
        }];
        let params = vec![Some(LayerParams {
            weights: Tensor::zeros(vec![1, 64]),
            bias: Tensor::zeros(vec![1]),
        })];
        assert!(matches!(
            CnnModel::new(8, layers, params),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn pool_rejects_odd_extents() {
        let layers = vec![
            LayerSpec::MaxPool2x2,
            LayerSpec::Dense {
                in_features: 9,
                out_features: 1,
                activation: Activation::Sigmoid,
            },
        ];
        let params = vec![
            None,
            Some(LayerParams {
                weights: Tensor::zeros(vec![1, 9]),
                bias: Tensor::zeros(vec![1]),
            }),
        ];
        assert!(matches!(
            CnnModel::new(7, layers, params),
            Err(Error::OddExtent(7))
        ));
    }

    #[test]
    fn zeroed_dense_output_predicts_exactly_half() {
        let mut model = init_weights(8, &default_layers(8), 3).unwrap();
        let last = model.layers().len() - 1;
        if let Some(p) = &mut model.params_mut()[last] {
            p.weights.data_mut().fill(0.0);
            p.bias.data_mut().fill(0.0);
        }
        let image = GrayImage::from_fn(8, 8, |x, y| ((x * y) % 5) as f64 / 4.0);
        let (p, label) = predict(&model, &image).unwrap();
        assert_eq!(p, 0.5);
        assert_eq!(label, Label::Blurry, "tie at 0.5 reads Blurry");
    }

    #[test]
    fn predict_is_pure() {
        let model = init_weights(8, &default_layers(8), 5).unwrap();
        let image = GrayImage::from_fn(11, 9, |x, y| ((x + 2 * y) % 7) as f64 / 6.0);
        let (p1, l1) = predict(&model, &image).unwrap();
        let (p2, l2) = predict(&model, &image).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(l1, l2);
    }
}
