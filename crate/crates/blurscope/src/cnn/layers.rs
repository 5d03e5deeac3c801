//! Layer primitives: 3x3 same-padding convolution, 2x2 max pooling, dense
//! affine maps, activations and the binary cross-entropy loss, each with its
//! exact backward counterpart.

use super::Tensor;
use crate::error::{Error, Result};

/// Pre-activation clamp bound for the sigmoid; `exp(30)` is far from
/// overflow and `sigmoid(30)` is within 1e-13 of saturation.
const SIGMOID_CLAMP: f64 = 30.0;

/// Probability clamp applied before the BCE logs, bounding the loss at
/// `-ln(1e-7)` (about 16.12).
const BCE_EPS: f64 = 1e-7;

fn expect_shape(tensor: &Tensor, dims: usize, what: &str) -> Result<()> {
    if tensor.shape().len() != dims {
        return Err(Error::ShapeMismatch(format!(
            "{what} expects {dims} dimensions, got {:?}",
            tensor.shape()
        )));
    }
    Ok(())
}

/// Zero-padded same-size convolution: `out[f, y, x] = bias[f] +
/// sum over (c, i, j) of weights[f, c, i, j] * input[c, y+i-1, x+j-1]`.
pub fn conv3x3_forward(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    expect_shape(input, 3, "conv input")?;
    expect_shape(weights, 4, "conv weights")?;
    let (c_in, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let f_out = weights.shape()[0];
    if weights.shape() != [f_out, c_in, 3, 3] {
        return Err(Error::ShapeMismatch(format!(
            "conv weights {:?} do not match input channels {c_in}",
            weights.shape()
        )));
    }
    if bias.shape() != [f_out] {
        return Err(Error::ShapeMismatch(format!(
            "conv bias {:?}, expected [{f_out}]",
            bias.shape()
        )));
    }

    let x_in = input.data();
    let wt = weights.data();
    let mut out = vec![0.0f64; f_out * h * w];
    for f in 0..f_out {
        let b = bias.data()[f];
        for y in 0..h {
            for x in 0..w {
                let mut acc = b;
                for c in 0..c_in {
                    let w_base = ((f * c_in + c) * 3) * 3;
                    let in_base = c * h * w;
                    for i in 0..3 {
                        let sy = y as isize + i as isize - 1;
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        let row = in_base + sy as usize * w;
                        for j in 0..3 {
                            let sx = x as isize + j as isize - 1;
                            if sx < 0 || sx >= w as isize {
                                continue;
                            }
                            acc += wt[w_base + i * 3 + j] * x_in[row + sx as usize];
                        }
                    }
                }
                out[(f * h + y) * w + x] = acc;
            }
        }
    }
    Tensor::new(vec![f_out, h, w], out)
}

/// Gradients of [`conv3x3_forward`]: returns `(d_weights, d_bias, d_input)`
/// for the given upstream gradient over the output.
pub fn conv3x3_backward(
    input: &Tensor,
    weights: &Tensor,
    grad_out: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    expect_shape(input, 3, "conv input")?;
    let (c_in, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let f_out = weights.shape()[0];
    if grad_out.shape() != [f_out, h, w] {
        return Err(Error::ShapeMismatch(format!(
            "conv upstream gradient {:?}, expected [{f_out}, {h}, {w}]",
            grad_out.shape()
        )));
    }

    let x_in = input.data();
    let wt = weights.data();
    let g = grad_out.data();
    let mut gw = vec![0.0f64; weights.len()];
    let mut gb = vec![0.0f64; f_out];
    let mut gin = vec![0.0f64; input.len()];

    for f in 0..f_out {
        for y in 0..h {
            for x in 0..w {
                let gv = g[(f * h + y) * w + x];
                if gv == 0.0 {
                    continue;
                }
                gb[f] += gv;
                for c in 0..c_in {
                    let w_base = ((f * c_in + c) * 3) * 3;
                    let in_base = c * h * w;
                    for i in 0..3 {
                        let sy = y as isize + i as isize - 1;
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        let row = in_base + sy as usize * w;
                        for j in 0..3 {
                            let sx = x as isize + j as isize - 1;
                            if sx < 0 || sx >= w as isize {
                                continue;
                            }
                            let tap = w_base + i * 3 + j;
                            gw[tap] += gv * x_in[row + sx as usize];
                            gin[row + sx as usize] += gv * wt[tap];
                        }
                    }
                }
            }
        }
    }
    Ok((
        Tensor::new(weights.shape().to_vec(), gw)?,
        Tensor::new(vec![f_out], gb)?,
        Tensor::new(input.shape().to_vec(), gin)?,
    ))
}

/// 2x2 stride-2 max pooling. Returns the pooled tensor plus, per output
/// value, the flat input index of its maximum. Ties go to the smallest flat
/// index.
pub fn maxpool2x2_forward(input: &Tensor) -> Result<(Tensor, Vec<usize>)> {
    expect_shape(input, 3, "pool input")?;
    let (c_in, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    if h % 2 != 0 {
        return Err(Error::OddExtent(h));
    }
    if w % 2 != 0 {
        return Err(Error::OddExtent(w));
    }

    let x_in = input.data();
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(c_in * oh * ow);
    let mut argmax = Vec::with_capacity(c_in * oh * ow);
    for c in 0..c_in {
        for y in 0..oh {
            for x in 0..ow {
                let base = (c * h + 2 * y) * w + 2 * x;
                let mut best_idx = base;
                let mut best = x_in[base];
                for &offset in &[1, w, w + 1] {
                    let idx = base + offset;
                    if x_in[idx] > best {
                        best = x_in[idx];
                        best_idx = idx;
                    }
                }
                out.push(best);
                argmax.push(best_idx);
            }
        }
    }
    Ok((Tensor::new(vec![c_in, oh, ow], out)?, argmax))
}

/// Routes each upstream gradient to the input position that won the max.
pub fn maxpool2x2_backward(
    input_shape: &[usize],
    argmax: &[usize],
    grad_out: &Tensor,
) -> Result<Tensor> {
    if grad_out.len() != argmax.len() {
        return Err(Error::ShapeMismatch(format!(
            "pool upstream gradient has {} values, argmax has {}",
            grad_out.len(),
            argmax.len()
        )));
    }
    let mut gin = Tensor::zeros(input_shape.to_vec());
    for (&idx, &g) in argmax.iter().zip(grad_out.data()) {
        gin.data_mut()[idx] += g;
    }
    Ok(gin)
}

/// Affine map: `out[m] = bias[m] + sum over n of weights[m, n] * input[n]`.
pub fn dense_forward(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    expect_shape(input, 1, "dense input")?;
    expect_shape(weights, 2, "dense weights")?;
    let n = input.len();
    let m = weights.shape()[0];
    if weights.shape()[1] != n {
        return Err(Error::ShapeMismatch(format!(
            "dense weights {:?} do not match input length {n}",
            weights.shape()
        )));
    }
    if bias.shape() != [m] {
        return Err(Error::ShapeMismatch(format!(
            "dense bias {:?}, expected [{m}]",
            bias.shape()
        )));
    }
    let x = input.data();
    let out = (0..m)
        .map(|row| {
            let w_row = &weights.data()[row * n..(row + 1) * n];
            bias.data()[row]
                + w_row
                    .iter()
                    .zip(x)
                    .map(|(wv, xv)| wv * xv)
                    .sum::<f64>()
        })
        .collect();
    Tensor::new(vec![m], out)
}

/// Gradients of [`dense_forward`]: `(d_weights, d_bias, d_input)`.
pub fn dense_backward(
    input: &Tensor,
    weights: &Tensor,
    grad_out: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    let n = input.len();
    let m = weights.shape()[0];
    if grad_out.shape() != [m] {
        return Err(Error::ShapeMismatch(format!(
            "dense upstream gradient {:?}, expected [{m}]",
            grad_out.shape()
        )));
    }
    let x = input.data();
    let g = grad_out.data();
    let mut gw = vec![0.0f64; weights.len()];
    let mut gin = vec![0.0f64; n];
    for row in 0..m {
        let gv = g[row];
        let w_row = &weights.data()[row * n..(row + 1) * n];
        let gw_row = &mut gw[row * n..(row + 1) * n];
        for col in 0..n {
            gw_row[col] = gv * x[col];
            gin[col] += gv * w_row[col];
        }
    }
    Ok((
        Tensor::new(weights.shape().to_vec(), gw)?,
        Tensor::new(vec![m], g.to_vec())?,
        Tensor::new(vec![n], gin)?,
    ))
}

/// Elementwise `max(0, x)`.
pub fn relu(x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|&v| v.max(0.0)).collect();
    Tensor::new(x.shape().to_vec(), data).expect("same shape")
}

/// Masks the upstream gradient where the pre-activation was not positive.
pub fn relu_backward(pre_activation: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
    if pre_activation.shape() != grad_out.shape() {
        return Err(Error::ShapeMismatch(format!(
            "relu gradient {:?} vs pre-activation {:?}",
            grad_out.shape(),
            pre_activation.shape()
        )));
    }
    let data = pre_activation
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&z, &g)| if z > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::new(grad_out.shape().to_vec(), data)
}

/// Logistic function with the argument clamped to `[-30, 30]`, so extreme
/// logits saturate to tiny positive values instead of under/overflowing.
pub fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-SIGMOID_CLAMP, SIGMOID_CLAMP);
    1.0 / (1.0 + (-x).exp())
}

/// Binary cross-entropy `-[y ln p + (1-y) ln(1-p)]` with `p` clamped to
/// `[1e-7, 1 - 1e-7]`. Returns `(loss, dL/dp)` evaluated at the clamped `p`.
pub fn bce_loss(p: f64, y: f64) -> (f64, f64) {
    let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    let loss = -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
    let grad = -y / p + (1.0 - y) / (1.0 - p);
    (loss, grad)
}
