//! Binary model file, little-endian throughout:
//!
//! ```text
//! magic   8 bytes  "BLRCNN01"
//! u32     version, currently 1
//! u32     input_side
//! u32     layer count
//! per layer:
//!   u8    kind        0 = Conv3x3, 1 = MaxPool2x2, 2 = Dense
//!   u8    activation  0 = None, 1 = ReLU, 2 = Sigmoid
//!   u32x4 dims        conv: [in, out, 0, 0]; dense: [in, out, 0, 0]; pool: zeros
//! then every parameter tensor as f64, weights before bias, in layer order
//! ```
//!
//! Round trips are bit-exact.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{Activation, CnnModel, LayerParams, LayerSpec, Tensor};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"BLRCNN01";
const VERSION: u32 = 1;

pub fn save_model(model: &CnnModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(model.input_side() as u32).to_le_bytes());
    out.extend_from_slice(&(model.layers().len() as u32).to_le_bytes());
    for layer in model.layers() {
        let (kind, activation, dims) = encode_layer(layer);
        out.push(kind);
        out.push(activation);
        for d in dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
    }
    for params in model.params().iter().flatten() {
        for tensor in [&params.weights, &params.bias] {
            for v in tensor.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CnnModel> {
    let path = path.as_ref();
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    let mut reader = Reader { bytes: &bytes, pos: 0, path };

    let magic = reader.take(8, "magic")?;
    if magic != MAGIC {
        return Err(Error::BadMagic { path: path.into() });
    }
    let version = reader.u32("version")?;
    if version != VERSION {
        return Err(Error::VersionMismatch {
            path: path.into(),
            found: version,
        });
    }
    let input_side = reader.u32("input side")? as usize;
    let layer_count = reader.u32("layer count")? as usize;

    let mut layers = Vec::with_capacity(layer_count);
    for idx in 0..layer_count {
        let kind = reader.take(1, "layer kind")?[0];
        let activation = reader.take(1, "layer activation")?[0];
        let mut dims = [0u32; 4];
        for d in &mut dims {
            *d = reader.u32("layer dims")?;
        }
        layers.push(decode_layer(kind, activation, dims).map_err(|reason| {
            Error::InvalidModel {
                path: path.into(),
                reason: format!("layer {idx}: {reason}"),
            }
        })?);
    }

    let mut params = Vec::with_capacity(layer_count);
    for layer in &layers {
        params.push(match layer.parameter_shapes() {
            None => None,
            Some((w_shape, b_shape)) => {
                let weights = reader.tensor(w_shape, "weights")?;
                let bias = reader.tensor(b_shape, "bias")?;
                Some(LayerParams { weights, bias })
            }
        });
    }
    if reader.pos != bytes.len() {
        return Err(Error::InvalidModel {
            path: path.into(),
            reason: format!("{} trailing bytes", bytes.len() - reader.pos),
        });
    }

    CnnModel::new(input_side, layers, params).map_err(|e| Error::InvalidModel {
        path: path.into(),
        reason: e.to_string(),
    })
}

fn encode_layer(layer: &LayerSpec) -> (u8, u8, [u32; 4]) {
    let activation = match layer.activation() {
        Activation::None => 0u8,
        Activation::Relu => 1,
        Activation::Sigmoid => 2,
    };
    match *layer {
        LayerSpec::Conv3x3 {
            in_channels,
            out_channels,
            ..
        } => (0, activation, [in_channels as u32, out_channels as u32, 0, 0]),
        LayerSpec::MaxPool2x2 => (1, activation, [0; 4]),
        LayerSpec::Dense {
            in_features,
            out_features,
            ..
        } => (2, activation, [in_features as u32, out_features as u32, 0, 0]),
    }
}

fn decode_layer(kind: u8, activation: u8, dims: [u32; 4]) -> std::result::Result<LayerSpec, String> {
    let activation = match activation {
        0 => Activation::None,
        1 => Activation::Relu,
        2 => Activation::Sigmoid,
        other => return Err(format!("unknown activation code {other}")),
    };
    match kind {
        0 => Ok(LayerSpec::Conv3x3 {
            in_channels: dims[0] as usize,
            out_channels: dims[1] as usize,
            activation,
        }),
        1 => Ok(LayerSpec::MaxPool2x2),
        2 => Ok(LayerSpec::Dense {
            in_features: dims[0] as usize,
            out_features: dims[1] as usize,
            activation,
        }),
        other => Err(format!("unknown layer kind {other}")),
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl Reader<'_> {
    fn take(&mut self, n: usize, what: &str) -> Result<&[u8]> {
        let slice = self.bytes.get(self.pos..self.pos + n).ok_or_else(|| {
            Error::Truncated {
                path: self.path.into(),
                context: format!("while reading {what}"),
            }
        })?;
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let bytes = self.take(4, what)?;
        Ok(u32::from_le_bytes(bytes.try_into().expect("4 bytes")))
    }

    fn tensor(&mut self, shape: Vec<usize>, what: &str) -> Result<Tensor> {
        let len: usize = shape.iter().product();
        let bytes = self.take(len * 8, what)?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Tensor::new(shape, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::{default_layers, init_weights};

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let model = init_weights(8, &default_layers(8), 77).unwrap();
        let path = dir.path().join("m.model");
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, model);

        // and saving the reloaded model reproduces the same bytes
        let path2 = dir.path().join("m2.model");
        save_model(&back, &path2).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.model");
        fs::write(&path, b"NOTCNN01somedata").unwrap();
        assert!(matches!(load_model(&path), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn future_versions_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let model = init_weights(8, &default_layers(8), 1).unwrap();
        let path = dir.path().join("v.model");
        save_model(&model, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[8] = 9; // version little-endian low byte
        fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_model(&path),
            Err(Error::VersionMismatch { found: 9, .. })
        ));
    }

    #[test]
    fn truncation_anywhere_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let model = init_weights(8, &default_layers(8), 2).unwrap();
        let path = dir.path().join("t.model");
        save_model(&model, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        for cut in [4, 10, 14, 20, bytes.len() / 2, bytes.len() - 3] {
            let path_cut = dir.path().join(format!("t{cut}.model"));
            fs::write(&path_cut, &bytes[..cut]).unwrap();
            assert!(
                matches!(load_model(&path_cut), Err(Error::Truncated { .. })),
                "cut at {cut} not flagged as truncated"
            );
        }
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let model = init_weights(8, &default_layers(8), 3).unwrap();
        let path = dir.path().join("g.model");
        save_model(&model, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.extend_from_slice(&[0u8; 5]);
        fs::write(&path, bytes).unwrap();
        assert!(matches!(load_model(&path), Err(Error::InvalidModel { .. })));
    }
}
