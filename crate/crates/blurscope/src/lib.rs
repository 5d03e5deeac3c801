//! Blur detection toolkit.
//!
//! Two classifiers decide whether an image is blurry:
//!
//! - [`laplacian`] — variance of the Laplacian response, thresholded at the
//!   weighted mean of the two class weight centres (deterministic, no
//!   training beyond computing two means);
//! - [`cnn`] — a small convolutional network trained from scratch with
//!   minibatch SGD on binary cross-entropy.
//!
//! [`eval`] reproduces the confusion-matrix protocol used to compare them
//! (sensitivity, specificity, accuracy with Blurry as the positive class),
//! and [`imageio`] supplies netpbm I/O plus a seeded synthetic corpus
//! generator so the whole pipeline runs without any external photo
//! collection. The `blurscope` binary (see [`cli`]) wires these into
//! `synth`, `calibrate`, `train`, `classify`, `evaluate` and `compare`
//! subcommands; the crate's `examples/` directory shows the same flows as
//! library calls.
//!
//! Everything seeded is deterministic: fixed seeds reproduce corpora,
//! training trajectories and model files byte for byte.

pub mod cli;
pub mod cnn;
pub mod error;
pub mod eval;
pub mod imageio;
pub mod laplacian;

pub use error::{Error, Result};
pub use imageio::{GrayImage, Label, LabeledDataset, LabeledSample};
