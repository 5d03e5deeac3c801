use std::path::PathBuf;

/// Crate-wide error type. Variants carry enough context to name the
/// offending file or value in diagnostics.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    // ---- image decoding / encoding ----
    #[error("{path}: unsupported image magic {found:?} (expected P2, P5 or P6)")]
    UnknownMagic { path: PathBuf, found: String },
    #[error("{path}: truncated file ({context})")]
    Truncated { path: PathBuf, context: String },
    #[error("{path}: bad header ({reason})")]
    BadHeader { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid image: {0}")]
    InvalidImage(String),

    // ---- synthetic corpus generation ----
    #[error("sigma must be positive, got {0}")]
    NonpositiveSigma(f64),
    #[error("bad range: {0}")]
    BadRange(String),

    // ---- datasets ----
    #[error("{path}: bad labels csv ({reason})")]
    BadCsv { path: PathBuf, reason: String },
    #[error("duplicate path in dataset: {0}")]
    DuplicatePath(PathBuf),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset contains samples of a single class only")]
    SingleClassDataset,

    // ---- laplacian scoring / calibration ----
    #[error("kernel size must be odd, got {0}")]
    EvenKernel(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("calibration needs at least one score per class")]
    EmptyClass,
    #[error(
        "inverted centres: blurry centre {centre_blurry} is not below sharp centre {centre_sharp}"
    )]
    InvertedCentres {
        centre_blurry: f64,
        centre_sharp: f64,
    },

    // ---- cnn ----
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("extent must be even for 2x2 pooling, got {0}")]
    OddExtent(usize),
    #[error("{path}: bad model magic")]
    BadMagic { path: PathBuf },
    #[error("{path}: unsupported model version {found}")]
    VersionMismatch { path: PathBuf, found: u32 },
    #[error("{path}: invalid model file ({reason})")]
    InvalidModel { path: PathBuf, reason: String },

    // ---- metrics ----
    #[error("prediction and truth lists differ in length ({predictions} vs {truths})")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("confusion matrix has no actual positives")]
    NoPositives,
    #[error("confusion matrix has no actual negatives")]
    NoNegatives,
    #[error("confusion matrix is empty")]
    EmptyMatrix,

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
