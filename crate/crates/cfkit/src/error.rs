use std::io;
use std::path::PathBuf;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("malformed PGM header in {path}: {detail}")]
    PgmHeader { path: PathBuf, detail: String },

    #[error("image shape mismatch: expected {expected_h}x{expected_w}, found {found_h}x{found_w}")]
    ShapeMismatch {
        expected_h: usize,
        expected_w: usize,
        found_h: usize,
        found_w: usize,
    },

    #[error("{what} dimension mismatch: expected {expected}, found {found}")]
    DimMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("intensity {value} outside [0, 1]")]
    IntensityOutOfRange { value: f64 },

    #[error("pixel buffer holds {found} values, expected {expected}")]
    PixelCount { expected: usize, found: usize },

    #[error("invalid {name}: {detail}")]
    InvalidInput { name: &'static str, detail: String },

    #[error("output directory {0} exists and is not empty (pass overwrite to replace it)")]
    OutputDirNotEmpty(PathBuf),

    #[error("cannot normalize an all-zero image (total ink mass is 0)")]
    ZeroMass,

    #[error("manifest line {line}: {detail}")]
    Manifest { line: usize, detail: String },

    #[error("requested {requested} medoids from {available} points")]
    TooManyMedoids { requested: usize, available: usize },

    #[error("only {distinct} distinct embedding vectors available for {requested} medoids")]
    DegenerateCluster { distinct: usize, requested: usize },

    #[error("training diverged with non-finite loss at iteration {iteration}")]
    TrainingDiverged { iteration: usize },

    #[error("bad magic in {path}: expected {expected:?}, found {found:?}")]
    BadMagic {
        path: PathBuf,
        expected: [u8; 4],
        found: [u8; 4],
    },

    #[error("corrupt file {path}: {detail}")]
    FileFormat { path: PathBuf, detail: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(name: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidInput {
            name,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
