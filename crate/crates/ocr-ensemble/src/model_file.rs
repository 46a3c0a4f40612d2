//! Reading and writing `POCRM1` model files.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ocr_ensemble_core::corrector::{format, CorrectorError, NoisyChannelModel};
use thiserror::Error;

/// Model file failures, always naming the file.
#[derive(Debug, Error)]
pub enum ModelFileError {
    /// The file could not be read or written.
    #[error("{path}: {source}")]
    Io {
        /// Model path.
        path: PathBuf,
        /// Underlying error.
        source: io::Error,
    },
    /// The file content was rejected.
    #[error("{path}: {source}")]
    Format {
        /// Model path.
        path: PathBuf,
        /// Underlying error.
        source: CorrectorError,
    },
}

/// Writes `model` to `path`.
pub fn save_model(model: &NoisyChannelModel, path: &Path) -> Result<(), ModelFileError> {
    fs::write(path, format::to_text(model)).map_err(|source| ModelFileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a model from `path`.
pub fn load_model(path: &Path) -> Result<NoisyChannelModel, ModelFileError> {
    let text = fs::read_to_string(path).map_err(|source| ModelFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    format::from_text(&text).map_err(|source| ModelFileError::Format {
        path: path.to_path_buf(),
        source,
    })
}
