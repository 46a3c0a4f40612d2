//! Corpus directories: `<root>/<language>/<doc_id>.txt`, one tagged
//! three-line document per file.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ocr_ensemble_core::textdata::{parse_icdar_document, TextDataError};
use ocr_ensemble_core::{AlignedTriple, Corpus};
use thiserror::Error;

/// File extension of corpus documents.
pub const DOC_EXTENSION: &str = "txt";

/// Failures that stop a directory from being read at all.
#[derive(Debug, Error)]
pub enum CorpusError {
    /// Reading or writing a path failed.
    #[error("{path}: {source}")]
    Io {
        /// Offending path.
        path: PathBuf,
        /// Underlying error.
        source: io::Error,
    },
    /// The documents do not form a valid corpus.
    #[error("{path}: {source}")]
    Invalid {
        /// Corpus directory.
        path: PathBuf,
        /// Underlying error.
        source: TextDataError,
    },
}

/// A document that could not be used.
#[derive(Debug)]
pub struct FileError {
    /// Offending file.
    pub path: PathBuf,
    /// What went wrong.
    pub message: String,
}

/// Result of reading one corpus directory.
#[derive(Debug)]
pub struct LoadedCorpus {
    /// Valid documents, in file-name order.
    pub corpus: Corpus,
    /// Files that failed to read or parse.
    pub errors: Vec<FileError>,
    /// Files kept despite an unpadded `OCR_aligned` that disagrees with
    /// `OCR_toInput`.
    pub warnings: Vec<FileError>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Document files of `dir`, sorted by the bytes of their names.
pub fn document_files(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == DOC_EXTENSION) {
            files.push(path);
        }
    }
    files.sort_by(|a, b| {
        a.file_name()
            .map(|n| n.as_encoded_bytes())
            .cmp(&b.file_name().map(|n| n.as_encoded_bytes()))
    });
    Ok(files)
}

fn doc_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Reads every document of one language directory. The language label is
/// the directory name. Per-file problems are collected, not fatal.
pub fn load_corpus(dir: &Path) -> Result<LoadedCorpus, CorpusError> {
    let language = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut documents = Vec::new();
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    for path in document_files(dir)? {
        let parsed = fs::read_to_string(&path)
            .map_err(|e| e.to_string())
            .and_then(|text| parse_icdar_document(&text, doc_id(&path)).map_err(|e| e.to_string()));
        match parsed {
            Ok(doc) => {
                if !doc.is_consistent() {
                    warnings.push(FileError {
                        path: path.clone(),
                        message: "unpadded OCR_aligned differs from OCR_toInput; using OCR_toInput"
                            .to_string(),
                    });
                }
                documents.push(doc);
            }
            Err(message) => errors.push(FileError { path, message }),
        }
    }
    let corpus = Corpus::new(language, documents).map_err(|source| CorpusError::Invalid {
        path: dir.to_path_buf(),
        source,
    })?;
    Ok(LoadedCorpus {
        corpus,
        errors,
        warnings,
    })
}

/// Language directories under `root`, sorted by name.
pub fn language_dirs(root: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let mut dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(io_err(root))? {
        let path = entry.map_err(io_err(root))?.path();
        if path.is_dir() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Writes one document to `dir/<doc_id>.txt`.
pub fn write_document(doc: &AlignedTriple, dir: &Path) -> Result<PathBuf, CorpusError> {
    let path = dir.join(format!("{}.{DOC_EXTENSION}", doc.doc_id));
    fs::write(&path, doc.to_icdar_string()).map_err(io_err(&path))?;
    Ok(path)
}

/// Writes `corpus` as `root/<language>/<doc_id>.txt` and returns the
/// language directory.
pub fn write_corpus(corpus: &Corpus, root: &Path) -> Result<PathBuf, CorpusError> {
    let dir = root.join(&corpus.language);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    for doc in corpus.documents() {
        write_document(doc, &dir)?;
    }
    Ok(dir)
}

/// Reads plain-text files of `dir` as `(doc_id, text)` in name order.
pub fn load_plain_texts(dir: &Path) -> Result<Vec<(String, String)>, CorpusError> {
    document_files(dir)?
        .into_iter()
        .map(|path| {
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            Ok((doc_id(&path), text))
        })
        .collect()
}
