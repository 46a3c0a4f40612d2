//! Aligned OCR corpora: parsing the three-line document format, removing
//! alignment padding, cutting fixed-length training pairs and splitting
//! train/dev sets.
//!
//! All offsets and lengths count Unicode scalar values.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Alignment padding character.
pub const PADDING: char = '@';
/// Marks ground-truth characters the annotators could not read.
pub const UNCERTAIN: char = '#';

/// Line tag carrying the raw OCR output.
pub const TAG_OCR_INPUT: &str = "OCR_toInput";
/// Line tag carrying the padded OCR output.
pub const TAG_OCR_ALIGNED: &str = "OCR_aligned";
/// Line tag carrying the padded ground truth.
pub const TAG_GS_ALIGNED: &str = "GS_aligned";

/// Errors raised while reading aligned documents or building corpora.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextDataError {
    /// A required tagged line is absent.
    #[error("missing tagged line [{0}]")]
    MissingTag(&'static str),
    /// The two aligned payloads differ in length.
    #[error("aligned lines differ in length: OCR_aligned has {ocr} chars, GS_aligned has {gs}")]
    LengthMismatch {
        /// Length of `OCR_aligned` in chars.
        ocr: usize,
        /// Length of `GS_aligned` in chars.
        gs: usize,
    },
    /// Two documents in a corpus share an identifier.
    #[error("duplicate document id {0:?}")]
    DuplicateDocId(String),
    /// More dev documents were requested than the corpus holds.
    #[error("cannot draw {requested} dev documents from a corpus of {available}")]
    TooFewDocuments {
        /// Requested dev size.
        requested: usize,
        /// Documents in the corpus.
        available: usize,
    },
}

/// One corpus document: raw OCR text, padded OCR and padded ground truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedTriple {
    /// Opaque identifier, usually the file stem.
    pub doc_id: String,
    /// OCR output as produced.
    pub ocr_raw: String,
    /// OCR output with `@` padding where the ground truth has extra characters.
    pub ocr_aligned: String,
    /// Ground truth, same length as `ocr_aligned`, padded with `@` and possibly holding `#`.
    pub gs_aligned: String,
}

impl AlignedTriple {
    /// Builds a triple, checking that the aligned payloads have equal length.
    pub fn new(
        doc_id: impl Into<String>,
        ocr_raw: impl Into<String>,
        ocr_aligned: impl Into<String>,
        gs_aligned: impl Into<String>,
    ) -> Result<Self, TextDataError> {
        let triple = Self {
            doc_id: doc_id.into(),
            ocr_raw: ocr_raw.into(),
            ocr_aligned: ocr_aligned.into(),
            gs_aligned: gs_aligned.into(),
        };
        let ocr = triple.ocr_aligned.chars().count();
        let gs = triple.gs_aligned.chars().count();
        if ocr != gs {
            return Err(TextDataError::LengthMismatch { ocr, gs });
        }
        Ok(triple)
    }

    /// Ground truth with padding removed. `#` is kept as a literal character.
    pub fn ground_truth(&self) -> String {
        strip_padding(&self.gs_aligned)
    }

    /// Aligned length in chars.
    pub fn aligned_len(&self) -> usize {
        self.gs_aligned.chars().count()
    }

    /// True when the padded OCR line, once unpadded, agrees with the raw
    /// line up to whitespace normalization.
    pub fn is_consistent(&self) -> bool {
        normalize_whitespace(&strip_padding(&self.ocr_aligned)) == normalize_whitespace(&self.ocr_raw)
    }

    /// Serializes back into the three-line tagged format.
    pub fn to_icdar_string(&self) -> String {
        let mut out =
            String::with_capacity(self.ocr_raw.len() + self.ocr_aligned.len() + self.gs_aligned.len() + 48);
        // Writing into a String cannot fail.
        let _ = writeln!(out, "[{TAG_OCR_INPUT}] {}", self.ocr_raw);
        let _ = writeln!(out, "[{TAG_OCR_ALIGNED}] {}", self.ocr_aligned);
        let _ = writeln!(out, "[{TAG_GS_ALIGNED}] {}", self.gs_aligned);
        out
    }
}

fn normalize_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// A window-sized (noisy, correct) segment pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    /// Noisy segment, padding removed.
    pub source: String,
    /// Correct segment, padding removed.
    pub target: String,
    /// Document the pair was cut from.
    pub doc_id: String,
    /// Start offset of the pair in the aligned lines.
    pub start: usize,
}

impl TrainingPair {
    /// Pair without provenance, mostly for tests and hand-built training sets.
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            target: target.into(),
            doc_id: String::new(),
            start: 0,
        }
    }
}

/// An ordered set of documents in one language.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    /// Free-form label, usually the language code.
    pub language: String,
    documents: Vec<AlignedTriple>,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate document ids.
    pub fn new(language: impl Into<String>, documents: Vec<AlignedTriple>) -> Result<Self, TextDataError> {
        let mut ids: Vec<&str> = documents.iter().map(|d| d.doc_id.as_str()).collect();
        ids.sort_unstable();
        if let Some(pair) = ids.windows(2).find(|pair| pair[0] == pair[1]) {
            return Err(TextDataError::DuplicateDocId(pair[0].to_string()));
        }
        Ok(Self {
            language: language.into(),
            documents,
        })
    }

    /// Documents in corpus order.
    pub fn documents(&self) -> &[AlignedTriple] {
        &self.documents
    }

    /// Number of documents.
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    /// True when the corpus holds no documents.
    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Consumes the corpus and returns its documents.
    pub fn into_documents(self) -> Vec<AlignedTriple> {
        self.documents
    }
}

/// Removes every padding character, preserving everything else in order.
pub fn strip_padding(aligned: &str) -> String {
    aligned.chars().filter(|&c| c != PADDING).collect()
}

/// Parses one document in the three-line tagged format.
///
/// Tags are matched in order, tolerating whitespace inside the brackets.
/// After the closing bracket one separator (space or tab) is dropped and
/// the rest of the line is the payload, verbatim.
pub fn parse_icdar_document(
    raw_file_text: &str,
    doc_id: impl Into<String>,
) -> Result<AlignedTriple, TextDataError> {
    let text = raw_file_text.strip_prefix('\u{feff}').unwrap_or(raw_file_text);
    let mut lines = text.lines();
    let mut payloads: [&str; 3] = [""; 3];
    for (slot, tag) in [TAG_OCR_INPUT, TAG_OCR_ALIGNED, TAG_GS_ALIGNED]
        .into_iter()
        .enumerate()
    {
        payloads[slot] = lines
            .by_ref()
            .find_map(|line| match_tag(line, tag))
            .ok_or(TextDataError::MissingTag(tag))?;
    }
    let [ocr_raw, ocr_aligned, gs_aligned] = payloads;
    AlignedTriple::new(doc_id, ocr_raw, ocr_aligned, gs_aligned)
}

fn match_tag<'a>(line: &'a str, tag: &str) -> Option<&'a str> {
    let rest = line.strip_prefix('[')?;
    let close = rest.find(']')?;
    if rest[..close].trim() != tag {
        return None;
    }
    let after = &rest[close + 1..];
    Some(
        after
            .strip_prefix(' ')
            .or_else(|| after.strip_prefix('\t'))
            .unwrap_or(after),
    )
}

/// Cuts `(source, target)` pairs of aligned length `w_train` every `stride`
/// characters.
///
/// Windows whose target contains the uncertainty marker are dropped, and a
/// document tail shorter than `w_train` produces no pair.
pub fn extract_training_pairs(triple: &AlignedTriple, w_train: usize, stride: usize) -> Vec<TrainingPair> {
    assert!(w_train >= 1 && stride >= 1, "w_train and stride must be positive");
    let ocr: Vec<char> = triple.ocr_aligned.chars().collect();
    let gs: Vec<char> = triple.gs_aligned.chars().collect();
    let len = gs.len().min(ocr.len());
    if len < w_train {
        return Vec::new();
    }
    (0..=len - w_train)
        .step_by(stride)
        .filter(|&s| !gs[s..s + w_train].contains(&UNCERTAIN))
        .map(|s| TrainingPair {
            source: ocr[s..s + w_train].iter().filter(|&&c| c != PADDING).collect(),
            target: gs[s..s + w_train].iter().filter(|&&c| c != PADDING).collect(),
            doc_id: triple.doc_id.clone(),
            start: s,
        })
        .collect()
}

/// Draws `n_dev` documents uniformly without replacement (seeded) as the dev
/// set; the rest is the training set. Both keep corpus order.
pub fn split_train_dev(corpus: &Corpus, n_dev: usize, seed: u64) -> Result<(Corpus, Corpus), TextDataError> {
    let n = corpus.len();
    if n_dev > n {
        return Err(TextDataError::TooFewDocuments {
            requested: n_dev,
            available: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_dev = alloc::vec![false; n];
    for i in index::sample(&mut rng, n, n_dev) {
        is_dev[i] = true;
    }
    let (mut train, mut dev) = (Vec::new(), Vec::new());
    for (doc, dev_flag) in corpus.documents.iter().zip(is_dev) {
        if dev_flag {
            dev.push(doc.clone());
        } else {
            train.push(doc.clone());
        }
    }
    let language = corpus.language.clone();
    Ok((
        Corpus {
            language: language.clone(),
            documents: train,
        },
        Corpus {
            language,
            documents: dev,
        },
    ))
}
