//! Per-window sequence correctors.
//!
//! [`SequenceCorrector`] is the pluggable interface the windowing and
//! merging code drives. [`NoisyChannelModel`] is the trainable reference
//! backend; [`IdentityCorrector`] and [`OracleCorrector`] are fixtures for
//! testing the surrounding pipeline.

mod alphabet;
mod channel;
mod confusion;
pub mod format;
mod lm;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

pub use alphabet::Alphabet;
pub use channel::{ModelParams, NoisyChannelModel};
pub use confusion::{ConfusionCounts, ConfusionModel};
pub use lm::{CharLm, Context, MAX_ORDER};

use crate::align::{align_to_source, EditEvent};
use crate::window::WindowSlice;

/// Errors from training, decoding and (de)serializing correctors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrectorError {
    /// No training data.
    #[error("no training data")]
    EmptyTraining,
    /// Smoothing constant must be positive and finite.
    #[error("smoothing constant must be positive, got {0}")]
    InvalidSmoothing(f64),
    /// Language model order out of range.
    #[error("language model order must be in 1..={MAX_ORDER}, got {0}")]
    InvalidOrder(usize),
    /// Too many distinct characters for the packed context.
    #[error("alphabet of {0} characters is too large")]
    AlphabetTooLarge(usize),
    /// Confusion model and language model disagree on the alphabet.
    #[error("confusion model and language model use different alphabets")]
    AlphabetMismatch,
    /// Stored counts do not fit the alphabet.
    #[error("count tables do not match the alphabet size")]
    CountShape,
    /// Decoding configuration rejected.
    #[error("invalid decoding configuration: {0}")]
    InvalidConfig(&'static str),
    /// A window extends past the document the corrector was built for.
    #[error("window {start}..{end} is outside the document of length {len}")]
    WindowOutOfRange {
        /// Window start.
        start: usize,
        /// Window end.
        end: usize,
        /// Document length.
        len: usize,
    },
    /// Model file written by a newer format version.
    #[error("model file version {found} is newer than supported version {supported}")]
    VersionMismatch {
        /// Version in the file.
        found: u32,
        /// Highest version this build reads.
        supported: u32,
    },
    /// Model file could not be parsed.
    #[error("corrupt model file: {0}")]
    CorruptFile(String),
}

/// Search strategy for producing the corrected string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DecodingMethod {
    /// Keep only the best hypothesis.
    Greedy,
    /// Keep the best `beam_width` hypotheses.
    Beam,
}

impl DecodingMethod {
    /// Name used in CLI flags and reports.
    pub fn as_str(self) -> &'static str {
        match self {
            DecodingMethod::Greedy => "greedy",
            DecodingMethod::Beam => "beam",
        }
    }
}

impl fmt::Display for DecodingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DecodingMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(DecodingMethod::Greedy),
            "beam" => Ok(DecodingMethod::Beam),
            other => Err(alloc::format!("unknown decoding method {other:?}")),
        }
    }
}

/// Decoding knobs shared by all correctors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodingConfig {
    /// Greedy or beam.
    pub method: DecodingMethod,
    /// Beam width; ignored by greedy decoding.
    pub beam_width: usize,
    /// Output may be at most `ceil(max_len_factor * input_len)` characters.
    pub max_len_factor: f64,
    /// Recovered deletions allowed in a row before each observed character.
    pub max_deletions: usize,
}

impl Default for DecodingConfig {
    fn default() -> Self {
        Self {
            method: DecodingMethod::Greedy,
            beam_width: 5,
            max_len_factor: 1.5,
            max_deletions: 2,
        }
    }
}

impl DecodingConfig {
    /// Greedy decoding with default bounds.
    pub fn greedy() -> Self {
        Self::default()
    }

    /// Beam decoding with the given width.
    pub fn beam(beam_width: usize) -> Self {
        Self {
            method: DecodingMethod::Beam,
            beam_width,
            ..Self::default()
        }
    }

    /// Hypotheses kept per step.
    pub fn effective_width(&self) -> usize {
        match self.method {
            DecodingMethod::Greedy => 1,
            DecodingMethod::Beam => self.beam_width,
        }
    }

    /// Longest output allowed for an input of `input_len` characters.
    pub fn max_output_len(&self, input_len: usize) -> usize {
        libm::ceil(self.max_len_factor * input_len as f64) as usize
    }

    /// Checks the invariants.
    pub fn validate(&self) -> Result<(), CorrectorError> {
        if self.beam_width == 0 {
            return Err(CorrectorError::InvalidConfig("beam width must be at least 1"));
        }
        if !(self.max_len_factor > 0.0 && self.max_len_factor.is_finite()) {
            return Err(CorrectorError::InvalidConfig("max_len_factor must be positive"));
        }
        Ok(())
    }
}

/// A corrector's output for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedWindow {
    /// The window that was corrected.
    pub slice: WindowSlice,
    /// Corrected text.
    pub output: String,
    /// Log-probability of the chosen hypothesis (0 for fixtures).
    pub score: f64,
}

/// Corrects one window at a time. Implementations must be deterministic:
/// the same slice and configuration always give the same result.
pub trait SequenceCorrector {
    /// Corrects `slice`.
    fn correct(&self, slice: &WindowSlice, cfg: &DecodingConfig) -> Result<CorrectedWindow, CorrectorError>;
}

impl<T: SequenceCorrector + ?Sized> SequenceCorrector for &T {
    fn correct(&self, slice: &WindowSlice, cfg: &DecodingConfig) -> Result<CorrectedWindow, CorrectorError> {
        (**self).correct(slice, cfg)
    }
}

/// Returns every window unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityCorrector;

/// Shorthand for [`IdentityCorrector`].
pub fn identity_corrector() -> IdentityCorrector {
    IdentityCorrector
}

impl SequenceCorrector for IdentityCorrector {
    fn correct(&self, slice: &WindowSlice, _cfg: &DecodingConfig) -> Result<CorrectedWindow, CorrectorError> {
        Ok(CorrectedWindow {
            slice: slice.clone(),
            output: slice.text.clone(),
            score: 0.0,
        })
    }
}

/// Knows the ground truth of one noisy document and answers every window
/// with the ground-truth span aligned to it.
///
/// The document is aligned to its ground truth once. A window `[s, e)`
/// returns the aligned rewrite of its positions plus the insertions that
/// precede position `s` and those between its positions; insertions after
/// the last character are included only for the window ending the document,
/// so disjoint windows concatenate to the exact ground truth.
#[derive(Debug, Clone)]
pub struct OracleCorrector {
    /// Rewrite of each noisy position (empty when the position is deleted).
    tokens: Vec<Option<char>>,
    /// Inserted text at each slot; slot `g` precedes position `g`.
    slots: Vec<String>,
}

impl OracleCorrector {
    /// Aligns `noisy` to `ground_truth`.
    pub fn new(noisy: &str, ground_truth: &str) -> Self {
        let len = noisy.chars().count();
        let mut tokens = alloc::vec![None; len];
        let mut slots = alloc::vec![String::new(); len + 1];
        for event in align_to_source(noisy, ground_truth).events {
            match event {
                EditEvent::Keep { src_pos, ch } | EditEvent::Subst { src_pos, ch } => {
                    tokens[src_pos - 1] = Some(ch)
                }
                EditEvent::Delete { .. } => {}
                EditEvent::Insert { after, ch } => slots[after].push(ch),
            }
        }
        Self { tokens, slots }
    }

    /// Length of the noisy document in chars.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// True for an empty document.
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Shorthand for [`OracleCorrector::new`].
pub fn oracle_corrector(noisy: &str, ground_truth: &str) -> OracleCorrector {
    OracleCorrector::new(noisy, ground_truth)
}

impl SequenceCorrector for OracleCorrector {
    fn correct(&self, slice: &WindowSlice, _cfg: &DecodingConfig) -> Result<CorrectedWindow, CorrectorError> {
        let (start, end, len) = (slice.start, slice.end(), self.len());
        if end > len {
            return Err(CorrectorError::WindowOutOfRange { start, end, len });
        }
        let mut output = String::new();
        for pos in start..end {
            output.push_str(&self.slots[pos]);
            output.extend(self.tokens[pos]);
        }
        if end == len {
            output.push_str(&self.slots[len]);
        }
        Ok(CorrectedWindow {
            slice: slice.clone(),
            output,
            score: 0.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::window::{concat_disjoint, split_disjoint};

    fn whole(text: &str) -> WindowSlice {
        WindowSlice::new(text, 0)
    }

    #[test]
    fn identity_returns_input() {
        let cfg = DecodingConfig::default();
        for s in ["abc", "", "ünïcödé"] {
            let out = IdentityCorrector.correct(&whole(s), &cfg).unwrap();
            assert_eq!(out.output, s);
            assert_eq!(out.score, 0.0);
        }
    }

    #[test]
    fn oracle_on_clean_document_is_identity() {
        let oracle = oracle_corrector("abcdef", "abcdef");
        let out = oracle
            .correct(&WindowSlice::new("cde", 2), &DecodingConfig::default())
            .unwrap();
        assert_eq!(out.output, "cde");
    }

    #[test]
    fn oracle_full_window_is_ground_truth() {
        let oracle = oracle_corrector("tbe qnick brwn fox", "the quick brown fox!");
        let out = oracle
            .correct(&whole("tbe qnick brwn fox"), &DecodingConfig::default())
            .unwrap();
        assert_eq!(out.output, "the quick brown fox!");
    }

    #[test]
    fn oracle_hand_alignment() {
        // noisy  : a b x d e f g h i j
        // truth  : a b c d e f g h i j  (x -> c)
        // plus an insertion before 'f' and a deletion of 'i'.
        let noisy = "abxdefghij";
        let truth = "abcdeZfghj";
        let oracle = oracle_corrector(noisy, truth);
        let cfg = DecodingConfig::default();
        let win = |s: usize, e: usize| {
            let text: String = noisy.chars().skip(s).take(e - s).collect();
            oracle.correct(&WindowSlice::new(text, s), &cfg).unwrap().output
        };
        assert_eq!(win(0, 3), "abc");
        assert_eq!(win(3, 5), "de");
        assert_eq!(win(5, 7), "Zfg");
        assert_eq!(win(7, 10), "hj");
        let parts: Vec<String> = split_disjoint(noisy, 4)
            .iter()
            .map(|s| oracle.correct(s, &cfg).unwrap().output)
            .collect();
        assert_eq!(concat_disjoint(&parts), truth);
    }

    #[test]
    fn oracle_trailing_insertion_goes_to_last_window() {
        let oracle = oracle_corrector("abc", "abcd");
        let cfg = DecodingConfig::default();
        assert_eq!(
            oracle.correct(&WindowSlice::new("ab", 0), &cfg).unwrap().output,
            "ab"
        );
        assert_eq!(
            oracle.correct(&WindowSlice::new("bc", 1), &cfg).unwrap().output,
            "bcd"
        );
    }

    #[test]
    fn oracle_rejects_foreign_windows() {
        let oracle = oracle_corrector("abc", "abc");
        assert!(matches!(
            oracle.correct(&WindowSlice::new("cde", 2), &DecodingConfig::default()),
            Err(CorrectorError::WindowOutOfRange {
                start: 2,
                end: 5,
                len: 3
            })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(DecodingConfig::default().validate().is_ok());
        assert!(DecodingConfig::beam(0).validate().is_err());
        let cfg = DecodingConfig {
            max_len_factor: 0.0,
            ..DecodingConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert_eq!(DecodingConfig::greedy().effective_width(), 1);
        assert_eq!(DecodingConfig::beam(7).effective_width(), 7);
        assert_eq!(DecodingConfig::default().max_output_len(5), 8);
        assert_eq!("beam".parse::<DecodingMethod>(), Ok(DecodingMethod::Beam));
    }
}
