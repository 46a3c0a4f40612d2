//! Post-OCR correction of arbitrarily long documents with a windowed
//! character corrector.
//!
//! A document is split into windows ([`window`]), every window is corrected
//! independently by a [`corrector::SequenceCorrector`], and the partial
//! corrections are merged back ([`ensemble`]): plain concatenation for
//! disjoint windows, a position-weighted vote for overlapping n-grams.
//!
//! The crate is `no_std` (it needs `alloc`). File IO, corpus directories,
//! parallel scheduling and the experiment harness live in the `ocr-ensemble`
//! crate.

#![no_std]
#![deny(missing_docs)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod align;
pub mod corrector;
pub mod ensemble;
pub mod metrics;
pub mod textdata;
pub mod window;

pub use align::{align_to_source, EditAlignment, EditEvent};
pub use corrector::{
    CorrectedWindow, CorrectorError, DecodingConfig, DecodingMethod, IdentityCorrector, NoisyChannelModel,
    OracleCorrector, SequenceCorrector,
};
pub use ensemble::{correct_document, vote_merge, weight, WeightingKind};
pub use metrics::{cer, improvement, levenshtein, summarize, SummaryStats};
pub use textdata::{AlignedTriple, Corpus, TrainingPair};
pub use window::{WindowKind, WindowSlice, WindowSpec};
