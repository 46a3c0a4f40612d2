//! Splitting documents into character windows and stitching disjoint
//! corrections back together.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

/// How a document is cut into windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WindowKind {
    /// Consecutive non-overlapping windows.
    Disjoint,
    /// Every window of length `w` at stride 1.
    Ngrams,
}

impl WindowKind {
    /// Name used in CLI flags and reports.
    pub fn as_str(self) -> &'static str {
        match self {
            WindowKind::Disjoint => "disjoint",
            WindowKind::Ngrams => "ngrams",
        }
    }
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WindowKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "disjoint" => Ok(WindowKind::Disjoint),
            "ngrams" | "n-grams" => Ok(WindowKind::Ngrams),
            other => Err(alloc::format!("unknown window type {other:?}")),
        }
    }
}

/// Window kind plus window length in characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WindowSpec {
    /// Splitting scheme.
    pub kind: WindowKind,
    /// Window length `w`, at least 1.
    pub size: usize,
}

impl WindowSpec {
    /// Returns `None` when `size` is zero.
    pub fn new(kind: WindowKind, size: usize) -> Option<Self> {
        (size >= 1).then_some(Self { kind, size })
    }

    /// Splits `text` according to this spec.
    pub fn split(&self, text: &str) -> Vec<WindowSlice> {
        match self.kind {
            WindowKind::Disjoint => split_disjoint(text, self.size),
            WindowKind::Ngrams => split_ngrams(text, self.size),
        }
    }
}

/// A window of a document together with its global offset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WindowSlice {
    /// Window contents.
    pub text: String,
    /// Offset of the first character in the document, in chars.
    pub start: usize,
    /// Length in chars.
    pub length: usize,
}

impl WindowSlice {
    /// Builds a slice, computing its length from `text`.
    pub fn new(text: impl Into<String>, start: usize) -> Self {
        let text = text.into();
        let length = text.chars().count();
        Self { text, start, length }
    }

    /// One past the last covered document position.
    pub fn end(&self) -> usize {
        self.start + self.length
    }
}

/// Windows at `0, w, 2w, …`; the last one may be shorter.
pub fn split_disjoint(text: &str, w: usize) -> Vec<WindowSlice> {
    assert!(w >= 1, "window size must be positive");
    let chars: Vec<char> = text.chars().collect();
    chars
        .chunks(w)
        .enumerate()
        .map(|(i, chunk)| WindowSlice {
            text: chunk.iter().collect(),
            start: i * w,
            length: chunk.len(),
        })
        .collect()
}

/// All length-`w` windows at stride 1. A non-empty text shorter than `w`
/// yields one undersized window.
pub fn split_ngrams(text: &str, w: usize) -> Vec<WindowSlice> {
    assert!(w >= 1, "window size must be positive");
    let chars: Vec<char> = text.chars().collect();
    if chars.is_empty() {
        return Vec::new();
    }
    if chars.len() < w {
        return alloc::vec![WindowSlice {
            text: text.into(),
            start: 0,
            length: chars.len(),
        }];
    }
    chars
        .windows(w)
        .enumerate()
        .map(|(start, win)| WindowSlice {
            text: win.iter().collect(),
            start,
            length: w,
        })
        .collect()
}

/// Concatenates corrected disjoint windows in order.
pub fn concat_disjoint<S: AsRef<str>>(corrections: &[S]) -> String {
    corrections.iter().map(AsRef::as_ref).collect()
}
