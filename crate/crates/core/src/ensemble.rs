//! Merging overlapping window corrections by position-weighted voting.
//!
//! Every corrected window is aligned back to its own source span. Each
//! source position then receives one vote per covering window (a character,
//! or ε when the window deleted it). A window also votes on the gap before
//! each of its positions, and on the gap after the last document position
//! when it reaches the end, with the inserted string or ∅ for no insertion.
//! A vote cast at window position `p` weighs `f(p, w)`; a gap takes the
//! weight of the position to its left, or `f(1, w)` at the window start. The
//! merged text takes the heaviest candidate of every gap and position, left
//! to right.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::align::{align_to_source, EditEvent};
use crate::corrector::{CorrectedWindow, CorrectorError, DecodingConfig, SequenceCorrector};
use crate::window::{concat_disjoint, WindowKind, WindowSpec};

/// Position weighting of a window's votes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WeightingKind {
    /// `exp(-(1 - p/m)^2)`
    Bell,
    /// `1 - |m - p| / (2m)`
    Triangle,
    /// `1`
    Uniform,
}

impl WeightingKind {
    /// All three kinds, in report order.
    pub const ALL: [WeightingKind; 3] = [
        WeightingKind::Bell,
        WeightingKind::Triangle,
        WeightingKind::Uniform,
    ];

    /// Name used in CLI flags and reports.
    pub fn as_str(self) -> &'static str {
        match self {
            WeightingKind::Bell => "bell",
            WeightingKind::Triangle => "triangle",
            WeightingKind::Uniform => "uniform",
        }
    }
}

impl fmt::Display for WeightingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WeightingKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bell" => Ok(WeightingKind::Bell),
            "triangle" => Ok(WeightingKind::Triangle),
            "uniform" => Ok(WeightingKind::Uniform),
            other => Err(alloc::format!("unknown weighting {other:?}")),
        }
    }
}

/// Errors from weighting and merging.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnsembleError {
    /// `p` outside `1..=w`.
    #[error("position {p} is outside a window of length {w}")]
    Domain {
        /// Offending position.
        p: usize,
        /// Window length.
        w: usize,
    },
    /// A document position no window covers.
    #[error("no window covers document position {0}")]
    NoCoverage(usize),
    /// A window reaches past the end of the document.
    #[error("window {start}..{end} exceeds document length {len}")]
    WindowOutOfRange {
        /// Window start.
        start: usize,
        /// Window end.
        end: usize,
        /// Document length.
        len: usize,
    },
    /// The corrector failed on one window.
    #[error("correcting the window at offset {offset} failed: {source}")]
    Window {
        /// Start of the failing window.
        offset: usize,
        /// Underlying failure.
        source: CorrectorError,
    },
}

/// Vote weight of 1-indexed position `p` in a window of length `w`, with
/// `m = ceil(w / 2)`.
pub fn weight(kind: WeightingKind, p: usize, w: usize) -> Result<f64, EnsembleError> {
    if p == 0 || p > w {
        return Err(EnsembleError::Domain { p, w });
    }
    Ok(weight_unchecked(kind, p, w))
}

#[inline]
fn weight_unchecked(kind: WeightingKind, p: usize, w: usize) -> f64 {
    let m = w.div_ceil(2) as f64;
    let p = p as f64;
    match kind {
        WeightingKind::Bell => {
            let d = 1.0 - p / m;
            libm::exp(-(d * d))
        }
        WeightingKind::Triangle => 1.0 - libm::fabs(m - p) / (2.0 * m),
        WeightingKind::Uniform => 1.0,
    }
}

/// One candidate in a tally.
#[derive(Debug, Clone, PartialEq)]
pub struct Vote<T> {
    /// The candidate symbol or string.
    pub candidate: T,
    /// Accumulated weight.
    pub weight: f64,
    /// Distance from the tallied position to the nearest centre of a window
    /// that voted for this candidate, in half characters.
    pub nearest_centre: u64,
}

/// Weighted candidates for one position or gap.
#[derive(Debug, Clone, PartialEq)]
pub struct Tally<T> {
    /// Candidates in first-vote order.
    pub votes: Vec<Vote<T>>,
}

impl<T> Default for Tally<T> {
    fn default() -> Self {
        Self { votes: Vec::new() }
    }
}

impl<T: Ord + Clone> Tally<T> {
    fn add(&mut self, candidate: T, weight: f64, centre_distance: u64) {
        match self.votes.iter_mut().find(|v| v.candidate == candidate) {
            Some(v) => {
                v.weight += weight;
                v.nearest_centre = v.nearest_centre.min(centre_distance);
            }
            None => self.votes.push(Vote {
                candidate,
                weight,
                nearest_centre: centre_distance,
            }),
        }
    }

    /// Sum of all candidate weights.
    pub fn total(&self) -> f64 {
        self.votes.iter().map(|v| v.weight).sum()
    }

    /// Heaviest candidate; ties go to the candidate backed by the window
    /// centred nearest, then to the smallest candidate.
    pub fn winner(&self) -> Option<&T> {
        self.votes
            .iter()
            .max_by(|a, b| {
                a.weight
                    .total_cmp(&b.weight)
                    .then_with(|| b.nearest_centre.cmp(&a.nearest_centre))
                    .then_with(|| b.candidate.cmp(&a.candidate))
            })
            .map(|v| &v.candidate)
    }
}

/// Vote tallies for a whole document.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteTable {
    /// One tally per source position; `None` is ε (delete the position).
    pub positions: Vec<Tally<Option<char>>>,
    /// One tally per gap; gap `g` precedes position `g`, gap `len` follows
    /// the last one. The empty string is ∅ (insert nothing).
    pub slots: Vec<Tally<String>>,
}

impl VoteTable {
    /// Tallies `corrections` with weights from `weight_fn(p, w)`.
    ///
    /// Windows are accumulated in ascending start order whatever order they
    /// are supplied in, so the floating-point sums are reproducible.
    pub fn build<F>(
        corrections: &[CorrectedWindow],
        weight_fn: F,
        doc_len: usize,
    ) -> Result<Self, EnsembleError>
    where
        F: Fn(usize, usize) -> f64,
    {
        let mut order: Vec<&CorrectedWindow> = corrections.iter().collect();
        order.sort_by(|a, b| {
            (a.slice.start, a.slice.length, &a.output)
                .cmp(&(b.slice.start, b.slice.length, &b.output))
                .then_with(|| a.score.total_cmp(&b.score))
        });

        let mut table = VoteTable {
            positions: (0..doc_len).map(|_| Tally::default()).collect(),
            slots: (0..=doc_len).map(|_| Tally::default()).collect(),
        };
        for window in order {
            let (start, len) = (window.slice.start, window.slice.length);
            if start + len > doc_len {
                return Err(EnsembleError::WindowOutOfRange {
                    start,
                    end: start + len,
                    len: doc_len,
                });
            }
            if len == 0 {
                continue;
            }
            // Centre of the window, doubled so it is an integer.
            let centre = (2 * start + len - 1) as i64;
            let distance = |doubled_pos: i64| (doubled_pos - centre).unsigned_abs();

            let mut inserted: BTreeMap<usize, String> = BTreeMap::new();
            for event in align_to_source(&window.slice.text, &window.output).events {
                let (p, symbol) = match event {
                    EditEvent::Keep { src_pos, ch } | EditEvent::Subst { src_pos, ch } => (src_pos, Some(ch)),
                    EditEvent::Delete { src_pos } => (src_pos, None),
                    EditEvent::Insert { after, ch } => {
                        inserted.entry(after).or_default().push(ch);
                        continue;
                    }
                };
                let global = start + p - 1;
                table.positions[global].add(symbol, weight_fn(p, len), distance(2 * global as i64));
            }
            // A window speaks for the slot before each of its positions, and
            // for the trailing slot only when it ends the document.
            let last_slot = if start + len == doc_len { len } else { len - 1 };
            for after in 0..=last_slot {
                let global = start + after;
                let text = inserted.remove(&after).unwrap_or_default();
                table.slots[global].add(
                    text,
                    weight_fn(after.max(1), len),
                    distance(2 * global as i64 - 1),
                );
            }
        }
        Ok(table)
    }

    /// Builds the merged text, failing on an uncovered position.
    pub fn resolve(&self) -> Result<String, EnsembleError> {
        let mut out = String::new();
        for (g, slot) in self.slots.iter().enumerate() {
            if let Some(text) = slot.winner() {
                out.push_str(text);
            }
            if let Some(position) = self.positions.get(g) {
                match position.winner() {
                    None => return Err(EnsembleError::NoCoverage(g)),
                    Some(Some(c)) => out.push(*c),
                    Some(None) => {}
                }
            }
        }
        Ok(out)
    }
}

/// Merges overlapping corrections of a document of `doc_len` characters.
pub fn vote_merge(
    corrections: &[CorrectedWindow],
    weighting: WeightingKind,
    doc_len: usize,
) -> Result<String, EnsembleError> {
    vote_merge_with(corrections, |p, w| weight_unchecked(weighting, p, w), doc_len)
}

/// [`vote_merge`] with an arbitrary weight function of `(p, w)`.
pub fn vote_merge_with<F>(
    corrections: &[CorrectedWindow],
    weight_fn: F,
    doc_len: usize,
) -> Result<String, EnsembleError>
where
    F: Fn(usize, usize) -> f64,
{
    VoteTable::build(corrections, weight_fn, doc_len)?.resolve()
}

/// Combines corrected windows the way `kind` prescribes: concatenation for
/// disjoint windows, weighted vote for n-grams.
pub fn merge_windows(
    kind: WindowKind,
    mut corrections: Vec<CorrectedWindow>,
    weighting: WeightingKind,
    doc_len: usize,
) -> Result<String, EnsembleError> {
    match kind {
        WindowKind::Disjoint => {
            corrections.sort_by_key(|c| c.slice.start);
            let mut covered = 0;
            for c in &corrections {
                if c.slice.start != covered {
                    return Err(EnsembleError::NoCoverage(covered.min(c.slice.start)));
                }
                covered = c.slice.end();
            }
            if covered != doc_len {
                return Err(EnsembleError::NoCoverage(covered));
            }
            let parts: Vec<String> = corrections.into_iter().map(|c| c.output).collect();
            Ok(concat_disjoint(&parts))
        }
        WindowKind::Ngrams => vote_merge(&corrections, weighting, doc_len),
    }
}

/// Split, correct every window, merge.
pub fn correct_document<C: SequenceCorrector + ?Sized>(
    text: &str,
    corrector: &C,
    spec: WindowSpec,
    cfg: &DecodingConfig,
    weighting: WeightingKind,
) -> Result<String, EnsembleError> {
    let doc_len = text.chars().count();
    let corrections = spec
        .split(text)
        .iter()
        .map(|slice| {
            corrector
                .correct(slice, cfg)
                .map_err(|source| EnsembleError::Window {
                    offset: slice.start,
                    source,
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    merge_windows(spec.kind, corrections, weighting, doc_len)
}
