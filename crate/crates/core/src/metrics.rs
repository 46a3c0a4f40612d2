//! Character error rate, relative improvement and descriptive statistics.
//!
//! CER values are percentages (0–100+), as are improvements.

use alloc::string::String;
use alloc::vec::Vec;
use thiserror::Error;

/// Returned by [`summarize`] on an empty list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("cannot summarize an empty list")]
pub struct EmptyInput;

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_chars(&a, &b)
}

/// [`levenshtein`] on pre-split slices; one row of memory.
pub fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut row: Vec<usize> = (0..=short.len()).collect();
    for (j, &lc) in long.iter().enumerate() {
        let mut diag = row[0];
        row[0] = j + 1;
        for (i, &sc) in short.iter().enumerate() {
            let up = row[i + 1];
            row[i + 1] = if sc == lc {
                diag
            } else {
                1 + diag.min(up).min(row[i])
            };
            diag = up;
        }
    }
    row[short.len()]
}

/// `100 · levenshtein(hypothesis, reference) / max(1, |reference|)`.
pub fn cer(hypothesis: &str, reference: &str) -> f64 {
    let ref_len = reference.chars().count().max(1);
    100.0 * levenshtein(hypothesis, reference) as f64 / ref_len as f64
}

/// Relative CER reduction in percent.
///
/// Zero when both rates are zero. When the input was already perfect and the
/// output is not, the improvement is undefined and `f64::NEG_INFINITY` is
/// returned; aggregation drops such values (see [`ImprovementAggregate`]).
pub fn improvement(cer_before: f64, cer_after: f64) -> f64 {
    if cer_before > 0.0 {
        100.0 * (cer_before - cer_after) / cer_before
    } else if cer_after > 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    }
}

/// Per-document before/after error rates.
#[derive(Debug, Clone, PartialEq)]
pub struct CerReport {
    /// Document identifier.
    pub doc_id: String,
    /// CER of the uncorrected OCR text.
    pub cer_before: f64,
    /// CER of the corrected text.
    pub cer_after: f64,
    /// [`improvement`] of the two.
    pub improvement_pct: f64,
}

impl CerReport {
    /// Measures one document.
    pub fn measure(doc_id: impl Into<String>, ocr: &str, corrected: &str, reference: &str) -> Self {
        let cer_before = cer(ocr, reference);
        let cer_after = cer(corrected, reference);
        Self {
            doc_id: doc_id.into(),
            cer_before,
            cer_after,
            improvement_pct: improvement(cer_before, cer_after),
        }
    }

    /// False for the undefined-worse sentinel.
    pub fn is_defined(&self) -> bool {
        self.improvement_pct.is_finite()
    }
}

/// Descriptive statistics in the layout of a pandas `describe()` row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    /// Number of values.
    pub count: usize,
    /// Arithmetic mean.
    pub mean: f64,
    /// Sample standard deviation (n−1); 0 for a single value.
    pub std: f64,
    /// Minimum.
    pub min: f64,
    /// First quartile.
    pub p25: f64,
    /// Median.
    pub p50: f64,
    /// Third quartile.
    pub p75: f64,
    /// Maximum.
    pub max: f64,
}

/// Summary statistics; quartiles interpolate linearly between closest ranks.
pub fn summarize(values: &[f64]) -> Result<SummaryStats, EmptyInput> {
    if values.is_empty() {
        return Err(EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        let ss: f64 = sorted.iter().map(|v| (v - mean) * (v - mean)).sum();
        libm::sqrt(ss / (n - 1) as f64)
    } else {
        0.0
    };
    let quantile = |q: f64| {
        let pos = q * (n - 1) as f64;
        let lo = libm::floor(pos) as usize;
        let hi = (lo + 1).min(n - 1);
        let frac = pos - lo as f64;
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    };
    Ok(SummaryStats {
        count: n,
        mean,
        std,
        min: sorted[0],
        p25: quantile(0.25),
        p50: quantile(0.5),
        p75: quantile(0.75),
        max: sorted[n - 1],
    })
}

/// Corpus-level improvement computed both ways.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementAggregate {
    /// Mean of per-document improvements over defined documents (headline).
    pub mean_of_ratios: Option<f64>,
    /// Improvement of the mean CERs over all documents.
    pub ratio_of_means: f64,
    /// Mean CER before correction.
    pub mean_cer_before: f64,
    /// Mean CER after correction.
    pub mean_cer_after: f64,
    /// Documents dropped from `mean_of_ratios` as undefined-worse.
    pub excluded: usize,
}

/// Aggregates per-document reports. Returns `None` for an empty slice.
pub fn aggregate(reports: &[CerReport]) -> Option<ImprovementAggregate> {
    if reports.is_empty() {
        return None;
    }
    let n = reports.len() as f64;
    let mean_cer_before = reports.iter().map(|r| r.cer_before).sum::<f64>() / n;
    let mean_cer_after = reports.iter().map(|r| r.cer_after).sum::<f64>() / n;
    let defined: Vec<f64> = reports
        .iter()
        .filter(|r| r.is_defined())
        .map(|r| r.improvement_pct)
        .collect();
    let mean_of_ratios = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    Some(ImprovementAggregate {
        mean_of_ratios,
        ratio_of_means: improvement(mean_cer_before, mean_cer_after),
        mean_cer_before,
        mean_cer_after,
        excluded: reports.len() - defined.len(),
    })
}
