//! Window correction on a bounded worker pool.
//!
//! Windows are corrected in parallel but collected in window order, and the
//! merge accumulates votes in ascending start order, so the merged text is
//! identical for any number of workers.

use ocr_ensemble_core::corrector::{CorrectedWindow, DecodingConfig, SequenceCorrector};
use ocr_ensemble_core::ensemble::{merge_windows, EnsembleError};
use ocr_ensemble_core::{WeightingKind, WindowSlice, WindowSpec};
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuildError, ThreadPoolBuilder};

/// A pool of exactly `workers` threads (at least one).
pub fn worker_pool(workers: usize) -> Result<ThreadPool, ThreadPoolBuildError> {
    ThreadPoolBuilder::new().num_threads(workers.max(1)).build()
}

/// Corrects every slice; on failure reports the first failing window in
/// document order.
pub fn correct_windows<C>(
    slices: &[WindowSlice],
    corrector: &C,
    cfg: &DecodingConfig,
) -> Result<Vec<CorrectedWindow>, EnsembleError>
where
    C: SequenceCorrector + Sync + ?Sized,
{
    slices
        .par_iter()
        .map(|slice| {
            corrector
                .correct(slice, cfg)
                .map_err(|source| EnsembleError::Window {
                    offset: slice.start,
                    source,
                })
        })
        .collect()
}

/// Parallel counterpart of `ocr_ensemble_core::correct_document`, running
/// on the current rayon pool.
pub fn correct_document<C>(
    text: &str,
    corrector: &C,
    spec: WindowSpec,
    cfg: &DecodingConfig,
    weighting: WeightingKind,
) -> Result<String, EnsembleError>
where
    C: SequenceCorrector + Sync + ?Sized,
{
    let corrections = correct_windows(&spec.split(text), corrector, cfg)?;
    merge_windows(spec.kind, corrections, weighting, text.chars().count())
}
