//! Grid-search experiment driver.

use std::fmt;
use std::time::{Duration, Instant};

use ocr_ensemble_core::corrector::{DecodingConfig, DecodingMethod, SequenceCorrector};
use ocr_ensemble_core::ensemble::merge_windows;
use ocr_ensemble_core::metrics::{aggregate, CerReport, ImprovementAggregate};
use ocr_ensemble_core::{
    summarize, AlignedTriple, Corpus, SummaryStats, WeightingKind, WindowKind, WindowSpec,
};
use rayon::prelude::*;
use thiserror::Error;

use crate::parallel::{correct_windows, worker_pool};

/// Axes and decoding parameters of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Window strategies to evaluate.
    pub kinds: Vec<WindowKind>,
    /// Window sizes to evaluate.
    pub sizes: Vec<usize>,
    /// Decoding methods to evaluate.
    pub decodings: Vec<DecodingMethod>,
    /// Weightings to evaluate (n-gram cells only).
    pub weightings: Vec<WeightingKind>,
    /// Beam width for beam cells.
    pub beam_width: usize,
    /// Output length bound as a factor of the window length.
    pub max_len_factor: f64,
    /// Longest run of recovered deletions.
    pub max_deletions: usize,
    /// Seed recorded with the run.
    pub seed: u64,
    /// Worker threads.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    /// The full grid: both strategies, sizes 10 to 100 in steps of 10, both
    /// decodings, all weightings.
    fn default() -> Self {
        let defaults = DecodingConfig::default();
        Self {
            kinds: vec![WindowKind::Disjoint, WindowKind::Ngrams],
            sizes: (1..=10).map(|i| i * 10).collect(),
            decodings: vec![DecodingMethod::Greedy, DecodingMethod::Beam],
            weightings: WeightingKind::ALL.to_vec(),
            beam_width: defaults.beam_width,
            max_len_factor: defaults.max_len_factor,
            max_deletions: defaults.max_deletions,
            seed: 0,
            workers: 1,
        }
    }
}

/// One point of the grid. Disjoint cells carry no weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridCell {
    /// Window strategy.
    pub kind: WindowKind,
    /// Window size.
    pub size: usize,
    /// Decoding method.
    pub decoding: DecodingMethod,
    /// Vote weighting, `None` for disjoint windows.
    pub weighting: Option<WeightingKind>,
}

impl GridCell {
    /// Weighting label, `none` for disjoint cells.
    pub fn weighting_label(&self) -> &'static str {
        self.weighting.map_or("none", WeightingKind::as_str)
    }
}

impl fmt::Display for GridCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-{}-{}-{}",
            self.kind,
            self.size,
            self.decoding,
            self.weighting_label()
        )
    }
}

/// Configuration problems found before any work starts.
#[derive(Debug, Error)]
pub enum GridError {
    /// An axis or parameter is unusable.
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    /// The worker pool could not start.
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl ExperimentConfig {
    /// Rejects empty axes, zero sizes and zero workers.
    pub fn validate(&self) -> Result<(), GridError> {
        let bad = |m: &str| Err(GridError::InvalidConfig(m.to_string()));
        if self.kinds.is_empty() {
            return bad("no window kinds selected");
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return bad("window sizes must be a non-empty list of positive integers");
        }
        if self.decodings.is_empty() {
            return bad("no decoding methods selected");
        }
        if self.kinds.contains(&WindowKind::Ngrams) && self.weightings.is_empty() {
            return bad("no weightings selected for n-gram windows");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        self.decoding_config(DecodingMethod::Beam)
            .validate()
            .map_err(|e| GridError::InvalidConfig(e.to_string()))
    }

    /// Decoding settings for one method.
    pub fn decoding_config(&self, method: DecodingMethod) -> DecodingConfig {
        DecodingConfig {
            method,
            beam_width: self.beam_width,
            max_len_factor: self.max_len_factor,
            max_deletions: self.max_deletions,
        }
    }

    /// Every cell in evaluation order, duplicates removed. Disjoint windows
    /// collapse the weighting axis.
    pub fn cells(&self) -> Vec<GridCell> {
        let mut cells = Vec::new();
        for &kind in &self.kinds {
            for &size in &self.sizes {
                for &decoding in &self.decodings {
                    let weightings: Vec<Option<WeightingKind>> = match kind {
                        WindowKind::Disjoint => vec![None],
                        WindowKind::Ngrams => self.weightings.iter().copied().map(Some).collect(),
                    };
                    for weighting in weightings {
                        cells.push(GridCell {
                            kind,
                            size,
                            decoding,
                            weighting,
                        });
                    }
                }
            }
        }
        cells.sort();
        cells.dedup();
        cells
    }
}

/// A document that could not be corrected in some cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentFailure {
    /// Document id.
    pub doc_id: String,
    /// Diagnostic, naming the failing window offset.
    pub message: String,
}

/// Outcome of one cell over one corpus.
#[derive(Debug, Clone)]
pub struct GridResult {
    /// Corpus label.
    pub language: String,
    /// The evaluated cell.
    pub cell: GridCell,
    /// Per-document metrics in corpus order.
    pub reports: Vec<CerReport>,
    /// Corrected text of each successful document, in corpus order.
    pub corrected: Vec<(String, String)>,
    /// Documents that failed.
    pub failures: Vec<DocumentFailure>,
    /// Statistics of the defined per-document improvements.
    pub summary: Option<SummaryStats>,
    /// Both aggregation modes of the improvement.
    pub aggregate: Option<ImprovementAggregate>,
    /// Wall-clock time spent correcting (shared decoding time is counted
    /// in every cell that reuses it).
    pub duration: Duration,
}

fn build_result(
    language: &str,
    cell: GridCell,
    docs: &[AlignedTriple],
    outputs: Vec<Result<String, String>>,
    duration: Duration,
) -> GridResult {
    let mut reports = Vec::new();
    let mut corrected = Vec::new();
    let mut failures = Vec::new();
    for (doc, output) in docs.iter().zip(outputs) {
        match output {
            Ok(text) => {
                reports.push(CerReport::measure(
                    &doc.doc_id,
                    &doc.ocr_raw,
                    &text,
                    &doc.ground_truth(),
                ));
                corrected.push((doc.doc_id.clone(), text));
            }
            Err(message) => failures.push(DocumentFailure {
                doc_id: doc.doc_id.clone(),
                message,
            }),
        }
    }
    let defined: Vec<f64> = reports
        .iter()
        .filter(|r| r.is_defined())
        .map(|r| r.improvement_pct)
        .collect();
    GridResult {
        language: language.to_string(),
        cell,
        summary: summarize(&defined).ok(),
        aggregate: aggregate(&reports),
        reports,
        corrected,
        failures,
        duration,
    }
}

/// Evaluates every cell of `config` on every document of `corpus` with one
/// shared corrector.
pub fn run_grid<C>(
    corpus: &Corpus,
    corrector: &C,
    config: &ExperimentConfig,
) -> Result<Vec<GridResult>, GridError>
where
    C: SequenceCorrector + Sync + ?Sized,
{
    run_grid_with(corpus, |_| corrector, config)
}

/// [`run_grid`] with a corrector chosen per document.
///
/// N-gram cells that differ only in weighting share one decoding pass.
/// Results are in [`ExperimentConfig::cells`] order and do not depend on
/// the number of workers.
pub fn run_grid_with<'c, C, F>(
    corpus: &Corpus,
    corrector_for: F,
    config: &ExperimentConfig,
) -> Result<Vec<GridResult>, GridError>
where
    C: SequenceCorrector + Sync + ?Sized + 'c,
    F: Fn(&AlignedTriple) -> &'c C + Sync,
{
    config.validate()?;
    let pool = worker_pool(config.workers)?;
    let docs = corpus.documents();
    let cells = config.cells();
    let mut results = Vec::with_capacity(cells.len());

    let mut i = 0;
    while i < cells.len() {
        let head = cells[i];
        let group: Vec<GridCell> = cells[i..]
            .iter()
            .take_while(|c| (c.kind, c.size, c.decoding) == (head.kind, head.size, head.decoding))
            .copied()
            .collect();
        i += group.len();

        let spec = WindowSpec::new(head.kind, head.size).expect("validated size");
        let cfg = config.decoding_config(head.decoding);
        let started = Instant::now();
        let decoded: Vec<_> = pool.install(|| {
            docs.par_iter()
                .map(|doc| {
                    let slices = spec.split(&doc.ocr_raw);
                    correct_windows(&slices, corrector_for(doc), &cfg)
                })
                .collect()
        });
        let decode_time = started.elapsed();

        for cell in group {
            let started = Instant::now();
            let weighting = cell.weighting.unwrap_or(WeightingKind::Uniform);
            let outputs: Vec<Result<String, String>> = pool.install(|| {
                docs.par_iter()
                    .zip(&decoded)
                    .map(|(doc, windows)| {
                        let windows = windows.as_ref().map_err(|e| e.to_string())?;
                        let len = doc.ocr_raw.chars().count();
                        merge_windows(cell.kind, windows.clone(), weighting, len).map_err(|e| e.to_string())
                    })
                    .collect()
            });
            let duration = decode_time + started.elapsed();
            results.push(build_result(&corpus.language, cell, docs, outputs, duration));
        }
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ocr_ensemble_core::corrector::{IdentityCorrector, OracleCorrector};

    fn corpus() -> Corpus {
        let docs = vec![
            AlignedTriple::new("a", "tbe cat", "tbe cat", "the cat").unwrap(),
            AlignedTriple::new("b", "dgo", "d@go", "dog@").unwrap(),
        ];
        Corpus::new("xx", docs).unwrap()
    }

    #[test]
    fn full_grid_has_eighty_cells() {
        let cells = ExperimentConfig::default().cells();
        assert_eq!(cells.len(), 80);
        assert_eq!(
            cells.iter().filter(|c| c.kind == WindowKind::Disjoint).count(),
            20
        );
        assert!(cells
            .iter()
            .all(|c| (c.kind == WindowKind::Disjoint) == c.weighting.is_none()));
    }

    #[test]
    fn cell_count_is_product_of_axes() {
        let config = ExperimentConfig {
            kinds: vec![WindowKind::Ngrams, WindowKind::Disjoint],
            sizes: vec![5, 7, 9],
            decodings: vec![DecodingMethod::Beam],
            weightings: vec![WeightingKind::Bell, WeightingKind::Uniform],
            ..ExperimentConfig::default()
        };
        assert_eq!(config.cells().len(), 3 * 2 + 3);
    }

    #[test]
    fn single_cell_config() {
        let config = ExperimentConfig {
            kinds: vec![WindowKind::Ngrams],
            sizes: vec![3],
            decodings: vec![DecodingMethod::Greedy],
            weightings: vec![WeightingKind::Triangle],
            ..ExperimentConfig::default()
        };
        let results = run_grid(&corpus(), &IdentityCorrector, &config).unwrap();
        assert_eq!(results.len(), 1);
        let r = &results[0];
        assert_eq!(r.reports.len(), 2);
        assert!(r.reports.iter().all(|rep| rep.improvement_pct == 0.0));
        assert_eq!(r.corrected[0].1, "tbe cat");
    }

    #[test]
    fn oracle_grid_reaches_ground_truth() {
        let corpus = corpus();
        let oracles: Vec<OracleCorrector> = corpus
            .documents()
            .iter()
            .map(|d| OracleCorrector::new(&d.ocr_raw, &d.ground_truth()))
            .collect();
        let config = ExperimentConfig {
            sizes: vec![2, 3],
            workers: 2,
            ..ExperimentConfig::default()
        };
        let results = run_grid_with(
            &corpus,
            |doc| {
                let i = corpus
                    .documents()
                    .iter()
                    .position(|d| d.doc_id == doc.doc_id)
                    .unwrap();
                &oracles[i]
            },
            &config,
        )
        .unwrap();
        for r in results {
            assert!(r.failures.is_empty());
            assert!(r.reports.iter().all(|rep| rep.cer_after == 0.0), "{}", r.cell);
        }
    }

    #[test]
    fn failures_are_recorded_per_document() {
        // An oracle for a shorter document fails on the longer one only.
        let oracle = OracleCorrector::new("dgo", "dog");
        let config = ExperimentConfig {
            kinds: vec![WindowKind::Disjoint],
            sizes: vec![10],
            decodings: vec![DecodingMethod::Greedy],
            ..ExperimentConfig::default()
        };
        let results = run_grid(&corpus(), &oracle, &config).unwrap();
        assert_eq!(results[0].failures.len(), 1);
        assert_eq!(results[0].failures[0].doc_id, "a");
        assert!(results[0].failures[0].message.contains("offset 0"));
        assert_eq!(results[0].reports.len(), 1);
    }

    #[test]
    fn empty_axes_rejected() {
        let config = ExperimentConfig {
            decodings: vec![],
            ..ExperimentConfig::default()
        };
        assert!(matches!(config.validate(), Err(GridError::InvalidConfig(_))));
        let config = ExperimentConfig {
            workers: 0,
            ..ExperimentConfig::default()
        };
        assert!(config.validate().is_err());
    }
}
