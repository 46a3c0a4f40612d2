//! CSV and markdown reports of grid results.
//!
//! Files written by [`emit_report`]:
//!
//! * `per_document.csv`: `doc_id,kind,size,decoding,weighting,cer_before,cer_after,improvement`
//! * `summary.csv`: one row per corpus and cell with the statistics of the
//!   defined per-document improvements plus both aggregation modes
//! * `grouped_kind.csv`, `grouped_decoding.csv`, `grouped_weighting.csv`,
//!   `grouped_size.csv`: improvement statistics pooled over one axis
//! * `best.md`: the best cell of every corpus
//! * `timing.md`: wall-clock time per cell (only when timings are known)
//!
//! Numbers are written in Rust's shortest round-trip form, so every CSV is
//! a pure function of the per-document results. Undefined improvements
//! (clean OCR made worse) are written as `undefined-worse`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ocr_ensemble_core::metrics::{aggregate, CerReport, ImprovementAggregate};
use ocr_ensemble_core::{summarize, SummaryStats, WeightingKind, WindowKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridCell, GridResult};

/// Text written for an undefined improvement.
pub const UNDEFINED_WORSE: &str = "undefined-worse";

/// Report failures, always naming the file.
#[derive(Debug, Error)]
pub enum ReportError {
    /// Filesystem failure.
    #[error("{path}: {source}")]
    Io {
        /// Offending path.
        path: PathBuf,
        /// Underlying error.
        source: io::Error,
    },
    /// CSV encoding or decoding failure.
    #[error("{path}: {source}")]
    Csv {
        /// Offending path.
        path: PathBuf,
        /// Underlying error.
        source: csv::Error,
    },
    /// A CSV field holds an unexpected value.
    #[error("{path}: row {row}: {message}")]
    Field {
        /// Offending path.
        path: PathBuf,
        /// 1-based data row.
        row: usize,
        /// Description.
        message: String,
    },
    /// Nothing to report.
    #[error("no results to report")]
    Empty,
}

/// Per-document results of one cell on one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRecords {
    /// Corpus label.
    pub language: String,
    /// The cell.
    pub cell: GridCell,
    /// Per-document metrics.
    pub reports: Vec<CerReport>,
}

impl From<&GridResult> for CellRecords {
    fn from(r: &GridResult) -> Self {
        Self {
            language: r.language.clone(),
            cell: r.cell,
            reports: r.reports.clone(),
        }
    }
}

impl CellRecords {
    fn improvements(&self) -> impl Iterator<Item = f64> + '_ {
        self.reports
            .iter()
            .filter(|r| r.is_defined())
            .map(|r| r.improvement_pct)
    }

    /// Statistics of the defined improvements.
    pub fn summary(&self) -> Option<SummaryStats> {
        summarize(&self.improvements().collect::<Vec<_>>()).ok()
    }

    /// Both aggregation modes.
    pub fn aggregate(&self) -> Option<ImprovementAggregate> {
        aggregate(&self.reports)
    }
}

/// One row of `per_document.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerDocumentRow {
    /// Document id.
    pub doc_id: String,
    /// Window kind.
    pub kind: String,
    /// Window size.
    pub size: usize,
    /// Decoding method.
    pub decoding: String,
    /// Weighting, `none` for disjoint windows.
    pub weighting: String,
    /// CER of the OCR text.
    pub cer_before: f64,
    /// CER of the corrected text.
    pub cer_after: f64,
    /// Improvement, or `undefined-worse`.
    pub improvement: String,
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    /// Corpus label.
    pub language: String,
    /// Window kind.
    pub kind: String,
    /// Window size.
    pub size: usize,
    /// Decoding method.
    pub decoding: String,
    /// Weighting, `none` for disjoint windows.
    pub weighting: String,
    /// Defined improvements.
    pub count: usize,
    /// Mean improvement (mean of per-document ratios).
    pub mean: Option<f64>,
    /// Sample standard deviation.
    pub std: Option<f64>,
    /// Minimum.
    pub min: Option<f64>,
    /// First quartile.
    pub p25: Option<f64>,
    /// Median.
    pub p50: Option<f64>,
    /// Third quartile.
    pub p75: Option<f64>,
    /// Maximum.
    pub max: Option<f64>,
    /// Documents excluded as undefined-worse.
    pub excluded: usize,
    /// Mean CER before correction.
    pub mean_cer_before: Option<f64>,
    /// Mean CER after correction.
    pub mean_cer_after: Option<f64>,
    /// Improvement of the mean CERs.
    pub ratio_of_means: Option<f64>,
}

/// One row of a grouped summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    /// Value of the grouping axis.
    pub group: String,
    /// Defined improvements pooled in the group.
    pub count: usize,
    /// Mean.
    pub mean: f64,
    /// Sample standard deviation.
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

fn improvement_text(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        UNDEFINED_WORSE.to_string()
    }
}

/// Rows of `per_document.csv` for `records`, in the given order.
pub fn per_document_rows(records: &[CellRecords]) -> Vec<PerDocumentRow> {
    records
        .iter()
        .flat_map(|rec| {
            rec.reports.iter().map(move |r| PerDocumentRow {
                doc_id: r.doc_id.clone(),
                kind: rec.cell.kind.to_string(),
                size: rec.cell.size,
                decoding: rec.cell.decoding.to_string(),
                weighting: rec.cell.weighting_label().to_string(),
                cer_before: r.cer_before,
                cer_after: r.cer_after,
                improvement: improvement_text(r.improvement_pct),
            })
        })
        .collect()
}

/// Rows of `summary.csv`.
pub fn summary_rows(records: &[CellRecords]) -> Vec<SummaryRow> {
    records
        .iter()
        .map(|rec| {
            let s = rec.summary();
            let a = rec.aggregate();
            SummaryRow {
                language: rec.language.clone(),
                kind: rec.cell.kind.to_string(),
                size: rec.cell.size,
                decoding: rec.cell.decoding.to_string(),
                weighting: rec.cell.weighting_label().to_string(),
                count: s.map_or(0, |s| s.count),
                mean: s.map(|s| s.mean),
                std: s.map(|s| s.std),
                min: s.map(|s| s.min),
                p25: s.map(|s| s.p25),
                p50: s.map(|s| s.p50),
                p75: s.map(|s| s.p75),
                max: s.map(|s| s.max),
                excluded: a.as_ref().map_or(0, |a| a.excluded),
                mean_cer_before: a.as_ref().map(|a| a.mean_cer_before),
                mean_cer_after: a.as_ref().map(|a| a.mean_cer_after),
                ratio_of_means: a.as_ref().map(|a| a.ratio_of_means).filter(|x| x.is_finite()),
            }
        })
        .collect()
}

/// Axis used to pool improvements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    /// Window kind.
    Kind,
    /// Decoding method.
    Decoding,
    /// Weighting (n-gram cells only; disjoint cells have no vote).
    Weighting,
    /// Window size.
    Size,
}

impl GroupBy {
    /// All axes.
    pub const ALL: [GroupBy; 4] = [
        GroupBy::Kind,
        GroupBy::Decoding,
        GroupBy::Weighting,
        GroupBy::Size,
    ];

    /// File-name stem.
    pub fn as_str(self) -> &'static str {
        match self {
            GroupBy::Kind => "kind",
            GroupBy::Decoding => "decoding",
            GroupBy::Weighting => "weighting",
            GroupBy::Size => "size",
        }
    }
}

/// Improvements of every document in every cell, pooled by `axis`; groups
/// are ordered by the axis' natural order.
pub fn grouped_rows(records: &[CellRecords], axis: GroupBy) -> Vec<GroupRow> {
    #[derive(PartialEq, Eq, PartialOrd, Ord)]
    enum Key {
        Kind(WindowKind),
        Decoding(ocr_ensemble_core::corrector::DecodingMethod),
        Weighting(WeightingKind),
        Size(usize),
    }
    let mut groups: BTreeMap<Key, (String, Vec<f64>)> = BTreeMap::new();
    for rec in records {
        let key = match axis {
            GroupBy::Kind => Key::Kind(rec.cell.kind),
            GroupBy::Decoding => Key::Decoding(rec.cell.decoding),
            GroupBy::Weighting => match rec.cell.weighting {
                Some(w) => Key::Weighting(w),
                None => continue,
            },
            GroupBy::Size => Key::Size(rec.cell.size),
        };
        let label = match &key {
            Key::Kind(k) => k.to_string(),
            Key::Decoding(d) => d.to_string(),
            Key::Weighting(w) => w.to_string(),
            Key::Size(s) => s.to_string(),
        };
        groups
            .entry(key)
            .or_insert_with(|| (label, Vec::new()))
            .1
            .extend(rec.improvements());
    }
    groups
        .into_values()
        .filter_map(|(group, values)| {
            let s = summarize(&values).ok()?;
            Some(GroupRow {
                group,
                count: s.count,
                mean: s.mean,
                std: s.std,
                min: s.min,
                p25: s.p25,
                p50: s.p50,
                p75: s.p75,
                max: s.max,
            })
        })
        .collect()
}

/// The best cell of each corpus: highest mean improvement; ties go to the
/// smaller window, then disjoint before n-grams, then greedy before beam,
/// then weighting order.
pub fn best_cells(records: &[CellRecords]) -> Vec<(&CellRecords, SummaryStats)> {
    let mut best: BTreeMap<&str, (&CellRecords, SummaryStats)> = BTreeMap::new();
    for rec in records {
        let Some(stats) = rec.summary() else { continue };
        let better = match best.get(rec.language.as_str()) {
            None => true,
            Some((cur, cur_stats)) => stats
                .mean
                .total_cmp(&cur_stats.mean)
                .then_with(|| cur.cell.cmp(&rec.cell))
                .is_gt(),
        };
        if better {
            best.insert(&rec.language, (rec, stats));
        }
    }
    best.into_values().collect()
}

/// Markdown table of [`best_cells`].
pub fn best_table(records: &[CellRecords]) -> String {
    let mut out = String::from(
        "| Language | Window | Size | Decoding | Weighting | Mean CER before | Mean CER after | % Improvement (mean of ratios) | % Improvement (ratio of means) | Excluded |\n\
         |---|---|---:|---|---|---:|---:|---:|---:|---:|\n",
    );
    for (rec, stats) in best_cells(records) {
        let a = rec.aggregate().expect("a summarized cell has reports");
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {:.2} | {:.2} | {:.2} | {:.2} | {} |",
            rec.language,
            rec.cell.kind,
            rec.cell.size,
            rec.cell.decoding,
            rec.cell.weighting_label(),
            a.mean_cer_before,
            a.mean_cer_after,
            stats.mean,
            a.ratio_of_means,
            a.excluded
        );
    }
    out
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ReportError> {
    let csv_err = |source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        writer.serialize(row).map_err(csv_err)?;
    }
    writer.flush().map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), ReportError> {
    fs::write(path, text).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes every report file for `records` into `out_dir`.
pub fn write_reports(records: &[CellRecords], out_dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    fs::create_dir_all(out_dir).map_err(|source| ReportError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    let path = out_dir.join("per_document.csv");
    write_csv(&path, &per_document_rows(records))?;
    written.push(path);
    let path = out_dir.join("summary.csv");
    write_csv(&path, &summary_rows(records))?;
    written.push(path);
    for axis in GroupBy::ALL {
        let path = out_dir.join(format!("grouped_{}.csv", axis.as_str()));
        write_csv(&path, &grouped_rows(records, axis))?;
        written.push(path);
    }
    let path = out_dir.join("best.md");
    write_text(&path, &best_table(records))?;
    written.push(path);
    Ok(written)
}

/// Writes the reports of a grid run, plus `timing.md` and `failures.csv`.
pub fn emit_report(results: &[GridResult], out_dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let records: Vec<CellRecords> = results.iter().map(CellRecords::from).collect();
    let mut written = write_reports(&records, out_dir)?;

    let mut timing = String::from("| Language | Cell | Documents | Seconds |\n|---|---|---:|---:|\n");
    for r in results {
        let _ = writeln!(
            timing,
            "| {} | {} | {} | {:.3} |",
            r.language,
            r.cell,
            r.reports.len(),
            r.duration.as_secs_f64()
        );
    }
    let path = out_dir.join("timing.md");
    write_text(&path, &timing)?;
    written.push(path);

    #[derive(Serialize)]
    struct FailureRow<'a> {
        language: &'a str,
        cell: String,
        doc_id: &'a str,
        message: &'a str,
    }
    let failures: Vec<FailureRow> = results
        .iter()
        .flat_map(|r| {
            r.failures.iter().map(move |f| FailureRow {
                language: &r.language,
                cell: r.cell.to_string(),
                doc_id: &f.doc_id,
                message: &f.message,
            })
        })
        .collect();
    let path = out_dir.join("failures.csv");
    if failures.is_empty() {
        write_text(&path, "language,cell,doc_id,message\n")?;
    } else {
        write_csv(&path, &failures)?;
    }
    written.push(path);
    Ok(written)
}

fn parse_field<T: FromStr>(path: &Path, row: usize, name: &str, value: &str) -> Result<T, ReportError> {
    value.parse().map_err(|_| ReportError::Field {
        path: path.to_path_buf(),
        row,
        message: format!("bad {name} {value:?}"),
    })
}

/// Reads a `per_document.csv` back into cell records labelled `language`,
/// keeping the first-appearance order of cells.
pub fn read_per_document(path: &Path, language: &str) -> Result<Vec<CellRecords>, ReportError> {
    let csv_err = |source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut records: Vec<CellRecords> = Vec::new();
    for (i, row) in reader.deserialize::<PerDocumentRow>().enumerate() {
        let row = row.map_err(csv_err)?;
        let n = i + 1;
        let kind: WindowKind = parse_field(path, n, "kind", &row.kind)?;
        let weighting = match (kind, row.weighting.as_str()) {
            (WindowKind::Disjoint, "none") => None,
            (WindowKind::Ngrams, w) => Some(parse_field(path, n, "weighting", w)?),
            (_, other) => {
                return Err(ReportError::Field {
                    path: path.to_path_buf(),
                    row: n,
                    message: format!("disjoint rows take weighting none, got {other:?}"),
                })
            }
        };
        let cell = GridCell {
            kind,
            size: row.size,
            decoding: parse_field(path, n, "decoding", &row.decoding)?,
            weighting,
        };
        let improvement_pct = if row.improvement == UNDEFINED_WORSE {
            f64::NEG_INFINITY
        } else {
            parse_field(path, n, "improvement", &row.improvement)?
        };
        let report = CerReport {
            doc_id: row.doc_id,
            cer_before: row.cer_before,
            cer_after: row.cer_after,
            improvement_pct,
        };
        match records.iter_mut().find(|r| r.cell == cell) {
            Some(rec) => rec.reports.push(report),
            None => records.push(CellRecords {
                language: language.to_string(),
                cell,
                reports: vec![report],
            }),
        }
    }
    Ok(records)
}
