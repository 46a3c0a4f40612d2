//! File formats, corpus directories, synthetic noise, the grid-search
//! experiment driver and report writers around `ocr-ensemble-core`.

pub mod config;
pub mod corpus;
pub mod grid;
pub mod model_file;
pub mod parallel;
pub mod report;
pub mod synth;

pub use ocr_ensemble_core as core;
