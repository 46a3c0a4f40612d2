//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ocr_ensemble::corpus::{load_corpus, write_corpus};
use ocr_ensemble::grid::{run_grid, run_grid_with, ExperimentConfig};
use ocr_ensemble::model_file::load_model;
use ocr_ensemble::synth::{default_bias_table, generate_clean_texts, synth_corpus, NoiseChannelSpec};
use ocr_ensemble_core::corrector::{DecodingConfig, DecodingMethod, OracleCorrector};
use ocr_ensemble_core::textdata::{extract_training_pairs, parse_icdar_document};
use ocr_ensemble_core::window::split_ngrams;
use ocr_ensemble_core::{
    improvement, levenshtein, vote_merge, weight, AlignedTriple, Corpus, CorrectedWindow, WeightingKind,
    WindowKind,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WEIGHT_TOLERANCE: f64 = 1e-9;
const TABLE_TOLERANCE: f64 = 0.1;
const SCORE_TOLERANCE: f64 = 1e-9;
const VOTING_INSTANCES: usize = 1200;
const EXPERIMENT_SEED: u64 = 7;
const EXPERIMENT_DOCS: usize = 50;
const EXPERIMENT_CHARS: usize = 1000;
const EXPERIMENT_DEV: usize = 10;
const ROUND_TRIP_DOCS: usize = 100;

type Pairs = Vec<(String, String, usize)>;
type Check = fn(&mut Fixture) -> Result<String, String>;

struct Criterion {
    number: u32,
    name: &'static str,
    budget: Option<Duration>,
    check: Check,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            number: 1,
            name: "weighting formulae",
            budget: Some(Duration::from_secs(1)),
            check: weighting_formulae,
        },
        Criterion {
            number: 2,
            name: "improvement arithmetic",
            budget: Some(Duration::from_secs(1)),
            check: improvement_arithmetic,
        },
        Criterion {
            number: 3,
            name: "voting oracle",
            budget: Some(Duration::from_secs(30)),
            check: voting_oracle,
        },
        Criterion {
            number: 4,
            name: "beam oracle",
            budget: Some(Duration::from_secs(60)),
            check: beam_oracle,
        },
        Criterion {
            number: 5,
            name: "desk-scale experiment",
            budget: Some(Duration::from_secs(600)),
            check: desk_experiment,
        },
        Criterion {
            number: 6,
            name: "grid determinism",
            budget: Some(Duration::from_secs(900)),
            check: grid_determinism,
        },
        Criterion {
            number: 7,
            name: "ingestion round trip",
            budget: None,
            check: ingestion_round_trip,
        },
    ];
    let mut fixture = Fixture::new();
    let mut failed = 0;
    for c in &criteria {
        let started = Instant::now();
        let outcome = (c.check)(&mut fixture);
        let elapsed = started.elapsed();
        let outcome = match (outcome, c.budget) {
            (Ok(detail), Some(budget)) if elapsed > budget => {
                Err(format!("{detail}; took {elapsed:.1?}, budget {budget:?}"))
            }
            (other, _) => other,
        };
        match outcome {
            Ok(detail) => println!(
                "criterion {} ({}): PASS [{:.2?}] {detail}",
                c.number, c.name, elapsed
            ),
            Err(why) => {
                failed += 1;
                println!(
                    "criterion {} ({}): FAIL [{:.2?}] {why}",
                    c.number, c.name, elapsed
                );
            }
        }
    }
    println!(
        "acceptance: {} passed, {} failed",
        criteria.len() - failed,
        failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

/// Synthetic corpus, trained model and held-out list shared by the
/// experiment criteria. Built on first use.
struct Fixture {
    dir: tempfile::TempDir,
    ready: bool,
}

impl Fixture {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().expect("temporary directory"),
            ready: false,
        }
    }

    fn corpus_dir(&self) -> PathBuf {
        self.dir.path().join("corpora").join("synth")
    }

    fn model_path(&self) -> PathBuf {
        self.dir.path().join("model.pocrm")
    }

    fn dev_list(&self) -> PathBuf {
        self.dir.path().join("dev.txt")
    }

    fn prepare(&mut self) -> Result<(), String> {
        if self.ready {
            return Ok(());
        }
        let seed = EXPERIMENT_SEED.to_string();
        cli(&[
            "synth",
            "--out",
            path_arg(&self.dir.path().join("corpora")),
            "--docs",
            &EXPERIMENT_DOCS.to_string(),
            "--chars",
            &EXPERIMENT_CHARS.to_string(),
            "--sub",
            "0.10",
            "--del",
            "0.02",
            "--ins",
            "0.02",
            "--seed",
            &seed,
        ])?;
        cli(&[
            "train",
            "--corpus",
            path_arg(&self.corpus_dir()),
            "--out",
            path_arg(&self.model_path()),
            "--dev-list",
            path_arg(&self.dev_list()),
            "--dev",
            &EXPERIMENT_DEV.to_string(),
            "--train-window",
            "100",
            "--stride",
            "100",
            "--seed",
            &seed,
        ])?;
        self.ready = true;
        Ok(())
    }

    fn held_out(&self) -> Result<Corpus, String> {
        let loaded = load_corpus(&self.corpus_dir()).map_err(|e| e.to_string())?;
        ensure(loaded.errors.is_empty(), || {
            format!("corpus errors: {:?}", loaded.errors)
        })?;
        let ids = fs::read_to_string(self.dev_list()).map_err(|e| e.to_string())?;
        let ids: Vec<&str> = ids.lines().filter(|l| !l.is_empty()).collect();
        let docs: Vec<AlignedTriple> = loaded
            .corpus
            .into_documents()
            .into_iter()
            .filter(|d| ids.contains(&d.doc_id.as_str()))
            .collect();
        ensure(docs.len() == EXPERIMENT_DEV, || {
            format!("{} held-out documents", docs.len())
        })?;
        Corpus::new("synth", docs).map_err(|e| e.to_string())
    }
}

fn path_arg(p: &Path) -> &str {
    p.to_str().expect("utf-8 temporary path")
}

fn cli(args: &[&str]) -> Result<(), String> {
    let output = Command::new(env!("CARGO_BIN_EXE_ocr-ensemble"))
        .args(args)
        .output()
        .map_err(|e| format!("cannot run the CLI: {e}"))?;
    ensure(output.status.success(), || {
        format!(
            "`{}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&output.stderr)
        )
    })
}

fn direct_weight(kind: WeightingKind, p: usize, w: usize) -> f64 {
    let m = w.div_ceil(2) as f64;
    let p = p as f64;
    match kind {
        WeightingKind::Uniform => 1.0,
        WeightingKind::Triangle => 1.0 - (m - p).abs() / (2.0 * m),
        WeightingKind::Bell => (-(1.0 - p / m).powi(2)).exp(),
    }
}

fn weighting_formulae(_: &mut Fixture) -> Result<String, String> {
    let mut checked = 0;
    for w in 1..=101usize {
        let m = w.div_ceil(2);
        for kind in WeightingKind::ALL {
            for p in 1..=w {
                let got = weight(kind, p, w).map_err(|e| e.to_string())?;
                let want = direct_weight(kind, p, w);
                ensure((got - want).abs() <= WEIGHT_TOLERANCE, || {
                    format!("{kind} p={p} w={w}: {got} vs {want}")
                })?;
                if w % 2 == 1 {
                    let mirror = weight(kind, w + 1 - p, w).map_err(|e| e.to_string())?;
                    ensure((got - mirror).abs() <= WEIGHT_TOLERANCE, || {
                        format!("{kind} w={w} asymmetric at p={p}")
                    })?;
                }
                checked += 1;
            }
            let peak = weight(kind, m, w).map_err(|e| e.to_string())?;
            ensure((peak - 1.0).abs() <= WEIGHT_TOLERANCE, || {
                format!("{kind} w={w}: f(m) = {peak}")
            })?;
            ensure(
                weight(kind, 0, w).is_err() && weight(kind, w + 1, w).is_err(),
                || format!("{kind} w={w}: out-of-range position accepted"),
            )?;
        }
    }
    Ok(format!("{checked} weights"))
}

fn improvement_arithmetic(_: &mut Fixture) -> Result<String, String> {
    let rows = [
        ("bg", 18.23, 15.27, 16.27),
        ("cz", 5.90, 4.52, 23.36),
        ("de", 24.77, 15.62, 36.94),
        ("en", 19.47, 18.00, 7.52),
        ("es", 33.54, 29.41, 12.30),
        ("fr", 9.40, 7.88, 16.18),
        ("nl", 27.30, 22.41, 17.94),
        ("pl", 26.56, 23.19, 12.69),
        ("sl", 16.42, 14.64, 10.83),
    ];
    let mut worst: f64 = 0.0;
    for (lang, before, after, printed) in rows {
        let got = improvement(before, after);
        worst = worst.max((got - printed).abs());
        ensure((got - printed).abs() <= TABLE_TOLERANCE, || {
            format!("{lang}: {got:.4} vs {printed}")
        })?;
    }
    let de = improvement(24.77, 15.62);
    ensure(format!("{de:.2}") == "36.94", || format!("de rounds to {de:.2}"))?;
    Ok(format!("9 rows, largest deviation {worst:.4}"))
}

/// Brute-force merge of substitution-only corrections: per position, sum
/// the weights per character, then prefer the character backed by the
/// window centred nearest, then the smallest character.
fn brute_force_merge(windows: &[(usize, Vec<char>)], doc_len: usize, kind: WeightingKind) -> String {
    let mut out = String::new();
    for g in 0..doc_len {
        let mut tally: BTreeMap<char, (f64, usize)> = BTreeMap::new();
        for (start, chars) in windows {
            let len = chars.len();
            if g < *start || g >= start + len {
                continue;
            }
            let p = g - start + 1;
            let centre_twice = 2 * start + len - 1;
            let distance = (2 * g).abs_diff(centre_twice);
            let entry = tally.entry(chars[g - start]).or_insert((0.0, usize::MAX));
            entry.0 += direct_weight(kind, p, len);
            entry.1 = entry.1.min(distance);
        }
        let mut best: Option<(char, f64, usize)> = None;
        for (&c, &(w, d)) in &tally {
            let better = match best {
                None => true,
                Some((_, bw, bd)) => w > bw || (w == bw && d < bd),
            };
            if better {
                best = Some((c, w, d));
            }
        }
        out.push(best.expect("every position is covered").0);
    }
    out
}

fn voting_oracle(_: &mut Fixture) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let letters = ['a', 'b', 'c', 'd'];
    let mut merges = 0;
    for instance in 0..VOTING_INSTANCES {
        let alphabet = &letters[..rng.gen_range(1..=4)];
        let doc_len = rng.gen_range(1..=12);
        let w = rng.gen_range(1..=5);
        let doc: String = (0..doc_len)
            .map(|_| *alphabet.choose(&mut rng).unwrap())
            .collect();
        let mut corrections = Vec::new();
        let mut windows = Vec::new();
        for slice in split_ngrams(&doc, w) {
            // Substitution-only output whose edit distance equals its
            // Hamming distance.
            let output: Vec<char> = loop {
                let candidate: Vec<char> = slice
                    .text
                    .chars()
                    .map(|c| {
                        if rng.gen_bool(0.4) {
                            *alphabet.choose(&mut rng).unwrap()
                        } else {
                            c
                        }
                    })
                    .collect();
                let text: String = candidate.iter().collect();
                let hamming = slice
                    .text
                    .chars()
                    .zip(&candidate)
                    .filter(|(a, b)| a != *b)
                    .count();
                if levenshtein(&slice.text, &text) == hamming {
                    break candidate;
                }
            };
            windows.push((slice.start, output.clone()));
            corrections.push(CorrectedWindow {
                slice,
                output: output.into_iter().collect(),
                score: 0.0,
            });
        }
        corrections.shuffle(&mut rng);
        for kind in WeightingKind::ALL {
            let merged = vote_merge(&corrections, kind, doc_len).map_err(|e| e.to_string())?;
            let expected = brute_force_merge(&windows, doc_len, kind);
            ensure(merged == expected, || {
                format!("instance {instance} ({kind}, doc {doc:?}, w={w}): {merged:?} vs {expected:?}")
            })?;
            merges += 1;
        }
    }
    Ok(format!("{VOTING_INSTANCES} instances, {merges} merges"))
}

fn beam_oracle(_: &mut Fixture) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut instances = 0;
    for alphabet_size in 2..=4 {
        for model_seed in 0..3u64 {
            let model = support::random_model(
                100 * alphabet_size as u64 + model_seed,
                alphabet_size,
                1 + model_seed as usize,
            );
            let letters = model.confusion().alphabet().chars().to_vec();
            for len in 1..=6 {
                let factor = if (1.5 * len as f64).ceil() <= 6.0 {
                    1.5
                } else {
                    1.0
                };
                let window: String = (0..len).map(|_| *letters.choose(&mut rng).unwrap()).collect();
                let probe = DecodingConfig {
                    max_len_factor: factor,
                    ..DecodingConfig::beam(1)
                };
                let max_len = probe.max_output_len(len);
                let cfg = DecodingConfig {
                    beam_width: support::saturating_width(letters.len(), max_len),
                    ..probe
                };
                let (out, score) = model.correct_text(&window, &cfg).map_err(|e| e.to_string())?;
                let (best, best_score) = support::exhaustive_best(&model, &window, &cfg);
                ensure(
                    out == best && (score - best_score).abs() <= SCORE_TOLERANCE,
                    || {
                        format!("A={alphabet_size} window {window:?}: beam {out:?} {score} vs exhaustive {best:?} {best_score}")
                    },
                )?;
                instances += 1;
            }
        }
    }
    Ok(format!("{instances} windows"))
}

fn desk_experiment(fixture: &mut Fixture) -> Result<String, String> {
    fixture.prepare()?;
    let held_out = fixture.held_out()?;
    let model = load_model(&fixture.model_path()).map_err(|e| e.to_string())?;
    let config = ExperimentConfig {
        kinds: vec![WindowKind::Disjoint, WindowKind::Ngrams],
        sizes: vec![10, 20],
        decodings: vec![DecodingMethod::Greedy, DecodingMethod::Beam],
        weightings: vec![WeightingKind::Uniform],
        seed: EXPERIMENT_SEED,
        ..ExperimentConfig::default()
    };
    let results = run_grid(&held_out, &model, &config).map_err(|e| e.to_string())?;
    let mut mean_improvement = BTreeMap::new();
    let mut lines = Vec::new();
    for r in &results {
        ensure(r.failures.is_empty(), || format!("{}: {:?}", r.cell, r.failures))?;
        let agg = r
            .aggregate
            .as_ref()
            .ok_or_else(|| format!("{}: no documents", r.cell))?;
        let mean = agg
            .mean_of_ratios
            .ok_or_else(|| format!("{}: every document undefined", r.cell))?;
        if r.cell.kind == WindowKind::Ngrams {
            ensure(agg.mean_cer_after < agg.mean_cer_before, || {
                format!(
                    "{}: mean CER {:.3} -> {:.3}",
                    r.cell, agg.mean_cer_before, agg.mean_cer_after
                )
            })?;
        }
        mean_improvement.insert((r.cell.size, r.cell.decoding, r.cell.kind), mean);
        lines.push(format!("{} {mean:.2}", r.cell));
    }
    for size in [10, 20] {
        for decoding in [DecodingMethod::Greedy, DecodingMethod::Beam] {
            let ngrams = mean_improvement[&(size, decoding, WindowKind::Ngrams)];
            let disjoint = mean_improvement[&(size, decoding, WindowKind::Disjoint)];
            ensure(ngrams >= disjoint, || {
                format!("w={size} {decoding}: n-grams {ngrams:.2} < disjoint {disjoint:.2}")
            })?;
        }
    }

    let oracles: Vec<OracleCorrector> = held_out
        .documents()
        .iter()
        .map(|d| OracleCorrector::new(&d.ocr_raw, &d.ground_truth()))
        .collect();
    let oracle_config = ExperimentConfig {
        kinds: vec![WindowKind::Ngrams],
        decodings: vec![DecodingMethod::Greedy],
        ..ExperimentConfig::default()
    };
    let docs = held_out.documents();
    let oracle_results = run_grid_with(
        &held_out,
        |d| {
            let i = docs
                .iter()
                .position(|x| x.doc_id == d.doc_id)
                .expect("document from this corpus");
            &oracles[i]
        },
        &oracle_config,
    )
    .map_err(|e| e.to_string())?;
    let mut merges = 0;
    for r in &oracle_results {
        ensure(r.failures.is_empty(), || {
            format!("oracle {}: {:?}", r.cell, r.failures)
        })?;
        for ((id, text), doc) in r.corrected.iter().zip(docs) {
            ensure(id == &doc.doc_id && *text == doc.ground_truth(), || {
                format!("oracle {} differs from the ground truth of {id}", r.cell)
            })?;
            merges += 1;
        }
    }
    Ok(format!(
        "mean improvement: {}; oracle merges exact: {merges}",
        lines.join(", ")
    ))
}

fn files_under(root: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).map_err(|e| format!("{}: {e}", dir.display()))? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let bytes = fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), bytes);
            }
        }
    }
    Ok(out)
}

fn grid_determinism(fixture: &mut Fixture) -> Result<String, String> {
    fixture.prepare()?;
    let mut runs = Vec::new();
    for workers in ["1", "8"] {
        let out = fixture.dir.path().join(format!("grid-{workers}"));
        cli(&[
            "grid",
            "--corpus",
            path_arg(&fixture.corpus_dir()),
            "--model",
            path_arg(&fixture.model_path()),
            "--dev-list",
            path_arg(&fixture.dev_list()),
            "--out",
            path_arg(&out),
            "--write-corrected",
            "--seed",
            &EXPERIMENT_SEED.to_string(),
            "--workers",
            workers,
        ])?;
        let mut files = files_under(&out)?;
        files.remove(Path::new("timing.md"));
        runs.push(files);
    }
    let (one, eight) = (&runs[0], &runs[1]);
    ensure(one.keys().eq(eight.keys()), || {
        "the runs wrote different files".to_string()
    })?;
    for (path, bytes) in one {
        ensure(eight[path] == *bytes, || {
            format!("{} differs between 1 and 8 workers", path.display())
        })?;
    }
    let corrected = one.keys().filter(|p| p.starts_with("corrected")).count();
    let csvs = one
        .keys()
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .count();
    ensure(corrected == 80 * EXPERIMENT_DEV, || {
        format!("{corrected} corrected documents")
    })?;
    Ok(format!(
        "{corrected} corrected documents and {csvs} CSV files identical"
    ))
}

fn ingestion_round_trip(fixture: &mut Fixture) -> Result<String, String> {
    let texts = generate_clean_texts(ROUND_TRIP_DOCS, 300, 11);
    let spec = NoiseChannelSpec {
        substitution: 0.1,
        deletion: 0.03,
        insertion: 0.03,
        bias: Some(default_bias_table()),
        seed: 11,
    };
    let corpus = synth_corpus(&texts, &spec, "roundtrip").map_err(|e| e.to_string())?;
    ensure(corpus.len() == ROUND_TRIP_DOCS, || {
        format!("{} documents", corpus.len())
    })?;
    for doc in corpus.documents() {
        let text = doc.to_icdar_string();
        let parsed = parse_icdar_document(&text, doc.doc_id.clone()).map_err(|e| e.to_string())?;
        ensure(parsed == *doc && parsed.to_icdar_string() == text, || {
            format!("{} does not round-trip in memory", doc.doc_id)
        })?;
    }
    let root = fixture.dir.path().join("roundtrip");
    let dir = write_corpus(&corpus, &root).map_err(|e| e.to_string())?;
    let loaded = load_corpus(&dir).map_err(|e| e.to_string())?;
    ensure(loaded.errors.is_empty() && loaded.corpus == corpus, || {
        "corpus differs after reload".to_string()
    })?;
    for doc in loaded.corpus.documents() {
        let on_disk =
            fs::read_to_string(dir.join(format!("{}.txt", doc.doc_id))).map_err(|e| e.to_string())?;
        ensure(doc.to_icdar_string() == on_disk, || {
            format!("{} re-serializes differently", doc.doc_id)
        })?;
    }

    let pairs_of = |doc: &AlignedTriple| -> Pairs {
        extract_training_pairs(doc, 5, 1)
            .into_iter()
            .map(|p| (p.source, p.target, p.start))
            .collect()
    };
    let owned = |rows: &[(&str, &str, usize)]| -> Pairs {
        rows.iter()
            .map(|(s, t, i)| (s.to_string(), t.to_string(), *i))
            .collect()
    };
    let cases: [(&str, &str, Pairs); 4] = [
        (
            "tbe c@tts!",
            "the cat@#!",
            owned(&[
                ("tbe c", "the c", 0),
                ("be c", "he ca", 1),
                ("e ct", "e cat", 2),
                (" ctt", " cat", 3),
            ]),
        ),
        (
            "abcdefg",
            "abcdefg",
            owned(&[
                ("abcde", "abcde", 0),
                ("bcdef", "bcdef", 1),
                ("cdefg", "cdefg", 2),
            ]),
        ),
        ("xy@z", "xyqz", Vec::new()),
        (
            "@@ab#cd",
            "zzabxcd",
            owned(&[("ab#", "zzabx", 0), ("ab#c", "zabxc", 1), ("ab#cd", "abxcd", 2)]),
        ),
    ];
    for (ocr_aligned, gs_aligned, expected) in cases {
        let raw: String = ocr_aligned.chars().filter(|&c| c != '@').collect();
        let doc = AlignedTriple::new("hand", raw, ocr_aligned, gs_aligned).map_err(|e| e.to_string())?;
        let got = pairs_of(&doc);
        ensure(got == expected, || {
            format!("{ocr_aligned:?}/{gs_aligned:?}: {got:?}")
        })?;
    }
    Ok(format!(
        "{ROUND_TRIP_DOCS} documents byte-identical; 4 hand-enumerated pair sets match"
    ))
}
