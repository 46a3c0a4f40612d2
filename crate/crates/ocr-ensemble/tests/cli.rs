use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ocr_ensemble::corpus::write_corpus;
use ocr_ensemble::report::{PerDocumentRow, SummaryRow, UNDEFINED_WORSE};
use ocr_ensemble::synth::{default_bias_table, generate_clean_texts, synth_corpus, NoiseChannelSpec};
use ocr_ensemble_core::Corpus;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ocr-ensemble"))
        .args(args)
        .output()
        .expect("run the CLI")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn small_corpus(n_docs: usize, chars: usize) -> Corpus {
    let texts = generate_clean_texts(n_docs, chars, 3);
    let spec = NoiseChannelSpec {
        substitution: 0.08,
        deletion: 0.02,
        insertion: 0.02,
        bias: Some(default_bias_table()),
        seed: 3,
    };
    synth_corpus(&texts, &spec, "synth").unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a corpus and trains a model on all of it.
fn trained(root: &Path, corpus: &Corpus) -> (std::path::PathBuf, std::path::PathBuf) {
    let dir = write_corpus(corpus, &root.join("corpora")).unwrap();
    let model = root.join("model.pocrm");
    run_ok(&[
        "train",
        "--corpus",
        s(&dir),
        "--out",
        s(&model),
        "--dev",
        "0",
        "--train-window",
        "40",
        "--stride",
        "20",
    ]);
    (dir, model)
}

#[test]
fn correct_writes_one_file_per_document() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(1, 200);
    let (dir, model) = trained(tmp.path(), &corpus);
    let out = tmp.path().join("out");
    let stdout = run_ok(&[
        "correct",
        "--model",
        s(&model),
        "--input",
        s(&dir),
        "--out",
        s(&out),
        "--window-type",
        "ngrams",
        "--window-size",
        "8",
        "--decoding",
        "beam",
        "--beam-width",
        "3",
        "--weighting",
        "triangle",
    ]);
    assert!(stdout.contains("1 documents corrected"), "{stdout}");
    let doc = &corpus.documents()[0];
    let text = fs::read_to_string(out.join(format!("{}.txt", doc.doc_id))).unwrap();
    assert!(!text.is_empty());
    assert!(text.chars().count() <= doc.ocr_raw.chars().count() * 2);
}

#[test]
fn correct_reads_plain_text_and_config_files() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, model) = trained(tmp.path(), &small_corpus(2, 200));
    let plain = tmp.path().join("plain");
    fs::create_dir(&plain).unwrap();
    fs::write(plain.join("note.txt"), "tbe quick brown fox").unwrap();
    let config = tmp.path().join("run.conf");
    fs::write(
        &config,
        "# one window configuration\nwindow_type = disjoint\nwindow_size = 5\ndecoding = greedy\nweighting = uniform\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    run_ok(&[
        "correct",
        "--model",
        s(&model),
        "--input",
        s(&plain),
        "--plain",
        "--out",
        s(&out),
        "--config",
        s(&config),
    ]);
    assert!(out.join("note.txt").is_file());
}

#[test]
fn unknown_flag_fails() {
    let out = run(&["grid", "--no-such-flag"]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}

#[test]
fn missing_model_fails_with_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "correct",
        "--model",
        s(&tmp.path().join("absent.pocrm")),
        "--input",
        s(tmp.path()),
        "--out",
        s(&tmp.path().join("out")),
        "--window-type",
        "ngrams",
        "--window-size",
        "5",
        "--decoding",
        "greedy",
        "--weighting",
        "uniform",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.pocrm"));
}

#[test]
fn correct_needs_one_value_per_axis() {
    let tmp = tempfile::tempdir().unwrap();
    let (dir, model) = trained(tmp.path(), &small_corpus(1, 100));
    let out = run(&[
        "correct",
        "--model",
        s(&model),
        "--input",
        s(&dir),
        "--out",
        s(&tmp.path().join("out")),
        "--window-size",
        "5,10",
    ]);
    assert!(!out.status.success());
}

#[test]
fn summary_means_match_per_document_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(4, 150);
    let (dir, model) = trained(tmp.path(), &corpus);
    let out = tmp.path().join("synth");
    run_ok(&[
        "grid",
        "--corpus",
        s(&dir),
        "--model",
        s(&model),
        "--out",
        s(&out),
        "--window-size",
        "5,10",
        "--decoding",
        "greedy",
        "--workers",
        "2",
    ]);

    let mut per_cell: BTreeMap<(String, usize, String, String), Vec<f64>> = BTreeMap::new();
    let mut reader = csv::Reader::from_path(out.join("per_document.csv")).unwrap();
    for row in reader.deserialize::<PerDocumentRow>() {
        let row = row.unwrap();
        let values = per_cell
            .entry((row.kind, row.size, row.decoding, row.weighting))
            .or_default();
        if row.improvement != UNDEFINED_WORSE {
            values.push(row.improvement.parse().unwrap());
        }
    }
    let mut reader = csv::Reader::from_path(out.join("summary.csv")).unwrap();
    let mut rows = 0;
    for row in reader.deserialize::<SummaryRow>() {
        let row = row.unwrap();
        let values = &per_cell[&(
            row.kind.clone(),
            row.size,
            row.decoding.clone(),
            row.weighting.clone(),
        )];
        assert_eq!(row.count, values.len());
        if let Some(mean) = row.mean {
            let recomputed = values.iter().sum::<f64>() / values.len() as f64;
            assert!((mean - recomputed).abs() <= 1e-9, "{mean} vs {recomputed}");
        }
        rows += 1;
    }
    // Disjoint collapses the weighting axis: 2 sizes x (1 + 3) cells.
    assert_eq!(rows, 8);

    let rebuilt = tmp.path().join("rebuilt");
    run_ok(&["report", "--input", s(&out), "--out", s(&rebuilt)]);
    for name in ["summary.csv", "grouped_kind.csv", "grouped_size.csv", "best.md"] {
        assert_eq!(
            fs::read_to_string(out.join(name)).unwrap(),
            fs::read_to_string(rebuilt.join(name)).unwrap(),
            "{name}"
        );
    }
}
