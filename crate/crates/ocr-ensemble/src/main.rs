use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ocr_ensemble::config::Config;
use ocr_ensemble::corpus::{language_dirs, load_corpus, load_plain_texts, write_corpus, LoadedCorpus};
use ocr_ensemble::grid::{run_grid, ExperimentConfig};
use ocr_ensemble::model_file::{load_model, save_model};
use ocr_ensemble::parallel::{correct_document, worker_pool};
use ocr_ensemble::report::{emit_report, read_per_document, write_reports};
use ocr_ensemble::synth::{default_bias_table, generate_clean_texts, synth_corpus, NoiseChannelSpec};
use ocr_ensemble_core::corrector::{DecodingMethod, ModelParams, NoisyChannelModel};
use ocr_ensemble_core::metrics::{aggregate, CerReport};
use ocr_ensemble_core::textdata::{extract_training_pairs, split_train_dev};
use ocr_ensemble_core::{Corpus, TrainingPair, WeightingKind, WindowKind, WindowSpec};

/// Windowed post-OCR correction with n-gram voting ensembles.
#[derive(Parser)]
#[command(name = "ocr-ensemble", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus directory and optionally rewrite it normalized.
    Ingest {
        /// Language directory, or a root holding language directories.
        #[arg(long)]
        corpus: PathBuf,
        /// Write the valid documents under this root.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cut training pairs from a corpus into a CSV file.
    ExtractPairs {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        training: TrainingArgs,
    },
    /// Train a noisy-channel model, holding out dev documents.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
        /// Write the held-out document ids here, one per line.
        #[arg(long)]
        dev_list: Option<PathBuf>,
        #[command(flatten)]
        training: TrainingArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Correct documents with a trained model.
    Correct {
        #[arg(long)]
        model: PathBuf,
        /// Directory of tagged documents (their OCR line is corrected).
        #[arg(long)]
        input: PathBuf,
        /// Directory receiving `<doc_id>.txt` corrected texts.
        #[arg(long)]
        out: PathBuf,
        /// Treat input files as plain text instead of tagged documents.
        #[arg(long)]
        plain: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Score corrected texts against a corpus' ground truth.
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        /// Directory of `<doc_id>.txt` corrected texts.
        #[arg(long)]
        corrected: PathBuf,
        /// Per-document CSV to write.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the window/decoding/weighting grid and write reports.
    Grid {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Report directory.
        #[arg(long)]
        out: PathBuf,
        /// Only evaluate the document ids listed in this file.
        #[arg(long)]
        dev_list: Option<PathBuf>,
        /// Also write every corrected document under `<out>/corrected`.
        #[arg(long)]
        write_corrected: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Generate a synthetic noisy corpus.
    Synth {
        /// Root directory; documents go to `<out>/<language>/`.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "synth")]
        language: String,
        #[arg(long, default_value_t = 50)]
        docs: usize,
        #[arg(long, default_value_t = 1000)]
        chars: usize,
        /// Substitution probability per character.
        #[arg(long, default_value_t = 0.10)]
        sub: f64,
        /// Deletion probability per character.
        #[arg(long, default_value_t = 0.02)]
        del: f64,
        /// Insertion probability per character.
        #[arg(long, default_value_t = 0.02)]
        ins: f64,
        /// Substitute uniformly instead of with the built-in OCR confusions.
        #[arg(long)]
        unbiased: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rebuild summaries from one or more grid report directories.
    Report {
        /// Grid report directories; each directory name labels its corpus.
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct TrainingArgs {
    /// Training pair length.
    #[arg(long)]
    train_window: Option<usize>,
    /// Step between training pairs.
    #[arg(long)]
    stride: Option<usize>,
    /// Documents held out for development.
    #[arg(long)]
    dev: Option<usize>,
    /// Language model order.
    #[arg(long)]
    lm_order: Option<usize>,
    /// Add-k smoothing constant.
    #[arg(long)]
    k: Option<f64>,
}

#[derive(Args)]
struct CommonArgs {
    /// Window strategy; comma-separated for `grid`.
    #[arg(long, value_delimiter = ',')]
    window_type: Vec<WindowKind>,
    /// Window size; comma-separated for `grid`.
    #[arg(long, value_delimiter = ',')]
    window_size: Vec<usize>,
    /// Decoding method; comma-separated for `grid`.
    #[arg(long, value_delimiter = ',')]
    decoding: Vec<DecodingMethod>,
    #[arg(long)]
    beam_width: Option<usize>,
    /// Vote weighting; comma-separated for `grid`.
    #[arg(long, value_delimiter = ',')]
    weighting: Vec<WeightingKind>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Override the language model weight stored in the model.
    #[arg(long)]
    lm_weight: Option<f64>,
    #[arg(long)]
    max_len_factor: Option<f64>,
    #[arg(long)]
    max_deletions: Option<usize>,
    /// Key-value settings file; flags win over its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    Ok(match path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    })
}

fn pick_list<T: std::str::FromStr>(flag: Vec<T>, config: &Config, key: &str) -> Result<Option<Vec<T>>> {
    if !flag.is_empty() {
        return Ok(Some(flag));
    }
    Ok(config.get_list(key)?)
}

fn pick<T: std::str::FromStr>(flag: Option<T>, config: &Config, key: &str) -> Result<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => Ok(config.get(key)?),
    }
}

/// Flag, then config file, then built-in default.
fn experiment(common: CommonArgs) -> Result<(ExperimentConfig, Option<f64>)> {
    let config = load_config(common.config.as_deref())?;
    let base = ExperimentConfig::default();
    let exp = ExperimentConfig {
        kinds: pick_list(common.window_type, &config, "window_type")?.unwrap_or(base.kinds),
        sizes: pick_list(common.window_size, &config, "window_size")?.unwrap_or(base.sizes),
        decodings: pick_list(common.decoding, &config, "decoding")?.unwrap_or(base.decodings),
        weightings: pick_list(common.weighting, &config, "weighting")?.unwrap_or(base.weightings),
        beam_width: pick(common.beam_width, &config, "beam_width")?.unwrap_or(base.beam_width),
        max_len_factor: pick(common.max_len_factor, &config, "max_len_factor")?
            .unwrap_or(base.max_len_factor),
        max_deletions: pick(common.max_deletions, &config, "max_deletions")?.unwrap_or(base.max_deletions),
        seed: pick(common.seed, &config, "seed")?.unwrap_or(base.seed),
        workers: pick(common.workers, &config, "workers")?.unwrap_or(base.workers),
    };
    let lm_weight = pick(common.lm_weight, &config, "lm_weight")?;
    exp.validate()?;
    Ok((exp, lm_weight))
}

fn single<T: Copy + std::fmt::Display>(values: &[T], what: &str) -> Result<T> {
    match values {
        [one] => Ok(*one),
        _ => bail!("`correct` needs exactly one {what}, got {}", values.len()),
    }
}

fn report_load(loaded: LoadedCorpus) -> Corpus {
    for e in &loaded.errors {
        eprintln!("error: {}: {}", e.path.display(), e.message);
    }
    for w in &loaded.warnings {
        eprintln!("warning: {}: {}", w.path.display(), w.message);
    }
    loaded.corpus
}

fn read_corpus(dir: &Path) -> Result<Corpus> {
    Ok(report_load(load_corpus(dir)?))
}

fn model_with_weight(path: &Path, lm_weight: Option<f64>) -> Result<NoisyChannelModel> {
    let model = load_model(path)?;
    Ok(match lm_weight {
        Some(w) => model.with_lm_weight(w).context("--lm-weight")?,
        None => model,
    })
}

fn training_pairs(corpus: &Corpus, w_train: usize, stride: usize) -> Result<Vec<TrainingPair>> {
    if w_train == 0 || stride == 0 {
        bail!("--train-window and --stride must be positive");
    }
    Ok(corpus
        .documents()
        .iter()
        .flat_map(|d| extract_training_pairs(d, w_train, stride))
        .collect())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| parent.display().to_string())?;
    }
    fs::write(path, text).with_context(|| path.display().to_string())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { corpus, out } => {
            let has_docs = ocr_ensemble::corpus::document_files(&corpus)?.len();
            let dirs = if has_docs == 0 {
                language_dirs(&corpus)?
            } else {
                vec![corpus.clone()]
            };
            for dir in dirs {
                let loaded = load_corpus(&dir)?;
                println!(
                    "{}: {} documents, {} errors, {} warnings",
                    loaded.corpus.language,
                    loaded.corpus.len(),
                    loaded.errors.len(),
                    loaded.warnings.len()
                );
                let c = report_load(loaded);
                if let Some(out) = &out {
                    write_corpus(&c, out)?;
                }
            }
        }
        Command::ExtractPairs {
            corpus,
            out,
            training,
        } => {
            let corpus = read_corpus(&corpus)?;
            let pairs = training_pairs(
                &corpus,
                training.train_window.unwrap_or(100),
                training.stride.unwrap_or(1),
            )?;
            let mut writer = csv::Writer::from_path(&out).with_context(|| out.display().to_string())?;
            writer.write_record(["doc_id", "start", "source", "target"])?;
            for p in &pairs {
                writer.write_record([p.doc_id.as_str(), &p.start.to_string(), &p.source, &p.target])?;
            }
            writer.flush().with_context(|| out.display().to_string())?;
            println!("{} pairs written to {}", pairs.len(), out.display());
        }
        Command::Train {
            corpus,
            out,
            dev_list,
            training,
            common,
        } => {
            let config = load_config(common.config.as_deref())?;
            let seed = pick(common.seed, &config, "seed")?.unwrap_or(0);
            let n_dev = pick(training.dev, &config, "dev")?.unwrap_or(5);
            let w_train = pick(training.train_window, &config, "train_window")?.unwrap_or(100);
            let stride = pick(training.stride, &config, "stride")?.unwrap_or(1);
            let defaults = ModelParams::default();
            let params = ModelParams {
                lm_order: pick(training.lm_order, &config, "lm_order")?.unwrap_or(defaults.lm_order),
                k: pick(training.k, &config, "k")?.unwrap_or(defaults.k),
                lm_weight: pick(common.lm_weight, &config, "lm_weight")?.unwrap_or(defaults.lm_weight),
            };
            let corpus = read_corpus(&corpus)?;
            let (train, dev) = split_train_dev(&corpus, n_dev, seed)?;
            let pairs = training_pairs(&train, w_train, stride)?;
            let lm_texts: Vec<String> = train.documents().iter().map(|d| d.ground_truth()).collect();
            let model = NoisyChannelModel::train(&pairs, &lm_texts, params)
                .with_context(|| format!("training on {} pairs", pairs.len()))?;
            save_model(&model, &out)?;
            let ids: String = dev
                .documents()
                .iter()
                .map(|d| format!("{}\n", d.doc_id))
                .collect();
            match dev_list {
                Some(path) => write_file(&path, &ids)?,
                None => print!("{ids}"),
            }
            eprintln!(
                "trained on {} documents ({} pairs); {} held out; model written to {}",
                train.len(),
                pairs.len(),
                dev.len(),
                out.display()
            );
        }
        Command::Correct {
            model,
            input,
            out,
            plain,
            common,
        } => {
            let (exp, lm_weight) = experiment(common)?;
            let spec = WindowSpec::new(
                single(&exp.kinds, "window type")?,
                single(&exp.sizes, "window size")?,
            )
            .expect("validated size");
            let weighting = single(&exp.weightings, "weighting")?;
            let cfg = exp.decoding_config(single(&exp.decodings, "decoding")?);
            let model = model_with_weight(&model, lm_weight)?;
            let docs: Vec<(String, String)> = if plain {
                load_plain_texts(&input)?
            } else {
                read_corpus(&input)?
                    .into_documents()
                    .into_iter()
                    .map(|d| (d.doc_id, d.ocr_raw))
                    .collect()
            };
            fs::create_dir_all(&out).with_context(|| out.display().to_string())?;
            let pool = worker_pool(exp.workers)?;
            for (id, text) in &docs {
                let corrected = pool
                    .install(|| correct_document(text, &model, spec, &cfg, weighting))
                    .with_context(|| format!("{}: document {id}", input.display()))?;
                write_file(&out.join(format!("{id}.txt")), &corrected)?;
            }
            println!("{} documents corrected into {}", docs.len(), out.display());
        }
        Command::Evaluate {
            corpus,
            corrected,
            out,
        } => {
            let corpus = read_corpus(&corpus)?;
            let mut reports = Vec::new();
            for doc in corpus.documents() {
                let path = corrected.join(format!("{}.txt", doc.doc_id));
                let text = fs::read_to_string(&path).with_context(|| path.display().to_string())?;
                reports.push(CerReport::measure(
                    &doc.doc_id,
                    &doc.ocr_raw,
                    &text,
                    &doc.ground_truth(),
                ));
            }
            if let Some(out) = out {
                let mut writer = csv::Writer::from_path(&out).with_context(|| out.display().to_string())?;
                writer.write_record(["doc_id", "cer_before", "cer_after", "improvement"])?;
                for r in &reports {
                    let imp = if r.is_defined() {
                        format!("{:?}", r.improvement_pct)
                    } else {
                        ocr_ensemble::report::UNDEFINED_WORSE.to_string()
                    };
                    writer.write_record([
                        r.doc_id.as_str(),
                        &format!("{:?}", r.cer_before),
                        &format!("{:?}", r.cer_after),
                        &imp,
                    ])?;
                }
                writer.flush().with_context(|| out.display().to_string())?;
            }
            match aggregate(&reports) {
                None => println!("no documents"),
                Some(a) => {
                    println!("documents: {}", reports.len());
                    println!("mean CER before: {:.2}", a.mean_cer_before);
                    println!("mean CER after: {:.2}", a.mean_cer_after);
                    match a.mean_of_ratios {
                        Some(m) => println!("improvement (mean of ratios): {m:.2}%"),
                        None => println!("improvement (mean of ratios): undefined"),
                    }
                    println!("improvement (ratio of means): {:.2}%", a.ratio_of_means);
                    println!("excluded as undefined-worse: {}", a.excluded);
                }
            }
        }
        Command::Grid {
            corpus,
            model,
            out,
            dev_list,
            write_corrected,
            common,
        } => {
            let (exp, lm_weight) = experiment(common)?;
            let model = model_with_weight(&model, lm_weight)?;
            let mut corpus = read_corpus(&corpus)?;
            if let Some(list) = dev_list {
                let text = fs::read_to_string(&list).with_context(|| list.display().to_string())?;
                let keep: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
                let language = corpus.language.clone();
                let docs: Vec<_> = corpus
                    .into_documents()
                    .into_iter()
                    .filter(|d| keep.contains(&d.doc_id.as_str()))
                    .collect();
                if docs.len() != keep.len() {
                    bail!("{}: lists documents missing from the corpus", list.display());
                }
                corpus = Corpus::new(language, docs)?;
            }
            let results = run_grid(&corpus, &model, &exp)?;
            let written = emit_report(&results, &out)?;
            if write_corrected {
                for r in &results {
                    let dir = out.join("corrected").join(r.cell.to_string());
                    for (id, text) in &r.corrected {
                        write_file(&dir.join(format!("{id}.txt")), text)?;
                    }
                }
            }
            let failures: usize = results.iter().map(|r| r.failures.len()).sum();
            for r in &results {
                for f in &r.failures {
                    eprintln!("error: cell {}: document {}: {}", r.cell, f.doc_id, f.message);
                }
            }
            println!("{} cells evaluated; reports:", results.len());
            for path in written {
                println!("  {}", path.display());
            }
            if failures > 0 {
                bail!("{failures} document failures");
            }
        }
        Command::Synth {
            out,
            language,
            docs,
            chars,
            sub,
            del,
            ins,
            unbiased,
            seed,
        } => {
            let texts = generate_clean_texts(docs, chars, seed);
            let spec = NoiseChannelSpec {
                substitution: sub,
                deletion: del,
                insertion: ins,
                bias: (!unbiased).then(default_bias_table),
                seed,
            };
            let corpus = synth_corpus(&texts, &spec, &language)?;
            let dir = write_corpus(&corpus, &out)?;
            println!("{} documents written to {}", corpus.len(), dir.display());
        }
        Command::Report { input, out } => {
            let mut records = Vec::new();
            for dir in &input {
                let language = dir
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                records.extend(read_per_document(&dir.join("per_document.csv"), &language)?);
            }
            for path in write_reports(&records, &out)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
