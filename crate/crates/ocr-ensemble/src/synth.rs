//! Seeded synthetic OCR noise over clean text, producing aligned corpora.

use std::collections::{BTreeMap, BTreeSet};

use ocr_ensemble_core::textdata::{PADDING, UNCERTAIN};
use ocr_ensemble_core::{AlignedTriple, Corpus};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Weighted substitutes for each character.
pub type BiasTable = BTreeMap<char, Vec<(char, f64)>>;

/// Per-character corruption probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseChannelSpec {
    /// Probability a character is replaced.
    pub substitution: f64,
    /// Probability a character is dropped.
    pub deletion: f64,
    /// Probability a spurious character follows a character.
    pub insertion: f64,
    /// Preferred substitutes; characters without an entry are replaced
    /// uniformly from the corpus alphabet.
    pub bias: Option<BiasTable>,
    /// Seed of the noise.
    pub seed: u64,
}

/// Rejected noise specifications.
#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    /// A rate outside `[0, 1]` or rates summing above 1.
    #[error("noise rates must lie in [0, 1] and sum to at most 1 (got {0}, {1}, {2})")]
    InvalidRates(f64, f64, f64),
    /// A bias entry with no positive weight or a reserved character.
    #[error("bias table entry for {0:?} is unusable")]
    InvalidBias(char),
}

impl NoiseChannelSpec {
    /// Checks the rates and the bias table.
    pub fn validate(&self) -> Result<(), SynthError> {
        let rates = [self.substitution, self.deletion, self.insertion];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) || rates.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(SynthError::InvalidRates(rates[0], rates[1], rates[2]));
        }
        for (&c, subs) in self.bias.iter().flatten() {
            let usable = subs.iter().any(|&(_, w)| w > 0.0)
                && subs
                    .iter()
                    .all(|&(s, w)| w >= 0.0 && w.is_finite() && s != PADDING && s != UNCERTAIN);
            if !usable {
                return Err(SynthError::InvalidBias(c));
            }
        }
        Ok(())
    }
}

/// Visually motivated OCR confusions for lowercase text.
pub fn default_bias_table() -> BiasTable {
    let rows: &[(char, &str)] = &[
        ('a', "oe"),
        ('b', "h6"),
        ('c', "eo"),
        ('d', "al"),
        ('e', "co"),
        ('f', "tl"),
        ('g', "q9"),
        ('h', "bn"),
        ('i', "l1"),
        ('j', "i"),
        ('k', "h"),
        ('l', "1i"),
        ('m', "n"),
        ('n', "mu"),
        ('o', "0c"),
        ('p', "q"),
        ('q', "g"),
        ('r', "nt"),
        ('s', "5z"),
        ('t', "fl"),
        ('u', "nv"),
        ('v', "yu"),
        ('w', "v"),
        ('x', "k"),
        ('y', "v"),
        ('z', "2s"),
        (' ', ".,"),
        ('.', ","),
        (',', "."),
    ];
    rows.iter()
        .map(|&(c, subs)| {
            let n = subs.chars().count();
            let entries = subs
                .chars()
                .enumerate()
                .map(|(i, s)| (s, if i == 0 { 0.7 } else { 0.3 / (n - 1) as f64 }))
                .collect();
            (c, entries)
        })
        .collect()
}

struct Noiser<'a> {
    spec: &'a NoiseChannelSpec,
    alphabet: &'a [char],
    bias: BTreeMap<char, (Vec<char>, WeightedIndex<f64>)>,
}

impl<'a> Noiser<'a> {
    fn new(spec: &'a NoiseChannelSpec, alphabet: &'a [char]) -> Self {
        let bias = spec
            .bias
            .iter()
            .flatten()
            .map(|(&c, subs)| {
                let chars = subs.iter().map(|&(s, _)| s).collect();
                let dist = WeightedIndex::new(subs.iter().map(|&(_, w)| w)).expect("validated bias weights");
                (c, (chars, dist))
            })
            .collect();
        Self { spec, alphabet, bias }
    }

    fn substitute(&self, c: char, rng: &mut ChaCha8Rng) -> char {
        if let Some((chars, dist)) = self.bias.get(&c) {
            return chars[dist.sample(rng)];
        }
        let others: Vec<char> = self.alphabet.iter().copied().filter(|&a| a != c).collect();
        others.choose(rng).copied().unwrap_or(c)
    }

    fn corrupt(&self, doc_id: String, clean: &str, rng: &mut ChaCha8Rng) -> AlignedTriple {
        let (sub, del, ins) = (self.spec.substitution, self.spec.deletion, self.spec.insertion);
        let mut ocr_aligned = String::with_capacity(clean.len() + clean.len() / 8);
        let mut gs_aligned = String::with_capacity(ocr_aligned.capacity());
        for c in clean.chars() {
            let u: f64 = rng.gen();
            if u < sub {
                ocr_aligned.push(self.substitute(c, rng));
                gs_aligned.push(c);
            } else if u < sub + del {
                ocr_aligned.push(PADDING);
                gs_aligned.push(c);
            } else if u < sub + del + ins {
                ocr_aligned.push(c);
                gs_aligned.push(c);
                ocr_aligned.push(*self.alphabet.choose(rng).unwrap_or(&c));
                gs_aligned.push(PADDING);
            } else {
                ocr_aligned.push(c);
                gs_aligned.push(c);
            }
        }
        let ocr_raw: String = ocr_aligned.chars().filter(|&c| c != PADDING).collect();
        AlignedTriple::new(doc_id, ocr_raw, ocr_aligned, gs_aligned)
            .expect("aligned lines are built in lockstep")
    }
}

/// Corrupts each clean text into one aligned document `doc0000`,
/// `doc0001`, … Deterministic for a given spec; document `i` draws from its
/// own random stream.
pub fn synth_corpus(
    clean_texts: &[String],
    spec: &NoiseChannelSpec,
    language: &str,
) -> Result<Corpus, SynthError> {
    spec.validate()?;
    let alphabet: Vec<char> = clean_texts
        .iter()
        .flat_map(|t| t.chars())
        .filter(|&c| c != PADDING && c != UNCERTAIN)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let noiser = Noiser::new(spec, &alphabet);
    let docs = clean_texts
        .iter()
        .enumerate()
        .map(|(i, text)| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64);
            noiser.corrupt(format!("doc{i:04}"), text, &mut rng)
        })
        .collect();
    Ok(Corpus::new(language, docs).expect("generated ids are unique"))
}

const VOCABULARY: &[&str] = &[
    "the",
    "of",
    "and",
    "to",
    "in",
    "a",
    "is",
    "that",
    "for",
    "it",
    "as",
    "was",
    "with",
    "be",
    "by",
    "on",
    "not",
    "he",
    "this",
    "are",
    "or",
    "his",
    "from",
    "at",
    "which",
    "but",
    "have",
    "an",
    "had",
    "they",
    "you",
    "were",
    "their",
    "one",
    "all",
    "we",
    "can",
    "her",
    "has",
    "there",
    "been",
    "if",
    "more",
    "when",
    "will",
    "would",
    "who",
    "so",
    "no",
    "she",
    "other",
    "its",
    "may",
    "these",
    "what",
    "them",
    "than",
    "some",
    "him",
    "time",
    "into",
    "only",
    "do",
    "such",
    "new",
    "then",
    "two",
    "first",
    "any",
    "made",
    "like",
    "well",
    "our",
    "very",
    "after",
    "should",
    "also",
    "most",
    "over",
    "could",
    "much",
    "where",
    "great",
    "those",
    "years",
    "before",
    "must",
    "through",
    "back",
    "being",
    "many",
    "people",
    "little",
    "good",
    "work",
    "under",
    "same",
    "state",
    "world",
    "house",
    "water",
    "letter",
    "church",
    "town",
    "king",
    "river",
    "company",
    "paper",
    "common",
    "country",
    "between",
    "public",
    "history",
    "general",
    "small",
    "whole",
    "government",
    "night",
    "morning",
    "account",
    "report",
    "office",
    "matter",
    "court",
    "written",
    "printed",
    "council",
    "harbour",
    "ship",
    "market",
    "school",
    "street",
    "hundred",
    "thousand",
    "found",
    "during",
    "against",
    "without",
    "received",
    "several",
    "present",
    "county",
    "members",
    "meeting",
];

/// Generates `n_docs` lowercase texts of about `chars_per_doc` characters
/// from a fixed word list with Zipf-like frequencies.
pub fn generate_clean_texts(n_docs: usize, chars_per_doc: usize, seed: u64) -> Vec<String> {
    let weights: Vec<f64> = (1..=VOCABULARY.len()).map(|r| 1.0 / r as f64).collect();
    let words = WeightedIndex::new(&weights).expect("positive weights");
    (0..n_docs)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut text = String::with_capacity(chars_per_doc + 16);
            let mut in_sentence = 0;
            let sentence_len = |rng: &mut ChaCha8Rng| rng.gen_range(6..=14);
            let mut target = sentence_len(&mut rng);
            while text.len() < chars_per_doc {
                if !text.is_empty() {
                    text.push(' ');
                }
                text.push_str(VOCABULARY[words.sample(&mut rng)]);
                in_sentence += 1;
                if in_sentence == target {
                    text.push('.');
                    in_sentence = 0;
                    target = sentence_len(&mut rng);
                } else if rng.gen_bool(0.06) {
                    text.push(',');
                }
            }
            text
        })
        .collect()
}
