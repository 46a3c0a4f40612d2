//! Noisy-channel window corrector: a confusion channel for the OCR errors
//! and a character language model as the prior over true text, searched
//! left to right over the observed window.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::alphabet::Alphabet;
use super::confusion::ConfusionModel;
use super::lm::{CharLm, Context};
use super::{CorrectedWindow, CorrectorError, DecodingConfig, SequenceCorrector};
use crate::textdata::TrainingPair;
use crate::window::WindowSlice;

/// Training hyper-parameters of [`NoisyChannelModel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Language model order.
    pub lm_order: usize,
    /// Add-k constant for both models.
    pub k: f64,
    /// Weight of the language model score.
    pub lm_weight: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            lm_order: 5,
            k: 0.1,
            lm_weight: 1.0,
        }
    }
}

/// Confusion channel + character LM + LM weight.
///
/// A hypothesis is scored as `Σ channel log-probs + λ · lm_score(output)`,
/// where the channel part is the best derivation of the observed window:
/// every observed character is either produced by a true character
/// (`sub[t][o]`) or spurious (`ins[o]`), and up to `max_deletions` true
/// characters in a row may be recovered without observed evidence
/// (`del[t]`).
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyChannelModel {
    confusion: ConfusionModel,
    lm: CharLm,
    lm_weight: f64,
}

#[derive(Debug, Clone)]
struct Hyp {
    out: Vec<char>,
    ctx: Context,
    score: f64,
}

/// An extension of a parent hypothesis, materialized only if selected.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    parent: u32,
    ch: Option<char>,
    sym: u32,
    score: f64,
}

impl NoisyChannelModel {
    /// Combines separately trained models. Both must share one alphabet.
    pub fn new(confusion: ConfusionModel, lm: CharLm, lm_weight: f64) -> Result<Self, CorrectorError> {
        if confusion.alphabet() != lm.alphabet() {
            return Err(CorrectorError::AlphabetMismatch);
        }
        if !(lm_weight >= 0.0 && lm_weight.is_finite()) {
            return Err(CorrectorError::InvalidConfig("LM weight must be non-negative"));
        }
        Ok(Self {
            confusion,
            lm,
            lm_weight,
        })
    }

    /// Trains both models over the joint alphabet of `pairs` and `lm_texts`.
    pub fn train<S: AsRef<str>>(
        pairs: &[TrainingPair],
        lm_texts: &[S],
        params: ModelParams,
    ) -> Result<Self, CorrectorError> {
        let alphabet = Alphabet::from_texts(
            pairs
                .iter()
                .flat_map(|p| [p.source.as_str(), p.target.as_str()])
                .chain(lm_texts.iter().map(AsRef::as_ref)),
        );
        let confusion = ConfusionModel::train_with_alphabet(pairs, params.k, alphabet.clone())?;
        let lm = CharLm::train_with_alphabet(lm_texts, params.lm_order, params.k, alphabet)?;
        Self::new(confusion, lm, params.lm_weight)
    }

    /// The channel.
    pub fn confusion(&self) -> &ConfusionModel {
        &self.confusion
    }

    /// The prior.
    pub fn lm(&self) -> &CharLm {
        &self.lm
    }

    /// Weight of the LM score.
    pub fn lm_weight(&self) -> f64 {
        self.lm_weight
    }

    /// Same model with another LM weight.
    pub fn with_lm_weight(mut self, lm_weight: f64) -> Result<Self, CorrectorError> {
        if !(lm_weight >= 0.0 && lm_weight.is_finite()) {
            return Err(CorrectorError::InvalidConfig("LM weight must be non-negative"));
        }
        self.lm_weight = lm_weight;
        Ok(self)
    }

    fn alphabet(&self) -> &Alphabet {
        self.confusion.alphabet()
    }

    /// Corrects a window of text. Empty input yields empty output, score 0.
    pub fn correct_text(&self, window: &str, cfg: &DecodingConfig) -> Result<(String, f64), CorrectorError> {
        cfg.validate()?;
        let observed: Vec<char> = window.chars().collect();
        if observed.is_empty() {
            return Ok((String::new(), 0.0));
        }
        let width = cfg.effective_width();
        let max_len = cfg.max_output_len(observed.len());
        let mut search = Search {
            model: self,
            width,
            max_len,
            lm_buf: Vec::new(),
            cands: Vec::new(),
        };

        let mut beam = alloc::vec![Hyp {
            out: Vec::new(),
            ctx: self.lm.begin(),
            score: 0.0,
        }];
        for &o in &observed {
            let pool = search.with_deletions(beam, cfg.max_deletions);
            beam = search.consume(&pool, o);
        }
        let pool = search.with_deletions(beam, cfg.max_deletions);

        // Surviving hypotheses are rescored over all their derivations, so
        // the reported score is the model score of the returned string. A
        // hypothesis is skipped when even the best conceivable channel score
        // cannot reach the best exact score found so far.
        let channel_bound = self.channel_upper_bound(&observed);
        let mut bounded: Vec<(f64, String)> = pool
            .into_iter()
            .map(|h| {
                let text: String = h.out.into_iter().collect();
                (self.lm_weight * self.lm.score(&text), text)
            })
            .collect();
        bounded.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        let mut best: Option<(f64, String)> = None;
        for (lm_score, text) in bounded {
            if let Some((top, _)) = &best {
                if lm_score + channel_bound < *top {
                    break;
                }
            }
            let truth: Vec<char> = text.chars().collect();
            let score = self.channel_log_prob(&truth, &observed, cfg.max_deletions) + lm_score;
            let better = match &best {
                None => true,
                Some((top, top_text)) => score > *top || (score == *top && text < *top_text),
            };
            if better {
                best = Some((score, text));
            }
        }
        let (score, text) = best.expect("pool always holds the surviving beam");
        Ok((text, score))
    }

    /// Upper bound on the channel score of any hypothesis: every observed
    /// character at its most likely explanation, no recovered deletions.
    fn channel_upper_bound(&self, observed: &[char]) -> f64 {
        let alphabet = self.alphabet();
        let conf = &self.confusion;
        observed
            .iter()
            .map(|&o| {
                let oi = alphabet.index(o);
                (0..=alphabet.len())
                    .map(|t| conf.sub(t, oi))
                    .fold(conf.ins(oi), f64::max)
            })
            .sum()
    }

    /// Model score of `output` as a correction of `window`: the best channel
    /// derivation plus the weighted LM score. `-inf` if no derivation exists.
    pub fn score_output(&self, window: &str, output: &str, max_deletions: usize) -> f64 {
        let observed: Vec<char> = window.chars().collect();
        let truth: Vec<char> = output.chars().collect();
        self.channel_log_prob(&truth, &observed, max_deletions) + self.lm_weight * self.lm.score(output)
    }

    /// Best channel log-probability over derivations of `observed` from
    /// `truth` with at most `max_deletions` recovered characters in a row.
    fn channel_log_prob(&self, truth: &[char], observed: &[char], max_deletions: usize) -> f64 {
        const NEG: f64 = f64::NEG_INFINITY;
        let alphabet = self.alphabet();
        let conf = &self.confusion;
        let m = truth.len();
        // Symbol of each true character; unknown ones may only be copied.
        let truth_idx: Vec<Option<usize>> = truth
            .iter()
            .map(|&c| alphabet.contains(c).then(|| alphabet.index(c)))
            .collect();
        let del: Vec<f64> = truth_idx.iter().map(|t| t.map_or(NEG, |t| conf.del(t))).collect();

        // `arrived[j]`: best score having produced j true characters, with
        // the last step consuming an observed character (or at the start).
        let mut arrived = alloc::vec![NEG; m + 1];
        arrived[0] = 0.0;
        let mut best = alloc::vec![NEG; m + 1];
        let mut run = alloc::vec![NEG; m + 1];
        let mut next_run = alloc::vec![NEG; m + 1];
        let mut close_row = |arrived: &[f64], best: &mut [f64]| {
            best.copy_from_slice(arrived);
            run.copy_from_slice(arrived);
            for _ in 0..max_deletions {
                next_run[0] = NEG;
                for j in 0..m {
                    next_run[j + 1] = run[j] + del[j];
                }
                for j in 0..=m {
                    best[j] = best[j].max(next_run[j]);
                }
                core::mem::swap(&mut run, &mut next_run);
            }
        };
        for &o in observed {
            close_row(&arrived, &mut best);
            let oi = alphabet.index(o);
            let ins = conf.ins(oi);
            arrived[0] = best[0] + ins;
            for j in 1..=m {
                let ti = match truth_idx[j - 1] {
                    Some(t) => Some(t),
                    None if truth[j - 1] == o => Some(alphabet.unknown()),
                    None => None,
                };
                let consume = ti.map_or(NEG, |t| best[j - 1] + conf.sub(t, oi));
                arrived[j] = (best[j] + ins).max(consume);
            }
        }
        close_row(&arrived, &mut best);
        best[m]
    }
}

struct Search<'m> {
    model: &'m NoisyChannelModel,
    width: usize,
    max_len: usize,
    lm_buf: Vec<f64>,
    cands: Vec<Candidate>,
}

impl Search<'_> {
    /// Returns `beam` plus every hypothesis reachable by recovering one, two,
    /// … `max_deletions` true characters, each stage pruned to the width.
    fn with_deletions(&mut self, beam: Vec<Hyp>, max_deletions: usize) -> Vec<Hyp> {
        let mut pool = beam;
        let mut frontier_start = 0;
        for _ in 0..max_deletions {
            let frontier = &pool[frontier_start..];
            self.cands.clear();
            for (i, h) in frontier.iter().enumerate() {
                if h.out.len() >= self.max_len {
                    continue;
                }
                let base = h.score;
                self.model.lm.fill_log_probs(h.ctx, &mut self.lm_buf);
                let alphabet = self.model.alphabet();
                for (t, &ch) in alphabet.chars().iter().enumerate() {
                    let score = base + self.model.confusion.del(t) + self.model.lm_weight * self.lm_buf[t];
                    self.cands.push(Candidate {
                        parent: i as u32,
                        ch: Some(ch),
                        sym: t as u32,
                        score,
                    });
                }
            }
            if self.cands.is_empty() {
                break;
            }
            let next = select(&mut self.cands, frontier, self.width, &self.model.lm);
            frontier_start = pool.len();
            pool.extend(next);
        }
        pool
    }

    /// Consumes observed character `o` from every hypothesis in `pool`.
    fn consume(&mut self, pool: &[Hyp], o: char) -> Vec<Hyp> {
        let model = self.model;
        let alphabet = model.alphabet();
        let oi = alphabet.index(o);
        let known = oi != alphabet.unknown();
        let ins = model.confusion.ins(oi);
        self.cands.clear();
        for (i, h) in pool.iter().enumerate() {
            let parent = i as u32;
            self.cands.push(Candidate {
                parent,
                ch: None,
                sym: 0,
                score: h.score + ins,
            });
            if h.out.len() >= self.max_len {
                continue;
            }
            model.lm.fill_log_probs(h.ctx, &mut self.lm_buf);
            for (t, &ch) in alphabet.chars().iter().enumerate() {
                let score = h.score + model.confusion.sub(t, oi) + model.lm_weight * self.lm_buf[t];
                self.cands.push(Candidate {
                    parent,
                    ch: Some(ch),
                    sym: t as u32,
                    score,
                });
            }
            if !known {
                // An unseen character can only be copied through.
                let unk = alphabet.unknown();
                let score = h.score + model.confusion.sub(unk, unk) + model.lm_weight * self.lm_buf[unk];
                self.cands.push(Candidate {
                    parent,
                    ch: Some(o),
                    sym: unk as u32,
                    score,
                });
            }
        }
        select(&mut self.cands, pool, self.width, &model.lm)
    }
}

fn cand_len(c: &Candidate, parents: &[Hyp]) -> usize {
    parents[c.parent as usize].out.len() + usize::from(c.ch.is_some())
}

fn cand_chars<'a>(c: &Candidate, parents: &'a [Hyp]) -> impl Iterator<Item = char> + 'a {
    parents[c.parent as usize].out.iter().copied().chain(c.ch)
}

/// Score descending, then output string ascending.
fn rank(a: &Candidate, b: &Candidate, parents: &[Hyp]) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| cand_chars(a, parents).cmp(cand_chars(b, parents)))
}

fn same_output(a: &Candidate, b: &Candidate, parents: &[Hyp]) -> bool {
    cand_len(a, parents) == cand_len(b, parents) && cand_chars(a, parents).eq(cand_chars(b, parents))
}

/// Beams up to this width deduplicate by pairwise comparison.
const LINEAR_DEDUP_WIDTH: usize = 16;

/// Smallest score among the `take` best.
fn threshold(cands: &[Candidate], take: usize) -> f64 {
    if take >= cands.len() {
        return f64::NEG_INFINITY;
    }
    if take > 32 {
        let mut scores: Vec<f64> = cands.iter().map(|c| c.score).collect();
        let (_, kth, _) = scores.select_nth_unstable_by(take - 1, |a, b| b.total_cmp(a));
        return *kth;
    }
    let mut top: Vec<f64> = Vec::with_capacity(take + 1);
    for c in cands {
        if top.len() == take && c.score <= top[take - 1] {
            continue;
        }
        let at = top.partition_point(|&s| s >= c.score);
        top.insert(at, c.score);
        top.truncate(take);
    }
    top.last().copied().unwrap_or(f64::NEG_INFINITY)
}

/// Keeps the `width` best candidates with distinct outputs; when several
/// candidates spell the same string only the best survives.
fn select(cands: &mut [Candidate], parents: &[Hyp], width: usize, lm: &CharLm) -> Vec<Hyp> {
    let mut chosen: Vec<Candidate> = Vec::with_capacity(width);
    let mut take = (width * 2).max(width + 4);
    let mut head: Vec<Candidate> = Vec::new();
    loop {
        let cut = threshold(cands, take);
        head.clear();
        head.extend(cands.iter().filter(|c| c.score >= cut));
        head.sort_unstable_by(|a, b| rank(a, b, parents));
        chosen.clear();
        let mut seen: BTreeSet<Vec<char>> = BTreeSet::new();
        for c in &head {
            if chosen.len() == width {
                break;
            }
            let fresh = if width <= LINEAR_DEDUP_WIDTH {
                !chosen.iter().any(|k| same_output(k, c, parents))
            } else {
                seen.insert(cand_chars(c, parents).collect())
            };
            if fresh {
                chosen.push(*c);
            }
        }
        if chosen.len() == width || head.len() == cands.len() {
            break;
        }
        take = take.saturating_mul(2);
    }
    chosen
        .into_iter()
        .map(|c| {
            let parent = &parents[c.parent as usize];
            match c.ch {
                None => Hyp {
                    out: parent.out.clone(),
                    ctx: parent.ctx,
                    score: c.score,
                },
                Some(ch) => {
                    let mut out = Vec::with_capacity(parent.out.len() + 1);
                    out.extend_from_slice(&parent.out);
                    out.push(ch);
                    Hyp {
                        out,
                        ctx: lm.advance(parent.ctx, c.sym),
                        score: c.score,
                    }
                }
            }
        })
        .collect()
}

impl SequenceCorrector for NoisyChannelModel {
    fn correct(&self, slice: &WindowSlice, cfg: &DecodingConfig) -> Result<CorrectedWindow, CorrectorError> {
        let (output, score) = self.correct_text(&slice.text, cfg)?;
        Ok(CorrectedWindow {
            slice: slice.clone(),
            output,
            score,
        })
    }
}
