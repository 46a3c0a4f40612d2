//! Character confusion channel: how a true character is rendered by OCR.

use alloc::vec;
use alloc::vec::Vec;

use super::alphabet::Alphabet;
use super::CorrectorError;
use crate::align::{align_to_source, EditEvent};
use crate::textdata::TrainingPair;

/// Raw event counts of a confusion channel, indexed by alphabet position
/// with the unknown bucket last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionCounts {
    /// `sub[t * (A + 1) + o]`: true `t` observed as `o` (matches included).
    pub sub: Vec<u64>,
    /// True character observed as nothing.
    pub del: Vec<u64>,
    /// Observed character with no true source.
    pub ins: Vec<u64>,
    /// Observed characters that did have a true source.
    pub no_ins: u64,
}

impl ConfusionCounts {
    fn zeros(symbols: usize) -> Self {
        Self {
            sub: vec![0; symbols * symbols],
            del: vec![0; symbols],
            ins: vec![0; symbols],
            no_ins: 0,
        }
    }
}

/// Add-k smoothed confusion probabilities, stored as natural logs.
///
/// For every true symbol `t`, the substitution row plus the deletion
/// probability sums to one. Spurious insertions form a second
/// distribution over observed symbols plus a "no insertion" outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionModel {
    alphabet: Alphabet,
    k: f64,
    counts: ConfusionCounts,
    sub: Vec<f64>,
    del: Vec<f64>,
    ins: Vec<f64>,
    no_ins: f64,
}

impl ConfusionModel {
    /// Trains on the alphabet of the pairs themselves.
    pub fn train(pairs: &[TrainingPair], k: f64) -> Result<Self, CorrectorError> {
        let alphabet =
            Alphabet::from_texts(pairs.iter().flat_map(|p| [p.source.as_str(), p.target.as_str()]));
        Self::train_with_alphabet(pairs, k, alphabet)
    }

    /// Trains with a fixed alphabet; characters outside it count towards the
    /// unknown bucket.
    pub fn train_with_alphabet(
        pairs: &[TrainingPair],
        k: f64,
        alphabet: Alphabet,
    ) -> Result<Self, CorrectorError> {
        if pairs.is_empty() {
            return Err(CorrectorError::EmptyTraining);
        }
        let symbols = alphabet.len() + 1;
        let mut counts = ConfusionCounts::zeros(symbols);
        for pair in pairs {
            let src: Vec<char> = pair.source.chars().collect();
            for event in align_to_source(&pair.source, &pair.target).events {
                match event {
                    EditEvent::Keep { src_pos, ch } | EditEvent::Subst { src_pos, ch } => {
                        let t = alphabet.index(ch);
                        let o = alphabet.index(src[src_pos - 1]);
                        counts.sub[t * symbols + o] += 1;
                        counts.no_ins += 1;
                    }
                    EditEvent::Delete { src_pos } => {
                        counts.ins[alphabet.index(src[src_pos - 1])] += 1;
                    }
                    EditEvent::Insert { ch, .. } => {
                        counts.del[alphabet.index(ch)] += 1;
                    }
                }
            }
        }
        Self::from_counts(alphabet, k, counts)
    }

    /// Rebuilds a model from stored counts.
    pub fn from_counts(alphabet: Alphabet, k: f64, counts: ConfusionCounts) -> Result<Self, CorrectorError> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(CorrectorError::InvalidSmoothing(k));
        }
        let symbols = alphabet.len() + 1;
        if counts.sub.len() != symbols * symbols || counts.del.len() != symbols || counts.ins.len() != symbols
        {
            return Err(CorrectorError::CountShape);
        }
        // Outcomes per true symbol: every observed symbol plus deletion.
        let row_outcomes = (symbols + 1) as f64;
        let mut sub = vec![0.0; symbols * symbols];
        let mut del = vec![0.0; symbols];
        for t in 0..symbols {
            let row = &counts.sub[t * symbols..(t + 1) * symbols];
            let total: u64 = row.iter().sum::<u64>() + counts.del[t];
            let ln_denom = libm::log(total as f64 + k * row_outcomes);
            for (o, &c) in row.iter().enumerate() {
                sub[t * symbols + o] = libm::log(c as f64 + k) - ln_denom;
            }
            del[t] = libm::log(counts.del[t] as f64 + k) - ln_denom;
        }
        let ins_total: u64 = counts.ins.iter().sum::<u64>() + counts.no_ins;
        let ln_denom = libm::log(ins_total as f64 + k * (symbols + 1) as f64);
        let ins = counts
            .ins
            .iter()
            .map(|&c| libm::log(c as f64 + k) - ln_denom)
            .collect();
        let no_ins = libm::log(counts.no_ins as f64 + k) - ln_denom;
        Ok(Self {
            alphabet,
            k,
            counts,
            sub,
            del,
            ins,
            no_ins,
        })
    }

    /// Shared alphabet.
    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Smoothing constant.
    pub fn k(&self) -> f64 {
        self.k
    }

    /// Raw counts the model was estimated from.
    pub fn counts(&self) -> &ConfusionCounts {
        &self.counts
    }

    /// `ln P(observed o | true t)`, by symbol index.
    #[inline]
    pub fn sub(&self, t: usize, o: usize) -> f64 {
        self.sub[t * (self.alphabet.len() + 1) + o]
    }

    /// `ln P(true t is dropped)`.
    #[inline]
    pub fn del(&self, t: usize) -> f64 {
        self.del[t]
    }

    /// `ln P(spurious observed o)`.
    #[inline]
    pub fn ins(&self, o: usize) -> f64 {
        self.ins[o]
    }

    /// `ln P(no spurious character)`.
    pub fn no_ins(&self) -> f64 {
        self.no_ins
    }

    /// Character-level convenience over [`ConfusionModel::sub`].
    pub fn sub_char(&self, t: char, o: char) -> f64 {
        self.sub(self.alphabet.index(t), self.alphabet.index(o))
    }

    /// Character-level convenience over [`ConfusionModel::del`].
    pub fn del_char(&self, t: char) -> f64 {
        self.del(self.alphabet.index(t))
    }

    /// Character-level convenience over [`ConfusionModel::ins`].
    pub fn ins_char(&self, o: char) -> f64 {
        self.ins(self.alphabet.index(o))
    }
}
