//! Add-k smoothed character n-gram language model.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::alphabet::Alphabet;
use super::CorrectorError;

/// Longest supported order: contexts pack into a `u128`, 16 bits per symbol.
pub const MAX_ORDER: usize = 9;

const SYMBOL_BITS: u32 = 16;
const SYMBOL_MASK: u128 = 0xffff;

/// Packed history of the last `order - 1` symbols.
pub type Context = u128;

/// Counts seen after one context.
#[derive(Debug, Clone, PartialEq)]
struct ContextEntry {
    total: u64,
    /// Sorted by symbol.
    outcomes: Vec<(u32, u64)>,
    /// `ln P(symbol | context)` aligned with `outcomes`.
    log_probs: Vec<f64>,
    /// `ln P` of any outcome with zero count.
    unseen: f64,
}

/// Character n-gram model over the alphabet plus an unknown bucket and an
/// end-of-text symbol; histories are padded with a begin symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct CharLm {
    alphabet: Alphabet,
    order: usize,
    k: f64,
    contexts: BTreeMap<Context, ContextEntry>,
    uniform: f64,
}

impl CharLm {
    /// Trains on the alphabet of `texts`.
    pub fn train<S: AsRef<str>>(texts: &[S], order: usize, k: f64) -> Result<Self, CorrectorError> {
        let alphabet = Alphabet::from_texts(texts.iter().map(AsRef::as_ref));
        Self::train_with_alphabet(texts, order, k, alphabet)
    }

    /// Trains with a fixed alphabet; other characters hit the unknown bucket.
    pub fn train_with_alphabet<S: AsRef<str>>(
        texts: &[S],
        order: usize,
        k: f64,
        alphabet: Alphabet,
    ) -> Result<Self, CorrectorError> {
        if texts.is_empty() {
            return Err(CorrectorError::EmptyTraining);
        }
        let mut counts: BTreeMap<Context, BTreeMap<u32, u64>> = BTreeMap::new();
        let shell = Self::empty(alphabet, order, k)?;
        for text in texts {
            let mut ctx = shell.begin();
            for c in text.as_ref().chars() {
                let sym = shell.symbol(c);
                *counts.entry(ctx).or_default().entry(sym).or_default() += 1;
                ctx = shell.advance(ctx, sym);
            }
            *counts
                .entry(ctx)
                .or_default()
                .entry(shell.end_symbol())
                .or_default() += 1;
        }
        let counts = counts
            .into_iter()
            .map(|(ctx, outcomes)| (ctx, outcomes.into_iter().collect()))
            .collect();
        Self::from_counts(shell.alphabet, order, k, counts)
    }

    fn empty(alphabet: Alphabet, order: usize, k: f64) -> Result<Self, CorrectorError> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(CorrectorError::InvalidOrder(order));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(CorrectorError::InvalidSmoothing(k));
        }
        if alphabet.len() + 3 > SYMBOL_MASK as usize {
            return Err(CorrectorError::AlphabetTooLarge(alphabet.len()));
        }
        let outcomes = (alphabet.len() + 2) as f64;
        Ok(Self {
            alphabet,
            order,
            k,
            contexts: BTreeMap::new(),
            uniform: -libm::log(outcomes),
        })
    }

    /// Rebuilds a model from per-context outcome counts.
    pub fn from_counts(
        alphabet: Alphabet,
        order: usize,
        k: f64,
        counts: Vec<(Context, Vec<(u32, u64)>)>,
    ) -> Result<Self, CorrectorError> {
        let mut lm = Self::empty(alphabet, order, k)?;
        let outcomes = (lm.alphabet.len() + 2) as f64;
        for (ctx, mut outcomes_seen) in counts {
            outcomes_seen.sort_unstable();
            if outcomes_seen
                .iter()
                .any(|&(sym, _)| sym as usize > lm.alphabet.len() + 1)
            {
                return Err(CorrectorError::CountShape);
            }
            let total: u64 = outcomes_seen.iter().map(|&(_, c)| c).sum();
            let ln_denom = libm::log(total as f64 + k * outcomes);
            let log_probs = outcomes_seen
                .iter()
                .map(|&(_, c)| libm::log(c as f64 + k) - ln_denom)
                .collect();
            lm.contexts.insert(
                ctx,
                ContextEntry {
                    total,
                    outcomes: outcomes_seen,
                    log_probs,
                    unseen: libm::log(k) - ln_denom,
                },
            );
        }
        Ok(lm)
    }

    /// Alphabet the model was trained with.
    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// n-gram order.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Smoothing constant.
    pub fn k(&self) -> f64 {
        self.k
    }

    /// Number of distinct outcomes: known characters, unknown, end.
    pub fn outcome_count(&self) -> usize {
        self.alphabet.len() + 2
    }

    /// Stored counts, in context order.
    pub fn counts(&self) -> impl Iterator<Item = (Context, &[(u32, u64)])> {
        self.contexts.iter().map(|(&ctx, e)| (ctx, e.outcomes.as_slice()))
    }

    /// Symbol index of a character (unknown bucket if unseen).
    #[inline]
    pub fn symbol(&self, c: char) -> u32 {
        self.alphabet.index(c) as u32
    }

    /// Symbol index of the end-of-text outcome.
    #[inline]
    pub fn end_symbol(&self) -> u32 {
        self.alphabet.len() as u32 + 1
    }

    fn begin_symbol(&self) -> u32 {
        self.alphabet.len() as u32 + 2
    }

    fn context_mask(&self) -> u128 {
        let bits = SYMBOL_BITS * (self.order as u32 - 1);
        if bits == 0 {
            0
        } else {
            (1u128 << bits) - 1
        }
    }

    /// Context at the start of a text.
    pub fn begin(&self) -> Context {
        let begin = u128::from(self.begin_symbol());
        (0..self.order - 1).fold(0, |ctx, _| (ctx << SYMBOL_BITS) | begin)
    }

    /// Shifts `sym` into the context.
    #[inline]
    pub fn advance(&self, ctx: Context, sym: u32) -> Context {
        ((ctx << SYMBOL_BITS) | u128::from(sym)) & self.context_mask()
    }

    /// `ln P(sym | ctx)`.
    pub fn log_prob(&self, ctx: Context, sym: u32) -> f64 {
        match self.contexts.get(&ctx) {
            None => self.uniform,
            Some(entry) => match entry.outcomes.binary_search_by_key(&sym, |&(s, _)| s) {
                Ok(i) => entry.log_probs[i],
                Err(_) => entry.unseen,
            },
        }
    }

    /// Writes `ln P(sym | ctx)` for every outcome symbol into `out`.
    pub fn fill_log_probs(&self, ctx: Context, out: &mut Vec<f64>) {
        out.clear();
        match self.contexts.get(&ctx) {
            None => out.resize(self.outcome_count(), self.uniform),
            Some(entry) => {
                out.resize(self.outcome_count(), entry.unseen);
                for (&(sym, _), &lp) in entry.outcomes.iter().zip(&entry.log_probs) {
                    out[sym as usize] = lp;
                }
            }
        }
    }

    /// Log-probability of `s` followed by the end symbol.
    pub fn score(&self, s: &str) -> f64 {
        let mut ctx = self.begin();
        let mut total = 0.0;
        for c in s.chars() {
            let sym = self.symbol(c);
            total += self.log_prob(ctx, sym);
            ctx = self.advance(ctx, sym);
        }
        total + self.log_prob(ctx, self.end_symbol())
    }

    /// Number of contexts with stored counts.
    pub fn context_count(&self) -> usize {
        self.contexts.len()
    }

    #[cfg(test)]
    fn total(&self, ctx: Context) -> u64 {
        self.contexts.get(&ctx).map_or(0, |e| e.total)
    }
}
