//! Test-only oracles that share no code with the decoder.

#![allow(dead_code)]

use ocr_ensemble_core::corrector::{DecodingConfig, NoisyChannelModel};
use ocr_ensemble_core::TrainingPair;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Best channel log-probability of producing `observed` from `truth`,
/// allowing at most `max_del` recovered deletions in a row between observed
/// characters. Characters unknown to the model may only be copied.
pub fn channel_score(model: &NoisyChannelModel, truth: &[char], observed: &[char], max_del: usize) -> f64 {
    let conf = model.confusion();
    let alphabet = conf.alphabet();
    let (n, m) = (observed.len(), truth.len());
    let neg = f64::NEG_INFINITY;
    // best[i][j][r]: consumed i observed, produced j true, r deletions in a row.
    let mut best = vec![vec![vec![neg; max_del + 1]; m + 1]; n + 1];
    best[0][0][0] = 0.0;
    for i in 0..=n {
        for j in 0..=m {
            for r in 0..=max_del {
                let here = best[i][j][r];
                if here == neg {
                    continue;
                }
                if i < n {
                    let o = observed[i];
                    let skip = here + conf.ins_char(o);
                    if skip > best[i + 1][j][0] {
                        best[i + 1][j][0] = skip;
                    }
                    if j < m {
                        let t = truth[j];
                        let allowed = alphabet.contains(t) || t == o;
                        if allowed {
                            let s = here + conf.sub_char(t, o);
                            if s > best[i + 1][j + 1][0] {
                                best[i + 1][j + 1][0] = s;
                            }
                        }
                    }
                }
                if j < m && r < max_del && alphabet.contains(truth[j]) {
                    let s = here + conf.del_char(truth[j]);
                    if s > best[i][j + 1][r + 1] {
                        best[i][j + 1][r + 1] = s;
                    }
                }
            }
        }
    }
    best[n][m].iter().copied().fold(neg, f64::max)
}

/// Full hypothesis score: channel plus weighted LM (including end symbol).
pub fn total_score(model: &NoisyChannelModel, truth: &str, observed: &str, max_del: usize) -> f64 {
    let t: Vec<char> = truth.chars().collect();
    let o: Vec<char> = observed.chars().collect();
    channel_score(model, &t, &o, max_del) + model.lm_weight() * model.lm().score(truth)
}

/// Every string over `alphabet` of length at most `max_len`.
pub fn all_strings(alphabet: &[char], max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut frontier = vec![String::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for &c in alphabet {
                let mut t = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Exhaustive argmax: highest score, ties to the smallest string.
pub fn exhaustive_best(model: &NoisyChannelModel, window: &str, cfg: &DecodingConfig) -> (String, f64) {
    let alphabet = model.confusion().alphabet().chars().to_vec();
    let max_len = cfg.max_output_len(window.chars().count());
    all_strings(&alphabet, max_len)
        .into_iter()
        .map(|s| {
            let score = total_score(model, &s, window, cfg.max_deletions);
            (s, score)
        })
        .filter(|(_, score)| score.is_finite())
        .min_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)))
        .expect("the empty string is always derivable")
}

/// Noisy copies of random strings over `alphabet`.
pub fn random_pairs(rng: &mut ChaCha8Rng, alphabet: &[char], n: usize, len: usize) -> Vec<TrainingPair> {
    (0..n)
        .map(|_| {
            let target: String = (0..len)
                .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
                .collect();
            let mut source = String::new();
            for c in target.chars() {
                let u: f64 = rng.gen();
                if u < 0.15 {
                    source.push(alphabet[rng.gen_range(0..alphabet.len())]);
                } else if u < 0.2 {
                } else if u < 0.25 {
                    source.push(alphabet[rng.gen_range(0..alphabet.len())]);
                    source.push(c);
                } else {
                    source.push(c);
                }
            }
            TrainingPair::new(source, target)
        })
        .collect()
}

/// A small random model over the first `alphabet_size` letters.
pub fn random_model(seed: u64, alphabet_size: usize, lm_order: usize) -> NoisyChannelModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet: Vec<char> = "abcde".chars().take(alphabet_size).collect();
    let pairs = random_pairs(&mut rng, &alphabet, 30, 8);
    // Skewed LM text so the prior actually prefers some strings.
    let lm_texts: Vec<String> = (0..20)
        .map(|_| {
            (0..10)
                .map(|i| {
                    if rng.gen_bool(0.7) {
                        alphabet[i % alphabet.len()]
                    } else {
                        alphabet[rng.gen_range(0..alphabet.len())]
                    }
                })
                .collect()
        })
        .collect();
    let params = ocr_ensemble_core::corrector::ModelParams {
        lm_order,
        k: 0.3,
        lm_weight: rng.gen_range(0.5..1.5),
    };
    NoisyChannelModel::train(&pairs, &lm_texts, params).unwrap()
}

/// Random window over the model alphabet.
pub fn random_window(rng: &mut ChaCha8Rng, model: &NoisyChannelModel, max_len: usize) -> String {
    let alphabet = model.confusion().alphabet().chars();
    let len = rng.gen_range(1..=max_len);
    (0..len)
        .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
        .collect()
}

/// Width large enough that no hypothesis is ever pruned.
pub fn saturating_width(alphabet_size: usize, max_len: usize) -> usize {
    (0..=max_len).map(|l| alphabet_size.pow(l as u32)).sum()
}
