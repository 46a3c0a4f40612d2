//! Text serialization of [`NoisyChannelModel`] (`POCRM1`).
//!
//! The file stores counts and smoothing constants, never derived
//! log-probabilities, so loading recomputes every score exactly. Floats are
//! written as the 16 hex digits of their IEEE-754 bit pattern.
//!
//! ```text
//! POCRM1
//! version 1
//! lm_weight 3ff0000000000000
//! alphabet 3 20 61 62              # count, then hex code points
//! confusion_k 3fb999999999999a
//! sub 1 1 412                      # true-index observed-index count
//! del 0 3                          # true-index count
//! ins 2 7                          # observed-index count
//! no_ins 1200
//! lm_order 5
//! lm_k 3fb999999999999a
//! ctx 00000000000000000005000500050005 0:12 1:3
//! end
//! ```
//!
//! Indices refer to the sorted alphabet; index `A` is the unknown bucket,
//! and in `ctx` lines `A + 1` is end-of-text. Zero counts are omitted.
//! Lines appear in the order shown; `ctx` keys are hex `u128`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use super::alphabet::Alphabet;
use super::confusion::{ConfusionCounts, ConfusionModel};
use super::lm::{CharLm, Context};
use super::{CorrectorError, NoisyChannelModel};

/// Magic first line.
pub const MAGIC: &str = "POCRM1";
/// Format version written by this build.
pub const VERSION: u32 = 1;

fn hex_f64(x: f64) -> String {
    format!("{:016x}", x.to_bits())
}

/// Serializes a model.
pub fn to_text(model: &NoisyChannelModel) -> String {
    let mut out = String::new();
    let conf = model.confusion();
    let lm = model.lm();
    let alphabet = conf.alphabet();
    let symbols = alphabet.len() + 1;
    // Writing into a String cannot fail.
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "version {VERSION}");
    let _ = writeln!(out, "lm_weight {}", hex_f64(model.lm_weight()));
    let _ = write!(out, "alphabet {}", alphabet.len());
    for &c in alphabet.chars() {
        let _ = write!(out, " {:x}", c as u32);
    }
    out.push('\n');
    let _ = writeln!(out, "confusion_k {}", hex_f64(conf.k()));
    let counts = conf.counts();
    for t in 0..symbols {
        for o in 0..symbols {
            let c = counts.sub[t * symbols + o];
            if c > 0 {
                let _ = writeln!(out, "sub {t} {o} {c}");
            }
        }
    }
    for (t, &c) in counts.del.iter().enumerate().filter(|(_, &c)| c > 0) {
        let _ = writeln!(out, "del {t} {c}");
    }
    for (o, &c) in counts.ins.iter().enumerate().filter(|(_, &c)| c > 0) {
        let _ = writeln!(out, "ins {o} {c}");
    }
    let _ = writeln!(out, "no_ins {}", counts.no_ins);
    let _ = writeln!(out, "lm_order {}", lm.order());
    let _ = writeln!(out, "lm_k {}", hex_f64(lm.k()));
    for (ctx, outcomes) in lm.counts() {
        let _ = write!(out, "ctx {ctx:032x}");
        for &(sym, c) in outcomes {
            let _ = write!(out, " {sym}:{c}");
        }
        out.push('\n');
    }
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    inner: core::iter::Peekable<core::iter::Enumerate<core::str::Lines<'a>>>,
}

impl<'a> Lines<'a> {
    fn corrupt(line: usize, what: &str) -> CorrectorError {
        CorrectorError::CorruptFile(format!("line {}: {what}", line + 1))
    }

    /// Next line, which must start with `key`; returns its fields.
    fn expect(&mut self, key: &str) -> Result<(usize, Vec<&'a str>), CorrectorError> {
        let (n, line) = self
            .inner
            .next()
            .ok_or_else(|| CorrectorError::CorruptFile(format!("missing {key:?} line")))?;
        let mut fields = line.split_ascii_whitespace();
        if fields.next() != Some(key) {
            return Err(Self::corrupt(n, &format!("expected {key:?}")));
        }
        Ok((n, fields.collect()))
    }

    /// Consumes lines while they start with `key`.
    fn take_while(&mut self, key: &str) -> Vec<(usize, Vec<&'a str>)> {
        let mut found = Vec::new();
        while let Some((n, line)) = self
            .inner
            .next_if(|(_, l)| l.split_ascii_whitespace().next() == Some(key))
        {
            found.push((n, line.split_ascii_whitespace().skip(1).collect()));
        }
        found
    }
}

fn parse_num<T: core::str::FromStr>(n: usize, s: &str) -> Result<T, CorrectorError> {
    s.parse()
        .map_err(|_| Lines::corrupt(n, &format!("bad number {s:?}")))
}

fn parse_f64(n: usize, s: &str) -> Result<f64, CorrectorError> {
    if s.len() != 16 {
        return Err(Lines::corrupt(n, "float must be 16 hex digits"));
    }
    u64::from_str_radix(s, 16)
        .map(f64::from_bits)
        .map_err(|_| Lines::corrupt(n, &format!("bad float {s:?}")))
}

fn single<'a>(n: usize, fields: &[&'a str]) -> Result<&'a str, CorrectorError> {
    match fields {
        [one] => Ok(one),
        _ => Err(Lines::corrupt(n, "expected exactly one value")),
    }
}

fn index(n: usize, s: &str, bound: usize) -> Result<usize, CorrectorError> {
    let i: usize = parse_num(n, s)?;
    if i >= bound {
        return Err(Lines::corrupt(n, "index out of range"));
    }
    Ok(i)
}

/// Parses a model. Rejects newer versions with
/// [`CorrectorError::VersionMismatch`] and anything malformed with
/// [`CorrectorError::CorruptFile`].
pub fn from_text(text: &str) -> Result<NoisyChannelModel, CorrectorError> {
    let mut lines = Lines {
        inner: text.lines().enumerate().peekable(),
    };
    match lines.inner.next() {
        Some((_, MAGIC)) => {}
        _ => return Err(CorrectorError::CorruptFile("missing POCRM1 header".to_string())),
    }
    let (n, fields) = lines.expect("version")?;
    let version: u32 = parse_num(n, single(n, &fields)?)?;
    if version > VERSION {
        return Err(CorrectorError::VersionMismatch {
            found: version,
            supported: VERSION,
        });
    }
    if version == 0 {
        return Err(Lines::corrupt(n, "version 0 does not exist"));
    }
    let (n, fields) = lines.expect("lm_weight")?;
    let lm_weight = parse_f64(n, single(n, &fields)?)?;

    let (n, fields) = lines.expect("alphabet")?;
    let (count, chars) = fields
        .split_first()
        .ok_or_else(|| Lines::corrupt(n, "empty alphabet line"))?;
    let count: usize = parse_num(n, count)?;
    if chars.len() != count {
        return Err(Lines::corrupt(n, "alphabet count does not match"));
    }
    let chars = chars
        .iter()
        .map(|h| {
            u32::from_str_radix(h, 16)
                .ok()
                .and_then(char::from_u32)
                .ok_or_else(|| Lines::corrupt(n, &format!("bad code point {h:?}")))
        })
        .collect::<Result<Vec<char>, _>>()?;
    if chars.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Lines::corrupt(n, "alphabet must be strictly increasing"));
    }
    let alphabet = Alphabet::from_chars(chars);
    let symbols = alphabet.len() + 1;

    let (n, fields) = lines.expect("confusion_k")?;
    let confusion_k = parse_f64(n, single(n, &fields)?)?;
    let mut counts = ConfusionCounts {
        sub: alloc::vec![0; symbols * symbols],
        del: alloc::vec![0; symbols],
        ins: alloc::vec![0; symbols],
        no_ins: 0,
    };
    for (n, fields) in lines.take_while("sub") {
        let [t, o, c] = fields[..] else {
            return Err(Lines::corrupt(n, "sub needs three values"));
        };
        let (t, o) = (index(n, t, symbols)?, index(n, o, symbols)?);
        counts.sub[t * symbols + o] = parse_num(n, c)?;
    }
    for (key, table) in [("del", &mut counts.del), ("ins", &mut counts.ins)] {
        for (n, fields) in lines.take_while(key) {
            let [i, c] = fields[..] else {
                return Err(Lines::corrupt(n, "expected index and count"));
            };
            table[index(n, i, symbols)?] = parse_num(n, c)?;
        }
    }
    let (n, fields) = lines.expect("no_ins")?;
    counts.no_ins = parse_num(n, single(n, &fields)?)?;
    let confusion = ConfusionModel::from_counts(alphabet.clone(), confusion_k, counts)
        .map_err(|e| CorrectorError::CorruptFile(e.to_string()))?;

    let (n, fields) = lines.expect("lm_order")?;
    let order: usize = parse_num(n, single(n, &fields)?)?;
    let (n, fields) = lines.expect("lm_k")?;
    let lm_k = parse_f64(n, single(n, &fields)?)?;
    let mut contexts: Vec<(Context, Vec<(u32, u64)>)> = Vec::new();
    for (n, fields) in lines.take_while("ctx") {
        let (key, outcomes) = fields
            .split_first()
            .ok_or_else(|| Lines::corrupt(n, "ctx without key"))?;
        let ctx = u128::from_str_radix(key, 16)
            .map_err(|_| Lines::corrupt(n, &format!("bad context key {key:?}")))?;
        let outcomes = outcomes
            .iter()
            .map(|pair| {
                let (sym, c) = pair
                    .split_once(':')
                    .ok_or_else(|| Lines::corrupt(n, "outcome must be sym:count"))?;
                Ok((index(n, sym, symbols + 1)? as u32, parse_num(n, c)?))
            })
            .collect::<Result<Vec<_>, CorrectorError>>()?;
        contexts.push((ctx, outcomes));
    }
    let lm = CharLm::from_counts(alphabet, order, lm_k, contexts)
        .map_err(|e| CorrectorError::CorruptFile(e.to_string()))?;
    lines.expect("end")?;
    if let Some((n, _)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Lines::corrupt(n, "trailing content after end"));
    }
    NoisyChannelModel::new(confusion, lm, lm_weight).map_err(|e| CorrectorError::CorruptFile(e.to_string()))
}
