//! Minimal unit-cost edit alignment between a source window and a rewrite
//! of it.
//!
//! The same alignment drives confusion-model training and the vote merge,
//! so ties between optimal alignments are broken identically everywhere:
//! walking back from the end, a match is preferred over a substitution,
//! then a deletion of a source character, then an insertion.

use alloc::vec;
use alloc::vec::Vec;

/// One step of an alignment. Source positions are 1-indexed within the
/// source string; `Insert { after: 0, .. }` inserts before the first
/// character.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EditEvent {
    /// Source character copied unchanged.
    Keep {
        /// Source position.
        src_pos: usize,
        /// The character.
        ch: char,
    },
    /// Source character replaced by `ch`.
    Subst {
        /// Source position.
        src_pos: usize,
        /// Replacement in the output.
        ch: char,
    },
    /// Source character dropped.
    Delete {
        /// Source position.
        src_pos: usize,
    },
    /// Output character with no source counterpart.
    Insert {
        /// Source position it follows (0 = before the first character).
        after: usize,
        /// Inserted character.
        ch: char,
    },
}

/// An ordered edit script turning a source string into an output string.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EditAlignment {
    /// Events in source order.
    pub events: Vec<EditEvent>,
}

impl EditAlignment {
    /// Number of non-keep events.
    pub fn cost(&self) -> usize {
        self.events
            .iter()
            .filter(|e| !matches!(e, EditEvent::Keep { .. }))
            .count()
    }

    /// Rebuilds the output string.
    pub fn output(&self) -> alloc::string::String {
        self.events
            .iter()
            .filter_map(|e| match *e {
                EditEvent::Keep { ch, .. } | EditEvent::Subst { ch, .. } | EditEvent::Insert { ch, .. } => {
                    Some(ch)
                }
                EditEvent::Delete { .. } => None,
            })
            .collect()
    }
}

/// Aligns `source` to `output` with minimal unit-cost edit distance.
pub fn align_to_source(source: &str, output: &str) -> EditAlignment {
    let src: Vec<char> = source.chars().collect();
    let out: Vec<char> = output.chars().collect();
    align_chars(&src, &out)
}

/// [`align_to_source`] on pre-split character slices.
pub fn align_chars(src: &[char], out: &[char]) -> EditAlignment {
    let (n, m) = (src.len(), out.len());
    let cols = m + 1;
    let mut dist = vec![0u32; (n + 1) * cols];
    for (j, d) in dist[..cols].iter_mut().enumerate() {
        *d = j as u32;
    }
    for i in 1..=n {
        let row = i * cols;
        dist[row] = i as u32;
        for j in 1..=m {
            let diag = dist[row - cols + j - 1] + u32::from(src[i - 1] != out[j - 1]);
            let up = dist[row - cols + j] + 1;
            let left = dist[row + j - 1] + 1;
            dist[row + j] = diag.min(up).min(left);
        }
    }

    let mut events = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dist[i * cols + j];
        if i > 0 && j > 0 {
            let diag = dist[(i - 1) * cols + j - 1];
            if src[i - 1] == out[j - 1] && here == diag {
                events.push(EditEvent::Keep {
                    src_pos: i,
                    ch: out[j - 1],
                });
                i -= 1;
                j -= 1;
                continue;
            }
            if src[i - 1] != out[j - 1] && here == diag + 1 {
                events.push(EditEvent::Subst {
                    src_pos: i,
                    ch: out[j - 1],
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && here == dist[(i - 1) * cols + j] + 1 {
            events.push(EditEvent::Delete { src_pos: i });
            i -= 1;
        } else {
            events.push(EditEvent::Insert {
                after: i,
                ch: out[j - 1],
            });
            j -= 1;
        }
    }
    events.reverse();
    EditAlignment { events }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::levenshtein;
    use proptest::prelude::*;
    use EditEvent::*;

    #[test]
    fn identity() {
        assert_eq!(
            align_to_source("abc", "abc").events,
            [
                Keep { src_pos: 1, ch: 'a' },
                Keep { src_pos: 2, ch: 'b' },
                Keep { src_pos: 3, ch: 'c' }
            ]
        );
    }

    #[test]
    fn substitution() {
        assert_eq!(
            align_to_source("abe", "abc").events,
            [
                Keep { src_pos: 1, ch: 'a' },
                Keep { src_pos: 2, ch: 'b' },
                Subst { src_pos: 3, ch: 'c' }
            ]
        );
    }

    #[test]
    fn insertion() {
        assert_eq!(
            align_to_source("abde", "abcde").events,
            [
                Keep { src_pos: 1, ch: 'a' },
                Keep { src_pos: 2, ch: 'b' },
                Insert { after: 2, ch: 'c' },
                Keep { src_pos: 3, ch: 'd' },
                Keep { src_pos: 4, ch: 'e' }
            ]
        );
    }

    #[test]
    fn empty_sides() {
        assert_eq!(
            align_to_source("", "ab").events,
            [Insert { after: 0, ch: 'a' }, Insert { after: 0, ch: 'b' }]
        );
        assert_eq!(
            align_to_source("ab", "").events,
            [Delete { src_pos: 1 }, Delete { src_pos: 2 }]
        );
    }

    #[test]
    fn substitution_beats_delete_insert() {
        // "ab" -> "ax": Subst(2) costs 1, Delete+Insert costs 2.
        assert_eq!(align_to_source("ab", "ax").cost(), 1);
    }

    proptest! {
        #[test]
        fn events_are_well_formed(src in "[abc]{0,10}", out in "[abc]{0,10}") {
            let al = align_to_source(&src, &out);
            prop_assert_eq!(al.output(), out.clone());
            prop_assert_eq!(al.cost(), levenshtein(&src, &out));
            let positions: Vec<usize> = al
                .events
                .iter()
                .filter_map(|e| match *e {
                    Keep { src_pos, .. } | Subst { src_pos, .. } | Delete { src_pos } => Some(src_pos),
                    Insert { .. } => None,
                })
                .collect();
            let expected: Vec<usize> = (1..=src.chars().count()).collect();
            prop_assert_eq!(positions, expected);
            let src_chars: Vec<char> = src.chars().collect();
            for e in &al.events {
                match *e {
                    Keep { src_pos, ch } => prop_assert_eq!(src_chars[src_pos - 1], ch),
                    Subst { src_pos, ch } => prop_assert_ne!(src_chars[src_pos - 1], ch),
                    _ => {}
                }
            }
            let mut last_after = 0;
            let mut seen = 0;
            for e in &al.events {
                match *e {
                    Insert { after, .. } => {
                        prop_assert_eq!(after, seen);
                        prop_assert!(after >= last_after);
                        last_after = after;
                    }
                    _ => seen += 1,
                }
            }
        }
    }
}
