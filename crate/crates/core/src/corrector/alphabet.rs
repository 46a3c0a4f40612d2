use alloc::collections::BTreeSet;
use alloc::vec::Vec;

/// Sorted set of known characters. Index `len()` is the unknown bucket.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alphabet {
    chars: Vec<char>,
}

impl Alphabet {
    /// Builds the alphabet of every character in `texts`.
    pub fn from_texts<'a, I: IntoIterator<Item = &'a str>>(texts: I) -> Self {
        let set: BTreeSet<char> = texts.into_iter().flat_map(str::chars).collect();
        Self {
            chars: set.into_iter().collect(),
        }
    }

    /// Builds an alphabet from arbitrary characters; duplicates are removed.
    pub fn from_chars<I: IntoIterator<Item = char>>(chars: I) -> Self {
        let set: BTreeSet<char> = chars.into_iter().collect();
        Self {
            chars: set.into_iter().collect(),
        }
    }

    /// Known characters in code point order.
    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    /// Number of known characters.
    pub fn len(&self) -> usize {
        self.chars.len()
    }

    /// True when no character is known.
    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    /// Index of the unknown bucket.
    pub fn unknown(&self) -> usize {
        self.chars.len()
    }

    /// Index of `c`, or the unknown bucket.
    pub fn index(&self, c: char) -> usize {
        self.chars.binary_search(&c).unwrap_or(self.chars.len())
    }

    /// Whether `c` is a known character.
    pub fn contains(&self, c: char) -> bool {
        self.chars.binary_search(&c).is_ok()
    }
}
