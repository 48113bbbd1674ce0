//! Orthographic normalization for Arabic social-media text.
//!
//! Diacritics and tatweel are dropped, the hamza-carrying alef forms fold to
//! bare alef, alef maqsura folds to ya, ta marbuta folds to ha, the result is
//! NFC and whitespace runs collapse to one space. Every output character keeps
//! the byte range of the original text it came from.

use std::ops::Range;

use serde::Serialize;
use unicode_normalization::char::{canonical_combining_class, compose};
use unicode_normalization::{is_nfc, UnicodeNormalization};

/// Normalized text plus a per-character map back into the source string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NormalizedText {
    text: String,
    /// `offsets[i]` is the source byte range for the i-th char of `text`.
    offsets: Vec<Range<usize>>,
    /// Byte index of each char of `text`, plus a trailing `text.len()`.
    #[serde(skip)]
    char_starts: Vec<usize>,
}

impl NormalizedText {
    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    pub fn offsets(&self) -> &[Range<usize>] {
        &self.offsets
    }

    /// Maps a byte range of the normalized text to the byte range of the
    /// source text it was produced from. Empty ranges map to an empty range.
    pub fn source_range(&self, range: Range<usize>) -> Range<usize> {
        let first = self.char_index(range.start);
        let last = self.char_index(range.end);
        if first >= last || first >= self.offsets.len() {
            let at = self
                .offsets
                .get(first)
                .map(|r| r.start)
                .or_else(|| self.offsets.last().map(|r| r.end))
                .unwrap_or(0);
            return at..at;
        }
        self.offsets[first].start..self.offsets[last - 1].end
    }

    fn char_index(&self, byte: usize) -> usize {
        match self.char_starts.binary_search(&byte) {
            Ok(i) => i,
            Err(i) => i,
        }
    }

    fn from_parts(text: String, offsets: Vec<Range<usize>>) -> Self {
        let mut char_starts: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
        char_starts.push(text.len());
        NormalizedText {
            text,
            offsets,
            char_starts,
        }
    }
}

fn fold(c: char) -> Option<char> {
    match c {
        // harakat, shadda, sukun, tatweel, stray hamza/madda marks, dagger alef
        '\u{064B}'..='\u{0655}' | '\u{0640}' | '\u{0670}' => None,
        '\u{0622}' | '\u{0623}' | '\u{0625}' => Some('\u{0627}'),
        '\u{0649}' => Some('\u{064A}'),
        '\u{0629}' => Some('\u{0647}'),
        _ => Some(c),
    }
}

/// Splits `text` into byte ranges whose NFC forms can be computed independently.
fn composition_clusters(text: &str) -> Vec<Range<usize>> {
    let mut clusters = Vec::new();
    let mut start = 0;
    let mut prev: Option<char> = None;
    for (i, c) in text.char_indices() {
        if let Some(p) = prev {
            if canonical_combining_class(c) == 0 && compose(p, c).is_none() {
                clusters.push(start..i);
                start = i;
            }
        }
        prev = Some(c);
    }
    if !text.is_empty() {
        clusters.push(start..text.len());
    }
    clusters
}

fn single_pass(source: &str) -> (String, Vec<Range<usize>>) {
    let mut out = String::with_capacity(source.len());
    let mut offsets = Vec::with_capacity(source.len());
    let mut pending_space: Option<Range<usize>> = None;

    for cluster in composition_clusters(source) {
        for c in source[cluster.clone()].nfc() {
            if c.is_whitespace() {
                if pending_space.is_none() {
                    pending_space = Some(cluster.clone());
                }
                continue;
            }
            let Some(f) = fold(c) else { continue };
            if let Some(space) = pending_space.take() {
                if !out.is_empty() {
                    out.push(' ');
                    offsets.push(space);
                }
            }
            out.push(f);
            offsets.push(cluster.clone());
        }
    }
    (out, offsets)
}

/// Normalizes `text`. Total and idempotent.
pub fn normalize(text: &str) -> NormalizedText {
    let (mut out, mut offsets) = single_pass(text);
    // Dropping marks can leave adjacent code points that compose on another pass.
    while !is_nfc(&out) {
        let (next, inner) = single_pass(&out);
        let starts: Vec<usize> = out.char_indices().map(|(i, _)| i).collect();
        offsets = inner
            .into_iter()
            .map(|r| {
                let a = starts.partition_point(|&s| s < r.start);
                let b = starts.partition_point(|&s| s < r.end);
                offsets[a].start..offsets[b - 1].end
            })
            .collect();
        out = next;
    }
    NormalizedText::from_parts(out, offsets)
}

/// Shorthand for callers that only need the normalized string.
pub fn normalize_str(text: &str) -> String {
    normalize(text).into_string()
}
