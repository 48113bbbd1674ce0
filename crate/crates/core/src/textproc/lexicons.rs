//! Line-oriented word lists and the three-class emoji lexicon.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::normalize::normalize_str;
use super::tokenize::emoji_key;
use crate::error::{read_to_string, Result};

const PREFIXES: &[&str] = &["", "و", "ف", "ب", "ل", "ك", "ال", "وال", "بال", "فال", "لل", "ولل"];
const SUFFIXES: &[&str] = &[
    "", "ك", "كم", "كوا", "كي", "ه", "ها", "هم", "هن", "نا", "ي", "ين", "ون", "ات",
];
/// Entries at least this many characters long also match as substrings.
const CONTAINMENT_MIN_CHARS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchMode {
    /// Token must equal an entry.
    Exact,
    /// Token may carry a proclitic and/or pronoun suffix around an entry.
    Affixed,
}

/// A set of normalized words, loaded from a file with one entry per line.
#[derive(Debug, Clone)]
pub struct WordList {
    entries: HashSet<String>,
    mode: MatchMode,
}

fn entry_lines(content: &str) -> impl Iterator<Item = &str> {
    content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

impl WordList {
    pub fn new<I, S>(words: I, mode: MatchMode) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let entries = words
            .into_iter()
            .map(|w| normalize_str(w.as_ref()))
            .filter(|w| !w.is_empty())
            .collect();
        WordList { entries, mode }
    }

    pub fn load(path: impl AsRef<Path>, mode: MatchMode) -> Result<Self> {
        let content = read_to_string(path.as_ref())?;
        Ok(Self::new(entry_lines(&content), mode))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `token` must already be normalized.
    pub fn matches(&self, token: &str) -> bool {
        if self.entries.contains(token) {
            return true;
        }
        if self.mode == MatchMode::Exact {
            return false;
        }
        for prefix in PREFIXES {
            let Some(rest) = token.strip_prefix(prefix) else {
                continue;
            };
            for suffix in SUFFIXES {
                let Some(stem) = rest.strip_suffix(suffix) else {
                    continue;
                };
                if stem.chars().count() >= 2 && self.entries.contains(stem) {
                    return true;
                }
            }
        }
        self.entries
            .iter()
            .any(|e| e.chars().count() >= CONTAINMENT_MIN_CHARS && token.contains(e.as_str()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmojiClass {
    Pleasant,
    Unpleasant,
    Other,
}

#[derive(Debug, Clone, Default)]
pub struct EmojiLexicon {
    pleasant: HashSet<String>,
    unpleasant: HashSet<String>,
}

impl EmojiLexicon {
    pub fn new<P, U, S, T>(pleasant: P, unpleasant: U) -> Self
    where
        P: IntoIterator<Item = S>,
        U: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        EmojiLexicon {
            pleasant: pleasant.into_iter().map(|e| emoji_key(e.as_ref())).collect(),
            unpleasant: unpleasant.into_iter().map(|e| emoji_key(e.as_ref())).collect(),
        }
    }

    pub fn load(pleasant: impl AsRef<Path>, unpleasant: impl AsRef<Path>) -> Result<Self> {
        let p = read_to_string(pleasant.as_ref())?;
        let u = read_to_string(unpleasant.as_ref())?;
        Ok(Self::new(entry_lines(&p), entry_lines(&u)))
    }

    pub fn classify(&self, emoji: &str) -> EmojiClass {
        let key = emoji_key(emoji);
        // an entry listed in both files counts as unpleasant
        if self.unpleasant.contains(&key) {
            EmojiClass::Unpleasant
        } else if self.pleasant.contains(&key) {
            EmojiClass::Pleasant
        } else {
            EmojiClass::Other
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_mode_ignores_affixes() {
        let l = WordList::new(["ان", "لو"], MatchMode::Exact);
        assert!(l.matches("ان"));
        assert!(!l.matches("انت"));
        assert!(!l.matches("ولو"));
    }

    #[test]
    fn affixed_mode_strips_clitics() {
        let l = WordList::new(["جمهور", "قفا", "راس"], MatchMode::Affixed);
        assert!(l.matches("جمهوركم"));
        assert!(!l.matches("وبين"));
        assert!(l.matches("قفاكم"));
        assert!(l.matches("براسك"));
        assert!(!l.matches("رسالة"));
    }

    #[test]
    fn long_entries_match_inside_derived_words() {
        let l = WordList::new(["مانشستر"], MatchMode::Affixed);
        assert!(l.matches("المانشستراويه"));
    }

    #[test]
    fn entries_are_normalized() {
        let l = WordList::new(["رأس", "مباراة"], MatchMode::Affixed);
        assert!(l.matches("راسك"));
        assert!(l.matches("مباراه"));
    }

    #[test]
    fn emoji_classes() {
        let lex = EmojiLexicon::new(["🙂", "❤️"], ["🔪", "👊"]);
        assert_eq!(lex.classify("🔪"), EmojiClass::Unpleasant);
        assert_eq!(lex.classify("❤"), EmojiClass::Pleasant);
        assert_eq!(lex.classify("👊🏿"), EmojiClass::Unpleasant);
        assert_eq!(lex.classify("🌍"), EmojiClass::Other);
    }
}
