use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::lexicons::{EmojiClass, EmojiLexicon, WordList};
use super::matcher::{Matcher, SeedMatch};
use super::normalize::{normalize, NormalizedText};
use super::tokenize::{tokenize, Token, TokenKind};

/// Phenomena features for one tweet.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub has_mention: bool,
    pub mention_count: u32,
    pub is_question: bool,
    pub emoji_pleasant: u32,
    pub emoji_unpleasant: u32,
    pub emoji_other: u32,
    pub has_conditional: bool,
    pub has_modal: bool,
    pub body_part_count: u32,
    pub has_laughter: bool,
    pub seed_count: u32,
    /// Number of word tokens.
    pub token_count: u32,
    /// Bag of normalized word tokens.
    pub tokens: BTreeMap<String, u32>,
}

impl FeatureVector {
    pub fn has_emoji(&self) -> bool {
        self.emoji_pleasant + self.emoji_unpleasant + self.emoji_other > 0
    }

    pub fn has_body_part(&self) -> bool {
        self.body_part_count > 0
    }
}

/// Marker word lists consulted during extraction.
#[derive(Debug, Clone)]
pub struct MarkerLexicons {
    pub conditional: WordList,
    pub modal: WordList,
    pub body_parts: WordList,
}

/// Everything derived from one text in a single pass.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub normalized: NormalizedText,
    pub tokens: Vec<Token>,
    pub matches: Vec<SeedMatch>,
    pub features: FeatureVector,
}

pub fn has_laughter(normalized: &str) -> bool {
    normalized.contains("ههه") || normalized.to_lowercase().contains("haha")
}

pub fn analyze(text: &str, matcher: &Matcher, emoji: &EmojiLexicon, markers: &MarkerLexicons) -> Analysis {
    let normalized = normalize(text);
    let tokens = tokenize(normalized.as_str());
    let matches = matcher.find_in(&normalized, &tokens);

    let mut f = FeatureVector {
        seed_count: matches.len() as u32,
        has_laughter: has_laughter(normalized.as_str()),
        ..FeatureVector::default()
    };
    for tok in &tokens {
        match tok.kind {
            TokenKind::Mention => f.mention_count += 1,
            TokenKind::Punct => {
                if tok.text == "?" || tok.text == "؟" {
                    f.is_question = true;
                }
            }
            TokenKind::Emoji => match emoji.classify(&tok.text) {
                EmojiClass::Pleasant => f.emoji_pleasant += 1,
                EmojiClass::Unpleasant => f.emoji_unpleasant += 1,
                EmojiClass::Other => f.emoji_other += 1,
            },
            TokenKind::Word => {
                f.token_count += 1;
                *f.tokens.entry(tok.text.clone()).or_insert(0) += 1;
                if markers.conditional.matches(&tok.text) {
                    f.has_conditional = true;
                }
                if markers.modal.matches(&tok.text) {
                    f.has_modal = true;
                }
                if markers.body_parts.matches(&tok.text) {
                    f.body_part_count += 1;
                }
            }
            TokenKind::Hashtag | TokenKind::Url => {}
        }
    }
    f.has_mention = f.mention_count > 0;

    Analysis {
        normalized,
        tokens,
        matches,
        features: f,
    }
}

pub fn extract_features(
    text: &str,
    matcher: &Matcher,
    emoji: &EmojiLexicon,
    markers: &MarkerLexicons,
) -> FeatureVector {
    analyze(text, matcher, emoji, markers).features
}
