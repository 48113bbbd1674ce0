//! Arabic-aware normalization, tokenization, seed matching and phenomena features.

mod features;
mod lexicons;
mod matcher;
mod normalize;
mod tokenize;

pub use features::{analyze, extract_features, has_laughter, Analysis, FeatureVector, MarkerLexicons};
pub use lexicons::{EmojiClass, EmojiLexicon, MatchMode, WordList};
pub use matcher::{Matcher, SeedMatch, TokenMatch};
pub use normalize::{normalize, normalize_str, NormalizedText};
pub use tokenize::{emoji_key, is_emoji, tokenize, Token, TokenKind};
