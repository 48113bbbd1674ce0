use std::ops::Range;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Word,
    Mention,
    Hashtag,
    Url,
    Emoji,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// Byte range in the normalized text.
    pub span: Range<usize>,
}

impl Token {
    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }
}

pub fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x2300..=0x23FF
        | 0x2600..=0x27BF
        | 0x2B05..=0x2B55
        | 0x1F000..=0x1FAFF)
}

fn is_emoji_modifier(c: char) -> bool {
    matches!(c as u32, 0xFE0F | 0x20E3 | 0x1F3FB..=0x1F3FF | 0xE0020..=0xE007F)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\u{200C}' || unicode_normalization::char::canonical_combining_class(c) != 0
}

/// Strips presentation selectors and skin-tone modifiers so lexicon lookups
/// see one key per emoji.
pub fn emoji_key(s: &str) -> String {
    s.chars()
        .filter(|&c| !matches!(c as u32, 0xFE0F | 0xFE0E | 0x1F3FB..=0x1F3FF))
        .collect()
}

/// Splits normalized text into tokens. Mentions, hashtags, URLs and emoji
/// sequences are single tokens; every other non-word, non-space character
/// is a punctuation token of its own.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let end_of = |k: usize| chars.get(k).map(|&(i, _)| i).unwrap_or(text.len());
    let mut tokens = Vec::new();
    let mut k = 0;

    while k < chars.len() {
        let (start, c) = chars[k];
        if c.is_whitespace() {
            k += 1;
            continue;
        }

        let rest = &text[start..];
        let lower_prefix: String = rest.chars().take(8).collect::<String>().to_lowercase();
        let (kind, next) = if lower_prefix.starts_with("http://")
            || lower_prefix.starts_with("https://")
            || lower_prefix.starts_with("www.")
        {
            let mut j = k;
            while j < chars.len() && !chars[j].1.is_whitespace() {
                j += 1;
            }
            (TokenKind::Url, j)
        } else if (c == '@' || c == '#') && chars.get(k + 1).is_some_and(|&(_, n)| is_word_char(n)) {
            let mut j = k + 1;
            while j < chars.len() && is_word_char(chars[j].1) {
                j += 1;
            }
            let kind = if c == '@' {
                TokenKind::Mention
            } else {
                TokenKind::Hashtag
            };
            (kind, j)
        } else if is_emoji(c) {
            let mut j = k + 1;
            loop {
                match chars.get(j).map(|&(_, n)| n) {
                    Some(n) if is_emoji_modifier(n) => j += 1,
                    Some('\u{200D}') if chars.get(j + 1).is_some_and(|&(_, n)| is_emoji(n)) => j += 2,
                    // regional indicator pairs form one flag
                    Some(n)
                        if (0x1F1E6..=0x1F1FF).contains(&(c as u32))
                            && (0x1F1E6..=0x1F1FF).contains(&(n as u32))
                            && j == k + 1 =>
                    {
                        j += 1
                    }
                    _ => break,
                }
            }
            (TokenKind::Emoji, j)
        } else if is_word_char(c) {
            let mut j = k + 1;
            while j < chars.len() && is_word_char(chars[j].1) {
                j += 1;
            }
            (TokenKind::Word, j)
        } else {
            (TokenKind::Punct, k + 1)
        };

        let end = end_of(next);
        tokens.push(Token {
            kind,
            text: text[start..end].to_string(),
            span: start..end,
        });
        k = next;
    }
    tokens
}
