//! Token-level Aho-Corasick matcher over seed phrases.
//!
//! Seeds are sequences of word tokens. The automaton consumes the token
//! stream of a tweet in one pass; any token that is not a word known to
//! some seed resets it to the root. Overlapping candidates are resolved
//! leftmost-longest, non-overlapping.

use std::collections::{HashMap, VecDeque};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::normalize::{normalize, normalize_str, NormalizedText};
use super::tokenize::{tokenize, Token};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedMatch {
    pub seed: String,
    /// Token indices, end exclusive.
    pub token_span: Range<usize>,
    /// Byte range in the original (un-normalized) text.
    pub char_span: Range<usize>,
}

/// A match expressed only in token indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenMatch {
    pub pattern: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Default)]
struct Node {
    next: HashMap<u32, usize>,
    fail: usize,
    /// Pattern that ends exactly at this node.
    output: Option<usize>,
    /// Nearest node on the failure chain that carries an output.
    dict_link: Option<usize>,
    depth: usize,
}

#[derive(Debug, Clone)]
pub struct Matcher {
    vocab: HashMap<String, u32>,
    nodes: Vec<Node>,
    patterns: Vec<String>,
}

impl Matcher {
    /// Builds the automaton. Seeds are normalized first; duplicates collapse.
    pub fn new<I, S>(seeds: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab: HashMap<String, u32> = HashMap::new();
        let mut nodes = vec![Node::default()];
        let mut patterns = Vec::new();

        for seed in seeds {
            let text = normalize_str(seed.as_ref());
            let toks = tokenize(&text);
            if toks.is_empty() || !toks.iter().all(Token::is_word) {
                return Err(Error::InvalidSeed(seed.as_ref().to_string()));
            }
            let mut state = 0;
            for tok in &toks {
                let next_id = vocab.len() as u32;
                let id = *vocab.entry(tok.text.clone()).or_insert(next_id);
                state = match nodes[state].next.get(&id) {
                    Some(&s) => s,
                    None => {
                        let depth = nodes[state].depth + 1;
                        nodes.push(Node {
                            depth,
                            ..Node::default()
                        });
                        let s = nodes.len() - 1;
                        nodes[state].next.insert(id, s);
                        s
                    }
                };
            }
            if nodes[state].output.is_none() {
                nodes[state].output = Some(patterns.len());
                patterns.push(text);
            }
        }
        if patterns.is_empty() {
            return Err(Error::EmptySeedSet);
        }

        // Breadth-first failure links.
        let mut queue = VecDeque::new();
        let root_children: Vec<usize> = nodes[0].next.values().copied().collect();
        for child in root_children {
            nodes[child].fail = 0;
            queue.push_back(child);
        }
        while let Some(state) = queue.pop_front() {
            let edges: Vec<(u32, usize)> = nodes[state].next.iter().map(|(&k, &v)| (k, v)).collect();
            for (sym, child) in edges {
                let mut f = nodes[state].fail;
                let fail = loop {
                    if let Some(&t) = nodes[f].next.get(&sym) {
                        break t;
                    }
                    if f == 0 {
                        break 0;
                    }
                    f = nodes[f].fail;
                };
                nodes[child].fail = fail;
                nodes[child].dict_link = if nodes[fail].output.is_some() {
                    Some(fail)
                } else {
                    nodes[fail].dict_link
                };
                queue.push_back(child);
            }
        }

        Ok(Matcher { vocab, nodes, patterns })
    }

    pub fn patterns(&self) -> &[String] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    fn step(&self, mut state: usize, sym: u32) -> usize {
        loop {
            if let Some(&t) = self.nodes[state].next.get(&sym) {
                return t;
            }
            if state == 0 {
                return 0;
            }
            state = self.nodes[state].fail;
        }
    }

    /// Leftmost-longest, non-overlapping matches over an already tokenized text.
    pub fn find_tokens(&self, tokens: &[Token]) -> Vec<TokenMatch> {
        let mut candidates = Vec::new();
        let mut state = 0;
        for (i, tok) in tokens.iter().enumerate() {
            let sym = if tok.is_word() { self.vocab.get(&tok.text) } else { None };
            let Some(&sym) = sym else {
                state = 0;
                continue;
            };
            state = self.step(state, sym);
            let mut out = if self.nodes[state].output.is_some() {
                Some(state)
            } else {
                self.nodes[state].dict_link
            };
            while let Some(node) = out {
                let depth = self.nodes[node].depth;
                candidates.push(TokenMatch {
                    pattern: self.nodes[node].output.expect("dict link targets carry output"),
                    start: i + 1 - depth,
                    end: i + 1,
                });
                out = self.nodes[node].dict_link;
            }
        }

        candidates.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
        let mut selected = Vec::new();
        let mut cursor = 0;
        for m in candidates {
            if m.start >= cursor {
                cursor = m.end;
                selected.push(m);
            }
        }
        selected
    }

    /// Finds seeds in raw text, reporting token spans and source byte spans.
    pub fn find(&self, text: &str) -> Vec<SeedMatch> {
        let normalized = normalize(text);
        let tokens = tokenize(normalized.as_str());
        self.find_in(&normalized, &tokens)
    }

    pub fn find_in(&self, normalized: &NormalizedText, tokens: &[Token]) -> Vec<SeedMatch> {
        self.find_tokens(tokens)
            .into_iter()
            .map(|m| SeedMatch {
                seed: self.patterns[m.pattern].clone(),
                token_span: m.start..m.end,
                char_span: normalized.source_range(tokens[m.start].span.start..tokens[m.end - 1].span.end),
            })
            .collect()
    }
}
