//! Multi-dialect threat-verb lexicon.
//!
//! The lexicon is a UTF-8 TSV file with the columns
//! `surface, dialects, usage, gloss, default_object`. Lines starting with `#`
//! are comments. Surface forms are normalized at load time, so lookups do not
//! depend on hamza or diacritic spelling.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, Error, Result};
use crate::textproc::normalize_str;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dialect {
    #[serde(rename = "MSA")]
    Msa,
    Gulf,
    Egyptian,
    Levantine,
    Maghrebi,
}

impl Dialect {
    pub const ALL: [Dialect; 5] = [
        Dialect::Msa,
        Dialect::Gulf,
        Dialect::Egyptian,
        Dialect::Levantine,
        Dialect::Maghrebi,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Dialect::Msa => "MSA",
            Dialect::Gulf => "Gulf",
            Dialect::Egyptian => "Egyptian",
            Dialect::Levantine => "Levantine",
            Dialect::Maghrebi => "Maghrebi",
        }
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Dialect {
    type Err = Error;

    /// Accepts full names (any case) and the single-letter codes
    /// M, G, E, L, R.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "msa" | "m" => Ok(Dialect::Msa),
            "gulf" | "g" => Ok(Dialect::Gulf),
            "egyptian" | "e" => Ok(Dialect::Egyptian),
            "levantine" | "l" => Ok(Dialect::Levantine),
            "maghrebi" | "r" => Ok(Dialect::Maghrebi),
            _ => Err(Error::UnknownDialect(s.trim().to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Usage {
    Literal,
    Metaphorical,
    Idiomatic,
}

impl FromStr for Usage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "literal" => Ok(Usage::Literal),
            "metaphorical" | "*" => Ok(Usage::Metaphorical),
            "idiomatic" | "**" => Ok(Usage::Idiomatic),
            other => Err(format!("unknown usage class `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreatVerb {
    /// Normalized basic verb form.
    pub surface: String,
    pub dialects: BTreeSet<Dialect>,
    pub usage: Usage,
    pub gloss: String,
    /// Body part or idiom completion the verb is used with.
    pub default_object: Option<String>,
}

impl ThreatVerb {
    fn validate(&self) -> Result<()> {
        let invalid = |reason: &str| Error::InvalidEntry {
            surface: self.surface.clone(),
            reason: reason.to_string(),
        };
        if self.surface.is_empty() {
            return Err(invalid("empty surface form"));
        }
        if !self.surface.chars().all(is_arabic_letter) {
            return Err(invalid("surface must contain only Arabic letters"));
        }
        if self.dialects.is_empty() {
            return Err(invalid("no dialects"));
        }
        if self.usage == Usage::Idiomatic && self.default_object.is_none() {
            return Err(invalid("idiomatic entries need a default object"));
        }
        Ok(())
    }
}

fn is_arabic_letter(c: char) -> bool {
    matches!(c, '\u{0621}'..='\u{063A}' | '\u{0641}'..='\u{064A}')
}

/// A single multiword seed expression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiwordSeed {
    pub tokens: Vec<String>,
    pub gloss: String,
}

impl MultiwordSeed {
    pub fn new(text: &str, gloss: impl Into<String>) -> Result<Self> {
        let tokens: Vec<String> = normalize_str(text).split(' ').map(str::to_string).collect();
        if tokens.len() < 2 || tokens.iter().any(String::is_empty) {
            return Err(Error::InvalidEntry {
                surface: text.to_string(),
                reason: "multiword seeds need at least two non-empty tokens".into(),
            });
        }
        Ok(MultiwordSeed {
            tokens,
            gloss: gloss.into(),
        })
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Immutable, validated lexicon. Entries keep file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    verbs: Vec<ThreatVerb>,
    index: HashMap<String, usize>,
}

fn parse_dialects(field: &str) -> Result<BTreeSet<Dialect>> {
    let mut set = BTreeSet::new();
    for code in field.split(',').map(str::trim).filter(|c| !c.is_empty()) {
        if code.eq_ignore_ascii_case("all") {
            set.extend(Dialect::ALL);
        } else {
            set.insert(code.parse()?);
        }
    }
    Ok(set)
}

impl Lexicon {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = read_to_string(path)?;
        Self::parse(&content, &path.display().to_string())
    }

    pub fn parse(content: &str, source: &str) -> Result<Self> {
        let mut verbs = Vec::new();
        let mut index = HashMap::new();
        for (n, raw) in content.lines().enumerate() {
            let line = n + 1;
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                file: source.to_string(),
                line,
                message,
            };
            let cols: Vec<&str> = raw.split('\t').collect();
            if cols.len() < 4 || cols.len() > 5 {
                return Err(parse_err(format!(
                    "expected 4 or 5 tab-separated columns, found {}",
                    cols.len()
                )));
            }
            let dialects = parse_dialects(cols[1]).map_err(|e| match e {
                Error::UnknownDialect(_) => e,
                other => parse_err(other.to_string()),
            })?;
            let usage = cols[2].parse::<Usage>().map_err(parse_err)?;
            let default_object = cols.get(4).map(|s| normalize_str(s)).filter(|s| !s.is_empty());
            let verb = ThreatVerb {
                surface: normalize_str(cols[0]),
                dialects,
                usage,
                gloss: cols[3].trim().to_string(),
                default_object,
            };
            verb.validate()?;
            if index.contains_key(&verb.surface) {
                return Err(Error::DuplicateEntry(verb.surface));
            }
            index.insert(verb.surface.clone(), verbs.len());
            verbs.push(verb);
        }
        if verbs.is_empty() {
            return Err(Error::Empty(source.to_string()));
        }
        Ok(Lexicon { verbs, index })
    }

    pub fn verbs(&self) -> &[ThreatVerb] {
        &self.verbs
    }

    pub fn len(&self) -> usize {
        self.verbs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verbs.is_empty()
    }

    /// Orthography-insensitive lookup.
    pub fn get(&self, surface: &str) -> Option<&ThreatVerb> {
        self.index.get(&normalize_str(surface)).map(|&i| &self.verbs[i])
    }

    /// Entries used in `dialect`, in file order.
    pub fn verbs_for_dialect(&self, dialect: Dialect) -> Vec<&ThreatVerb> {
        self.verbs.iter().filter(|v| v.dialects.contains(&dialect)).collect()
    }

    /// Same as [`Lexicon::verbs_for_dialect`] with an optional textual code;
    /// `None` returns every entry.
    pub fn query(&self, dialect: Option<&str>) -> Result<Vec<&ThreatVerb>> {
        match dialect {
            None => Ok(self.verbs.iter().collect()),
            Some(code) => Ok(self.verbs_for_dialect(code.parse()?)),
        }
    }

    pub fn usage_counts(&self) -> BTreeMap<Usage, usize> {
        let mut counts = BTreeMap::new();
        for v in &self.verbs {
            *counts.entry(v.usage).or_insert(0) += 1;
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "# comment\nقتل\tall\tliteral\tkill\t\nأتل\tE,L\tliteral\tkill\n";

    #[test]
    fn parses_codes_and_all() {
        let lex = Lexicon::parse(SMALL, "small").unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.verbs()[0].dialects.len(), 5);
        assert_eq!(
            lex.get("أتل").unwrap().dialects,
            BTreeSet::from([Dialect::Egyptian, Dialect::Levantine])
        );
        assert_eq!(lex.verbs()[1].surface, "اتل");
    }

    #[test]
    fn empty_file_has_no_entries() {
        let err = Lexicon::parse("# only comments\n\n", "empty.tsv").unwrap_err();
        assert!(err.to_string().contains("no entries"), "{err}");
    }

    #[test]
    fn duplicate_rows_are_rejected() {
        let content = "قتل\tall\tliteral\tkill\t\nقَتَل\tGulf\tliteral\tkill\t\n";
        match Lexicon::parse(content, "dup") {
            Err(Error::DuplicateEntry(s)) => assert_eq!(s, "قتل"),
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_dialect_is_rejected() {
        let err = Lexicon::parse("قتل\tGulf,Sudanese\tliteral\tkill\t\n", "x").unwrap_err();
        assert!(matches!(err, Error::UnknownDialect(ref c) if c == "Sudanese"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Lexicon::parse("# c\nقتل\tall\n", "f.tsv").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = Lexicon::parse("قتل\tall\tsometimes\tkill\t\n", "f.tsv").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn idiomatic_needs_default_object() {
        let err = Lexicon::parse("شرب\tGulf\tidiomatic\tdrink\t\n", "x").unwrap_err();
        assert!(matches!(err, Error::InvalidEntry { .. }));
    }

    #[test]
    fn surface_must_be_arabic() {
        let err = Lexicon::parse("kill\tGulf\tliteral\tkill\t\n", "x").unwrap_err();
        assert!(matches!(err, Error::InvalidEntry { .. }));
    }

    #[test]
    fn single_literal_entry_counts() {
        let lex = Lexicon::parse("قتل\tGulf\tliteral\tkill\t\n", "x").unwrap();
        assert_eq!(lex.usage_counts(), BTreeMap::from([(Usage::Literal, 1)]));
    }

    #[test]
    fn unknown_dialect_query() {
        let lex = Lexicon::parse(SMALL, "small").unwrap();
        assert!(matches!(lex.query(Some("Klingon")), Err(Error::UnknownDialect(_))));
        assert_eq!(lex.query(None).unwrap().len(), 2);
        assert_eq!(lex.query(Some("egyptian")).unwrap().len(), 2);
        assert_eq!(lex.query(Some("MSA")).unwrap().len(), 1);
    }

    #[test]
    fn multiword_seed_needs_two_tokens() {
        assert!(MultiwordSeed::new("اشرب", "drink").is_err());
        let m = MultiwordSeed::new("اشرب  من دمك", "I drink from your blood").unwrap();
        assert_eq!(m.tokens, vec!["اشرب", "من", "دمك"]);
    }
}
