//! Direct-threat seed phrase generation.
//!
//! Every seed is a first-person subject (singular or plural) acting through a
//! threat verb on a second-person object (singular or plural). Third-person
//! forms are never generated. The rule file gives per-verb imperfective stems,
//! the object clitics for each number, and explicit spelling variants:
//!
//! ```text
//! verb  stem_1sg  stem_1pl  suffixes_2sg  suffixes_2pl  extra_variants
//! قتل   اقتل      نقتل      ك             كم,كوا        1SG>2SG:باقتلك|1PL>2SG:نقتلكي
//! ```
//!
//! A `~` inside a stem marks where the object goes (`امحي~ من علي وش الارض`);
//! otherwise the object is appended. An empty stem means the subject is not
//! generated for that verb.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, Error, Result};
use crate::lexicon::Lexicon;
use crate::textproc::normalize_str;

const SLOT: char = '~';

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subject {
    #[serde(rename = "1SG")]
    Sg1,
    #[serde(rename = "1PL")]
    Pl1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Object {
    #[serde(rename = "2SG")]
    Sg2,
    #[serde(rename = "2PL")]
    Pl2,
}

impl Subject {
    pub const ALL: [Subject; 2] = [Subject::Sg1, Subject::Pl1];
}

impl Object {
    pub const ALL: [Object; 2] = [Object::Sg2, Object::Pl2];
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subject::Sg1 => "1SG",
            Subject::Pl1 => "1PL",
        })
    }
}

impl fmt::Display for Object {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Object::Sg2 => "2SG",
            Object::Pl2 => "2PL",
        })
    }
}

impl FromStr for Subject {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "1SG" => Ok(Subject::Sg1),
            "1PL" => Ok(Subject::Pl1),
            other => Err(format!("subject must be 1SG or 1PL, got `{other}`")),
        }
    }
}

impl FromStr for Object {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "2SG" => Ok(Object::Sg2),
            "2PL" => Ok(Object::Pl2),
            other => Err(format!("object must be 2SG or 2PL, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPhrase {
    /// Normalized phrase text.
    pub text: String,
    /// Normalized surface of the lexicon verb.
    pub verb: String,
    pub subject: Subject,
    pub object: Object,
    /// Position among the variants produced for one (verb, subject, object).
    pub variant_id: u16,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtraVariant {
    pub subject: Subject,
    pub object: Object,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InflectionRule {
    pub verb: String,
    pub stem_1sg: Option<String>,
    pub stem_1pl: Option<String>,
    pub suffixes_2sg: Vec<String>,
    pub suffixes_2pl: Vec<String>,
    pub extra_variants: Vec<ExtraVariant>,
}

fn fill(stem: &str, object: &str) -> String {
    match stem.find(SLOT) {
        Some(i) => format!("{}{}{}", &stem[..i], object, &stem[i + SLOT.len_utf8()..]),
        None => format!("{stem}{object}"),
    }
}

impl InflectionRule {
    pub fn stem(&self, subject: Subject) -> Option<&str> {
        match subject {
            Subject::Sg1 => self.stem_1sg.as_deref(),
            Subject::Pl1 => self.stem_1pl.as_deref(),
        }
    }

    pub fn suffixes(&self, object: Object) -> &[String] {
        match object {
            Object::Sg2 => &self.suffixes_2sg,
            Object::Pl2 => &self.suffixes_2pl,
        }
    }

    fn raw_variants(&self, subject: Subject, object: Object) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(stem) = self.stem(subject) {
            out.extend(self.suffixes(object).iter().map(|s| fill(stem, s)));
        }
        out.extend(
            self.extra_variants
                .iter()
                .filter(|v| v.subject == subject && v.object == object)
                .map(|v| v.text.clone()),
        );
        out
    }

    /// Every generated string must already be in normalized form.
    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidRule {
            verb: self.verb.clone(),
            reason,
        };
        for stem in [&self.stem_1sg, &self.stem_1pl].into_iter().flatten() {
            if stem.matches(SLOT).count() > 1 {
                return Err(invalid(format!("stem `{stem}` has more than one object slot")));
            }
        }
        for s in Subject::ALL {
            for o in Object::ALL {
                for text in self.raw_variants(s, o) {
                    if text.trim().is_empty() {
                        return Err(invalid(format!("empty phrase for {s}>{o}")));
                    }
                    if normalize_str(&text) != text {
                        return Err(invalid(format!("`{text}` is not in normalized form")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Generates the seeds of one rule for a subject/object pair.
pub fn inflect(rule: &InflectionRule, subject: Subject, object: Object) -> Result<Vec<SeedPhrase>> {
    let has_extras = rule.extra_variants.iter().any(|v| v.subject == subject);
    if rule.stem(subject).is_none() && !has_extras {
        return Err(Error::MissingStem {
            verb: rule.verb.clone(),
            subject: subject.to_string(),
        });
    }
    Ok(rule
        .raw_variants(subject, object)
        .into_iter()
        .enumerate()
        .map(|(i, text)| SeedPhrase {
            text,
            verb: rule.verb.clone(),
            subject,
            object,
            variant_id: i as u16,
        })
        .collect())
}

fn split_list(field: &str, sep: char) -> Vec<String> {
    field
        .split(sep)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse_extra(entry: &str) -> std::result::Result<ExtraVariant, String> {
    let (tag, text) = entry
        .split_once(':')
        .ok_or_else(|| format!("extra variant `{entry}` must look like 1SG>2SG:phrase"))?;
    let (s, o) = tag
        .split_once('>')
        .ok_or_else(|| format!("extra variant tag `{tag}` must look like 1SG>2SG"))?;
    Ok(ExtraVariant {
        subject: s.parse()?,
        object: o.parse()?,
        text: text.trim().to_string(),
    })
}

/// Parsed rule file. Several rows may share a verb.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleSet {
    pub rules: Vec<InflectionRule>,
}

impl RuleSet {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&read_to_string(path)?, &path.display().to_string())
    }

    pub fn parse(content: &str, source: &str) -> Result<Self> {
        let mut rules = Vec::new();
        for (n, raw) in content.lines().enumerate() {
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                file: source.to_string(),
                line: n + 1,
                message,
            };
            let cols: Vec<&str> = raw.split('\t').collect();
            if cols.len() < 5 || cols.len() > 6 {
                return Err(parse_err(format!(
                    "expected 5 or 6 tab-separated columns, found {}",
                    cols.len()
                )));
            }
            let stem = |s: &str| Some(s.trim().to_string()).filter(|s| !s.is_empty());
            let extra_variants = cols
                .get(5)
                .map(|f| split_list(f, '|'))
                .unwrap_or_default()
                .iter()
                .map(|e| parse_extra(e))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(parse_err)?;
            let rule = InflectionRule {
                verb: normalize_str(cols[0]),
                stem_1sg: stem(cols[1]),
                stem_1pl: stem(cols[2]),
                suffixes_2sg: split_list(cols[3], ','),
                suffixes_2pl: split_list(cols[4], ','),
                extra_variants,
            };
            rule.validate()?;
            rules.push(rule);
        }
        Ok(RuleSet { rules })
    }
}

/// Deduplicated seeds keyed by normalized text, iterated lexicographically.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedSet {
    phrases: BTreeMap<String, SeedPhrase>,
}

impl SeedSet {
    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn contains(&self, text: &str) -> bool {
        self.phrases.contains_key(&normalize_str(text))
    }

    pub fn get(&self, text: &str) -> Option<&SeedPhrase> {
        self.phrases.get(&normalize_str(text))
    }

    pub fn iter(&self) -> impl Iterator<Item = &SeedPhrase> {
        self.phrases.values()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.phrases.keys().map(String::as_str)
    }

    /// One phrase per line, newline-terminated.
    pub fn to_lines(&self) -> String {
        self.texts().map(|t| format!("{t}\n")).collect()
    }
}

/// Expands every rule for all subject/object pairs. Subjects a rule has no
/// stem or variants for are skipped.
pub fn generate_all(lexicon: &Lexicon, rules: &RuleSet) -> Result<SeedSet> {
    let mut phrases = BTreeMap::new();
    for rule in &rules.rules {
        if lexicon.get(&rule.verb).is_none() {
            return Err(Error::UnknownVerb(rule.verb.clone()));
        }
        for s in Subject::ALL {
            for o in Object::ALL {
                let seeds = match inflect(rule, s, o) {
                    Ok(seeds) => seeds,
                    Err(Error::MissingStem { .. }) => continue,
                    Err(e) => return Err(e),
                };
                for seed in seeds {
                    phrases.entry(seed.text.clone()).or_insert(seed);
                }
            }
        }
    }
    Ok(SeedSet { phrases })
}

/// Reads a published seed list: one phrase per line, blank lines and `#`
/// comments ignored. Phrases are normalized.
pub fn load_published(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_published(&bytes, &path.display().to_string())
}

pub fn parse_published(bytes: &[u8], source: &str) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    for (n, line) in bytes.split(|&b| b == b'\n').enumerate() {
        let line = std::str::from_utf8(line).map_err(|e| Error::Parse {
            file: source.to_string(),
            line: n + 1,
            message: format!("invalid UTF-8: {e}"),
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.insert(normalize_str(line));
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedDiff {
    /// Published but not generated.
    pub missing: Vec<String>,
    /// Generated but not published.
    pub extra: Vec<String>,
}

impl SeedDiff {
    pub fn is_exact(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty()
    }
}

pub fn diff_against_published(generated: &SeedSet, published: &BTreeSet<String>) -> SeedDiff {
    let generated: BTreeSet<&str> = generated.texts().collect();
    SeedDiff {
        missing: published
            .iter()
            .filter(|p| !generated.contains(p.as_str()))
            .cloned()
            .collect(),
        extra: generated
            .iter()
            .filter(|g| !published.contains(**g))
            .map(|g| g.to_string())
            .collect(),
    }
}
