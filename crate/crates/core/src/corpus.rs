//! Tweet corpora: JSONL ingestion, seed-removal preprocessing, stratified
//! splits and descriptive statistics.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;
use crate::textproc::{normalize, tokenize, FeatureVector, Matcher, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tweet {
    pub id: String,
    #[serde(default)]
    pub author_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<DateTime<Utc>>,
    #[serde(default, alias = "label", skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<Label>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub annotator_labels: BTreeMap<String, Label>,
}

impl Tweet {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Tweet {
            id: id.into(),
            author_id: String::new(),
            text: text.into(),
            created_at: None,
            gold_label: None,
            annotator_labels: BTreeMap::new(),
        }
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.gold_label = Some(label);
        self
    }

    pub fn with_author(mut self, author: impl Into<String>) -> Self {
        self.author_id = author.into();
        self
    }
}

/// Tweets in insertion order with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    tweets: Vec<Tweet>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ingested {
    pub corpus: Corpus,
    /// Lines dropped because their id was already present.
    pub duplicates: usize,
}

impl Corpus {
    /// Builds a corpus, keeping the first tweet for each id. Returns the
    /// number of duplicates skipped alongside.
    pub fn from_tweets(tweets: impl IntoIterator<Item = Tweet>) -> (Self, usize) {
        let mut corpus = Corpus::default();
        let mut dups = 0;
        for t in tweets {
            if !corpus.push(t) {
                dups += 1;
            }
        }
        (corpus, dups)
    }

    /// Appends unless the id already exists.
    pub fn push(&mut self, tweet: Tweet) -> bool {
        if self.index.contains_key(&tweet.id) {
            return false;
        }
        self.index.insert(tweet.id.clone(), self.tweets.len());
        self.tweets.push(tweet);
        true
    }

    pub fn tweets(&self) -> &[Tweet] {
        &self.tweets
    }

    pub fn get(&self, id: &str) -> Option<&Tweet> {
        self.index.get(id).map(|&i| &self.tweets[i])
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn label_counts(&self) -> BTreeMap<Label, usize> {
        let mut counts = BTreeMap::new();
        for t in &self.tweets {
            if let Some(l) = t.gold_label {
                *counts.entry(l).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Restricts the corpus to `ids`, in the order given. Unknown ids are skipped.
    pub fn subset<'a>(&self, ids: impl IntoIterator<Item = &'a String>) -> Corpus {
        Corpus::from_tweets(ids.into_iter().filter_map(|id| self.get(id).cloned())).0
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for t in &self.tweets {
            serde_json::to_writer(&mut out, t)?;
            out.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_jsonl(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Reads JSONL tweets. Each line must be an object with at least `id` and
/// `text`; duplicate ids are skipped (first wins) and counted.
pub fn ingest_reader(reader: impl BufRead) -> Result<Ingested> {
    let mut corpus = Corpus::default();
    let mut duplicates = 0;
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| Error::MalformedRecord {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let tweet: Tweet = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: line_no,
            message: e.to_string(),
        })?;
        if tweet.id.is_empty() || tweet.text.trim().is_empty() {
            return Err(Error::MalformedRecord {
                line: line_no,
                message: "`id` and `text` must be non-empty".into(),
            });
        }
        if !corpus.push(tweet) {
            duplicates += 1;
            log::warn!("line {line_no}: duplicate tweet id skipped");
        }
    }
    Ok(Ingested { corpus, duplicates })
}

pub fn ingest(path: impl AsRef<Path>) -> Result<Ingested> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(BufReader::new(file))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub input: usize,
    pub retained: usize,
    pub dropped: usize,
    pub seeds_removed: usize,
    pub retained_by_label: BTreeMap<Label, usize>,
}

fn word_count(normalized: &str) -> usize {
    tokenize(normalized)
        .iter()
        .filter(|t| t.kind == TokenKind::Word)
        .count()
}

/// Removes every seed occurrence from `text` (repeating until none is left)
/// and returns the normalized remainder with the number of removals.
pub fn strip_seeds(text: &str, matcher: &Matcher) -> (String, usize) {
    let mut current = text.to_string();
    let mut removed = 0;
    loop {
        let matches = matcher.find(&current);
        if matches.is_empty() {
            return (normalize(&current).into_string(), removed);
        }
        removed += matches.len();
        let mut next = String::with_capacity(current.len());
        let mut cursor = 0;
        for m in &matches {
            next.push_str(&current[cursor..m.char_span.start]);
            next.push(' ');
            cursor = m.char_span.end;
        }
        next.push_str(&current[cursor..]);
        current = next;
    }
}

/// Strips seeds and keeps tweets that still have at least two words.
pub fn preprocess(corpus: &Corpus, matcher: &Matcher) -> (Corpus, PreprocessReport) {
    let mut out = Corpus::default();
    let mut report = PreprocessReport {
        input: corpus.len(),
        ..PreprocessReport::default()
    };
    for t in corpus.tweets() {
        let (text, removed) = strip_seeds(&t.text, matcher);
        report.seeds_removed += removed;
        if word_count(&text) < 2 {
            report.dropped += 1;
            continue;
        }
        if let Some(l) = t.gold_label {
            *report.retained_by_label.entry(l).or_insert(0) += 1;
        }
        out.push(Tweet { text, ..t.clone() });
    }
    report.retained = out.len();
    (out, report)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartCounts {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

impl PartCounts {
    pub fn total(&self) -> usize {
        self.train + self.dev + self.test
    }
}

/// How to split a corpus. Serialized with a `mode` tag:
///
/// ```json
/// {"mode": "ratios", "train": 0.8, "dev": 0.1, "test": 0.1}
/// {"mode": "counts", "counts": {"safe": {"train": 2727, "dev": 244, "test": 254}, ...}}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum SplitSpec {
    Ratios { train: f64, dev: f64, test: f64 },
    Counts { counts: BTreeMap<Label, PartCounts> },
}

impl SplitSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = crate::error::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub dev: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = crate::error::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn ratio_counts(n: usize, train: f64, dev: f64) -> PartCounts {
    let tr = ((n as f64) * train).round().min(n as f64) as usize;
    let dv = (((n as f64) * dev).round() as usize).min(n - tr);
    PartCounts {
        train: tr,
        dev: dv,
        test: n - tr - dv,
    }
}

/// Stratified split by gold label, deterministic given `seed`.
pub fn split(corpus: &Corpus, spec: &SplitSpec, seed: u64) -> Result<DatasetSplit> {
    let mut strata: BTreeMap<Option<Label>, Vec<String>> = BTreeMap::new();
    for t in corpus.tweets() {
        strata.entry(t.gold_label).or_default().push(t.id.clone());
    }

    let plan: Vec<(Option<Label>, PartCounts)> = match spec {
        SplitSpec::Ratios { train, dev, test } => {
            let sum = train + dev + test;
            if [train, dev, test].iter().any(|r| **r < 0.0 || !r.is_finite()) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidSplit(format!(
                    "ratios must be non-negative and sum to 1, got {train}/{dev}/{test}"
                )));
            }
            strata
                .iter()
                .map(|(l, ids)| (*l, ratio_counts(ids.len(), *train, *dev)))
                .collect()
        }
        SplitSpec::Counts { counts } => {
            if strata.contains_key(&None) {
                return Err(Error::Unlabeled);
            }
            for label in strata.keys().flatten() {
                if !counts.contains_key(label) {
                    return Err(Error::InvalidSplit(format!("no counts given for class `{label}`")));
                }
            }
            let mut plan = Vec::new();
            for (label, parts) in counts {
                let available = strata.get(&Some(*label)).map_or(0, Vec::len);
                if parts.total() > available {
                    return Err(Error::InvalidSplit(format!(
                        "counts for `{label}` need {} tweets but only {available} are available",
                        parts.total()
                    )));
                }
                if parts.total() < available {
                    return Err(Error::InvalidSplit(format!(
                        "counts for `{label}` leave {} of {available} tweets unassigned",
                        available - parts.total()
                    )));
                }
                plan.push((Some(*label), *parts));
            }
            plan
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DatasetSplit {
        seed,
        ..DatasetSplit::default()
    };
    for (stratum, parts) in plan {
        let mut ids = strata.remove(&stratum).unwrap_or_default();
        ids.sort();
        ids.shuffle(&mut rng);
        let (train, rest) = ids.split_at(parts.train);
        let (dev, test) = rest.split_at(parts.dev);
        out.train.extend_from_slice(train);
        out.dev.extend_from_slice(dev);
        out.test.extend_from_slice(test);
    }
    out.train.sort();
    out.dev.sort();
    out.test.sort();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhenomenonRow {
    pub phenomenon: String,
    /// Tweets (labeled) showing the phenomenon.
    pub freq: usize,
    pub pct_non_dangerous: f64,
    pub pct_dangerous: f64,
    pub pct_overall: f64,
    pub pct_absent_non_dangerous: f64,
    pub pct_absent_dangerous: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhenomenaTable {
    pub n_safe: usize,
    pub n_dangerous: usize,
    pub rows: Vec<PhenomenonRow>,
}

type Probe = fn(&FeatureVector) -> bool;

const PHENOMENA: [(&str, Probe); 6] = [
    ("Mentions", |f| f.has_mention),
    ("Questions", |f| f.is_question),
    ("Emoji", |f| f.has_emoji()),
    ("Conditional", |f| f.has_conditional),
    ("Body parts", |f| f.has_body_part()),
    ("Hahaha", |f| f.has_laughter),
];

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

/// Per-class phenomenon frequencies. `features[i]` belongs to the i-th tweet
/// of `corpus`; tweets without a gold label are skipped.
pub fn phenomena_stats(corpus: &Corpus, features: &[FeatureVector]) -> Result<PhenomenaTable> {
    if features.len() != corpus.len() {
        return Err(Error::LengthMismatch {
            predictions: features.len(),
            gold: corpus.len(),
        });
    }
    let labeled: Vec<(Label, &FeatureVector)> = corpus
        .tweets()
        .iter()
        .zip(features)
        .filter_map(|(t, f)| t.gold_label.map(|l| (l, f)))
        .collect();
    if labeled.is_empty() {
        return Err(Error::Unlabeled);
    }
    let n_safe = labeled.iter().filter(|(l, _)| *l == Label::Safe).count();
    let n_dangerous = labeled.len() - n_safe;

    let rows = PHENOMENA
        .iter()
        .map(|(name, probe)| {
            let safe = labeled.iter().filter(|(l, f)| *l == Label::Safe && probe(f)).count();
            let dangerous = labeled
                .iter()
                .filter(|(l, f)| *l == Label::Dangerous && probe(f))
                .count();
            PhenomenonRow {
                phenomenon: name.to_string(),
                freq: safe + dangerous,
                pct_non_dangerous: pct(safe, n_safe),
                pct_dangerous: pct(dangerous, n_dangerous),
                pct_overall: pct(safe + dangerous, labeled.len()),
                pct_absent_non_dangerous: pct(n_safe - safe, n_safe),
                pct_absent_dangerous: pct(n_dangerous - dangerous, n_dangerous),
            }
        })
        .collect();
    Ok(PhenomenaTable {
        n_safe,
        n_dangerous,
        rows,
    })
}

impl PhenomenaTable {
    /// Aligned text table with the columns Phenomena, Freq., and the two class percentages.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<12} {:>7} {:>28} {:>30}",
            "Phenomena", "Freq.", "Percentage (non-dangerous)", "Percentage (dangerous class)"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<12} {:>7} {:>27.1}% {:>29.1}%",
                r.phenomenon, r.freq, r.pct_non_dangerous, r.pct_dangerous
            );
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineStats {
    pub users: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single user.
    pub std_dev: f64,
    pub min: u64,
    pub max: u64,
    pub p25: u64,
    pub p50: u64,
    pub p75: u64,
    pub avg_timeline_tweets: Option<f64>,
    /// Dangerous tweets as a percentage of all timeline tweets.
    pub pct_of_timeline: Option<f64>,
}

/// Nearest-rank percentile of sorted data.
pub fn nearest_rank(sorted: &[u64], p: f64) -> u64 {
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil().max(1.0) as usize;
    sorted[rank.min(n) - 1]
}

pub fn timeline_stats(dangerous_counts: &[u64], timeline_sizes: &[u64]) -> Result<TimelineStats> {
    if dangerous_counts.is_empty() {
        return Err(Error::EmptyInput("no per-user counts".into()));
    }
    let n = dangerous_counts.len();
    let mut sorted = dangerous_counts.to_vec();
    sorted.sort_unstable();
    let total: u64 = sorted.iter().sum();
    let mean = total as f64 / n as f64;
    let std_dev = if n > 1 {
        let ss: f64 = sorted.iter().map(|&x| (x as f64 - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let timeline_total: u64 = timeline_sizes.iter().sum();
    Ok(TimelineStats {
        users: n,
        mean,
        std_dev,
        min: sorted[0],
        max: sorted[n - 1],
        p25: nearest_rank(&sorted, 25.0),
        p50: nearest_rank(&sorted, 50.0),
        p75: nearest_rank(&sorted, 75.0),
        avg_timeline_tweets: (!timeline_sizes.is_empty()).then(|| timeline_total as f64 / timeline_sizes.len() as f64),
        pct_of_timeline: (timeline_total > 0).then(|| 100.0 * total as f64 / timeline_total as f64),
    })
}

impl TimelineStats {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<32} {:>10}", "Measure", "Value");
        if let Some(avg) = self.avg_timeline_tweets {
            let _ = writeln!(s, "{:<32} {:>10.0}", "Avg. # timeline tweets", avg);
        }
        for (name, v) in [
            ("Avg. # dangerous tweets / user", format!("{:.2}", self.mean)),
            ("St. dev.", format!("{:.2}", self.std_dev)),
            ("25th percentile", self.p25.to_string()),
            ("50th percentile", self.p50.to_string()),
            ("75th percentile", self.p75.to_string()),
            ("Minimum", self.min.to_string()),
            ("Maximum", self.max.to_string()),
        ] {
            let _ = writeln!(s, "{name:<32} {v:>10}");
        }
        s
    }
}

/// Ids that occur in more than one part of a split (should be empty).
pub fn split_overlap(split: &DatasetSplit) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut dup = Vec::new();
    for id in split.train.iter().chain(&split.dev).chain(&split.test) {
        if !seen.insert(id) {
            dup.push(id.clone());
        }
    }
    dup
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn labeled(n_safe: usize, n_dangerous: usize) -> Corpus {
        let tweets = (0..n_safe)
            .map(|i| Tweet::new(format!("s{i:03}"), "نص").with_label(Label::Safe))
            .chain((0..n_dangerous).map(|i| Tweet::new(format!("d{i:03}"), "نص").with_label(Label::Dangerous)));
        Corpus::from_tweets(tweets).0
    }

    #[test]
    fn ingest_three_lines() {
        let data = r#"{"id":"1","text":"a"}
{"id":"2","text":"b","author_id":"u"}

{"id":"3","text":"c","gold_label":"dangerous"}
"#;
        let got = ingest_reader(data.as_bytes()).unwrap();
        assert_eq!(got.corpus.len(), 3);
        assert_eq!(got.duplicates, 0);
        assert_eq!(got.corpus.get("3").unwrap().gold_label, Some(Label::Dangerous));
    }

    #[test]
    fn ingest_duplicates_first_wins() {
        let data =
            "{\"id\":\"1\",\"text\":\"first\"}\n{\"id\":\"1\",\"text\":\"second\"}\n{\"id\":\"2\",\"text\":\"x\"}\n";
        let got = ingest_reader(data.as_bytes()).unwrap();
        assert_eq!(got.corpus.len(), 2);
        assert_eq!(got.duplicates, 1);
        assert_eq!(got.corpus.get("1").unwrap().text, "first");
    }

    #[test]
    fn ingest_reports_line_numbers() {
        let data = "{\"id\":\"1\",\"text\":\"a\"}\nnot json\n";
        assert!(matches!(
            ingest_reader(data.as_bytes()),
            Err(Error::MalformedRecord { line: 2, .. })
        ));
        let data = "{\"id\":\"1\"}\n";
        let err = ingest_reader(data.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::MalformedRecord { line: 1, .. }));
        assert!(err.to_string().contains("text"), "{err}");
        let data = "{\"id\":\"1\",\"text\":\"  \"}\n";
        assert!(matches!(
            ingest_reader(data.as_bytes()),
            Err(Error::MalformedRecord { line: 1, .. })
        ));
    }

    #[test]
    fn strip_and_drop() {
        let m = Matcher::new(["اقتلك", "اشرب دمك"]).unwrap();
        let corpus = Corpus::from_tweets([
            Tweet::new("a", "اقتلك").with_label(Label::Dangerous),
            Tweet::new("b", "@u والله اقتلك يا ولد").with_label(Label::Dangerous),
            Tweet::new("c", "اشرب دمك بس").with_label(Label::Safe),
            Tweet::new("d", "اشرب اقتلك دمك ثم شي").with_label(Label::Safe),
        ])
        .0;
        let (out, report) = preprocess(&corpus, &m);
        assert_eq!(report.input, 4);
        assert_eq!(report.retained, 2);
        assert_eq!(report.dropped, 2);
        assert_eq!(out.get("b").unwrap().text, "@u والله يا ولد");
        // removing the inner seed exposes a second one
        assert_eq!(out.get("d").unwrap().text, "ثم شي");
        assert_eq!(report.seeds_removed, 5);

        let (again, report2) = preprocess(&out, &m);
        assert_eq!(again, out);
        assert_eq!(report2.seeds_removed, 0);
    }

    #[test]
    fn ratio_split_all_train() {
        let c = labeled(7, 3);
        let s = split(
            &c,
            &SplitSpec::Ratios {
                train: 1.0,
                dev: 0.0,
                test: 0.0,
            },
            1,
        )
        .unwrap();
        assert_eq!(s.train.len(), 10);
        assert!(s.dev.is_empty() && s.test.is_empty());
    }

    #[test]
    fn ratio_split_is_stratified_and_deterministic() {
        let c = labeled(101, 37);
        let spec = SplitSpec::Ratios {
            train: 0.8,
            dev: 0.1,
            test: 0.1,
        };
        let a = split(&c, &spec, 7).unwrap();
        assert_eq!(a, split(&c, &spec, 7).unwrap());
        assert_ne!(a, split(&c, &spec, 8).unwrap());
        assert!(split_overlap(&a).is_empty());
        assert_eq!(a.train.len() + a.dev.len() + a.test.len(), 138);
        let dangerous_in = |ids: &[String]| ids.iter().filter(|i| i.starts_with('d')).count() as f64;
        assert!((dangerous_in(&a.train) - 37.0 * 0.8).abs() <= 1.0);
        assert!((dangerous_in(&a.dev) - 37.0 * 0.1).abs() <= 1.0);
        assert!((dangerous_in(&a.test) - 37.0 * 0.1).abs() <= 1.0);
    }

    #[test]
    fn bad_ratios() {
        let c = labeled(2, 2);
        assert!(split(
            &c,
            &SplitSpec::Ratios {
                train: 0.5,
                dev: 0.1,
                test: 0.1
            },
            0
        )
        .is_err());
        assert!(split(
            &c,
            &SplitSpec::Ratios {
                train: 1.2,
                dev: -0.1,
                test: -0.1
            },
            0
        )
        .is_err());
    }

    #[test]
    fn counts_exceeding_availability() {
        let c = labeled(5, 2);
        let counts = BTreeMap::from([
            (
                Label::Safe,
                PartCounts {
                    train: 3,
                    dev: 1,
                    test: 1,
                },
            ),
            (
                Label::Dangerous,
                PartCounts {
                    train: 2,
                    dev: 1,
                    test: 0,
                },
            ),
        ]);
        let err = split(&c, &SplitSpec::Counts { counts }, 0).unwrap_err();
        assert!(err.to_string().contains("only 2"), "{err}");
    }

    #[test]
    fn counts_mode_exact() {
        let c = labeled(5, 3);
        let counts = BTreeMap::from([
            (
                Label::Safe,
                PartCounts {
                    train: 3,
                    dev: 1,
                    test: 1,
                },
            ),
            (
                Label::Dangerous,
                PartCounts {
                    train: 1,
                    dev: 1,
                    test: 1,
                },
            ),
        ]);
        let s = split(&c, &SplitSpec::Counts { counts }, 3).unwrap();
        assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (4, 2, 2));
    }

    #[test]
    fn split_spec_json() {
        let spec: SplitSpec = serde_json::from_str(
            r#"{"mode":"counts","counts":{"safe":{"train":1,"dev":0,"test":0},"dangerous":{"train":1,"dev":0,"test":0}}}"#,
        )
        .unwrap();
        assert!(matches!(spec, SplitSpec::Counts { .. }));
        let spec: SplitSpec = serde_json::from_str(r#"{"mode":"ratios","train":0.8,"dev":0.1,"test":0.1}"#).unwrap();
        assert!(matches!(spec, SplitSpec::Ratios { .. }));
    }

    #[test]
    fn no_emoji_row_is_zero() {
        let c = labeled(2, 2);
        let feats = vec![FeatureVector::default(); 4];
        let t = phenomena_stats(&c, &feats).unwrap();
        let emoji = t.rows.iter().find(|r| r.phenomenon == "Emoji").unwrap();
        assert_eq!(
            (emoji.freq, emoji.pct_non_dangerous, emoji.pct_dangerous),
            (0, 0.0, 0.0)
        );
        for r in &t.rows {
            assert_abs_diff_eq!(r.pct_non_dangerous + r.pct_absent_non_dangerous, 100.0);
            assert_abs_diff_eq!(r.pct_dangerous + r.pct_absent_dangerous, 100.0);
        }
        assert!(t.to_text().contains("Percentage (non-dangerous)"));
    }

    #[test]
    fn unlabeled_corpus_has_no_stats() {
        let c = Corpus::from_tweets([Tweet::new("1", "x")]).0;
        assert!(matches!(
            phenomena_stats(&c, &[FeatureVector::default()]),
            Err(Error::Unlabeled)
        ));
    }

    #[test]
    fn single_value_timeline() {
        let s = timeline_stats(&[5], &[]).unwrap();
        assert_eq!(s.mean, 5.0);
        assert_eq!(s.std_dev, 0.0);
        assert_eq!((s.min, s.max, s.p25, s.p50, s.p75), (5, 5, 5, 5, 5));
        assert!(s.avg_timeline_tweets.is_none());
        assert!(timeline_stats(&[], &[]).is_err());
    }

    #[test]
    fn nearest_rank_method() {
        let v = [1, 2, 3, 4];
        assert_eq!(nearest_rank(&v, 25.0), 1);
        assert_eq!(nearest_rank(&v, 50.0), 2);
        assert_eq!(nearest_rank(&v, 75.0), 3);
        assert_eq!(nearest_rank(&v, 100.0), 4);
        assert_eq!(nearest_rank(&v, 0.0), 1);
    }
}
