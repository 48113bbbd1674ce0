//! Inter-annotator agreement and the append-only label store behind the
//! annotation workflow.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::label::Label;

/// Counts indexed by (annotator A label, annotator B label); safe first.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix2x2 {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix2x2 {
    pub fn new(counts: [[u64; 2]; 2]) -> Self {
        ConfusionMatrix2x2 { counts }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Self {
        let mut m = Self::default();
        for (a, b) in pairs {
            m.add(a, b);
        }
        m
    }

    pub fn add(&mut self, a: Label, b: Label) {
        self.counts[a.index()][b.index()] += 1;
    }

    pub fn get(&self, a: Label, b: Label) -> u64 {
        self.counts[a.index()][b.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn agreed(&self) -> u64 {
        self.counts[0][0] + self.counts[1][1]
    }

    pub fn disagreed(&self) -> u64 {
        self.counts[0][1] + self.counts[1][0]
    }

    pub fn transpose(&self) -> Self {
        let c = self.counts;
        Self::new([[c[0][0], c[1][0]], [c[0][1], c[1][1]]])
    }

    fn row(&self, i: usize) -> u64 {
        self.counts[i][0] + self.counts[i][1]
    }

    fn col(&self, j: usize) -> u64 {
        self.counts[0][j] + self.counts[1][j]
    }

    /// Observed agreement; `None` for an empty matrix.
    pub fn observed(&self) -> Option<f64> {
        let n = self.total();
        (n > 0).then(|| self.agreed() as f64 / n as f64)
    }

    /// Chance agreement from the marginals; `None` for an empty matrix.
    pub fn expected(&self) -> Option<f64> {
        let n = self.total() as f64;
        (n > 0.0).then(|| (0..2).map(|i| self.row(i) as f64 * self.col(i) as f64).sum::<f64>() / (n * n))
    }
}

/// Cohen's kappa, computed in exact integer arithmetic up to the final division.
pub fn cohen_kappa(m: &ConfusionMatrix2x2) -> Result<f64> {
    let n = m.total() as u128;
    if n == 0 {
        return Err(Error::UndefinedKappa("no doubly labeled items".into()));
    }
    let chance: u128 = (0..2).map(|i| m.row(i) as u128 * m.col(i) as u128).sum();
    let n2 = n * n;
    if chance == n2 {
        return Err(Error::UndefinedKappa(
            "chance agreement is 1 (a single label is used throughout)".into(),
        ));
    }
    let observed = m.agreed() as u128 * n;
    Ok((observed as f64 - chance as f64) / (n2 - chance) as f64)
}

/// Kappa summary with a reason when it is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub annotators: Vec<String>,
    pub matrix: ConfusionMatrix2x2,
    pub items: u64,
    pub observed: Option<f64>,
    pub expected: Option<f64>,
    pub kappa: Option<f64>,
    pub reason: Option<String>,
}

impl AgreementReport {
    pub fn new(annotators: Vec<String>, matrix: ConfusionMatrix2x2) -> Self {
        let (kappa, reason) = match cohen_kappa(&matrix) {
            Ok(k) => (Some(k), None),
            Err(Error::UndefinedKappa(why)) => (None, Some(why)),
            Err(e) => (None, Some(e.to_string())),
        };
        AgreementReport {
            annotators,
            items: matrix.total(),
            observed: matrix.observed(),
            expected: matrix.expected(),
            matrix,
            kappa,
            reason,
        }
    }
}

fn differ(labels: &BTreeMap<String, Label>) -> bool {
    labels.len() >= 2 && labels.values().collect::<BTreeSet<_>>().len() > 1
}

/// Ids (in corpus order) of tweets carrying at least two annotator labels
/// that are not all the same.
pub fn disagreements(corpus: &Corpus) -> Vec<String> {
    corpus
        .tweets()
        .iter()
        .filter(|t| differ(&t.annotator_labels))
        .map(|t| t.id.clone())
        .collect()
}

/// Confusion matrix over tweets labeled by both `a` and `b`.
pub fn corpus_matrix(corpus: &Corpus, a: &str, b: &str) -> ConfusionMatrix2x2 {
    ConfusionMatrix2x2::from_pairs(
        corpus
            .tweets()
            .iter()
            .filter_map(|t| Some((*t.annotator_labels.get(a)?, *t.annotator_labels.get(b)?))),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub tweet_id: String,
    pub annotator_id: String,
    pub label: Label,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjudicationRecord {
    pub tweet_id: String,
    pub adjudicator_id: String,
    pub label: Label,
    pub timestamp: DateTime<Utc>,
    /// Whether the annotators disagreed when the adjudication was written.
    pub was_disagreement: bool,
}

/// One line of the store file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StoreRecord {
    Label(LabelRecord),
    Adjudication(AdjudicationRecord),
}

/// Append-only label store. Every query is a function of the record log, so
/// reopening the file reproduces the same state.
#[derive(Debug, Default)]
pub struct LabelStore {
    records: Vec<StoreRecord>,
    labels: BTreeMap<String, BTreeMap<String, Label>>,
    gold: BTreeMap<String, Label>,
    /// Ordered annotator pair -> matrix, kept in step with `labels`.
    pairs: BTreeMap<(String, String), ConfusionMatrix2x2>,
    open: BTreeSet<String>,
    path: Option<PathBuf>,
}

impl LabelStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or creates) a JSONL store and replays its records.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut store = LabelStore::default();
        if path.exists() {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            for (n, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: StoreRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                    line: n + 1,
                    message: e.to_string(),
                })?;
                store.apply(rec)?;
            }
        }
        store.path = Some(path.to_path_buf());
        Ok(store)
    }

    /// Rebuilds a store from records, validating them as if they were submitted.
    pub fn replay(records: impl IntoIterator<Item = StoreRecord>) -> Result<Self> {
        let mut store = LabelStore::default();
        for r in records {
            store.apply(r)?;
        }
        Ok(store)
    }

    fn apply(&mut self, rec: StoreRecord) -> Result<()> {
        match &rec {
            StoreRecord::Label(l) => {
                let slot = self.labels.entry(l.tweet_id.clone()).or_default();
                if slot.contains_key(&l.annotator_id) {
                    return Err(Error::DuplicateLabel {
                        tweet_id: l.tweet_id.clone(),
                        annotator_id: l.annotator_id.clone(),
                    });
                }
                for (other, &theirs) in slot.iter() {
                    self.pairs
                        .entry((l.annotator_id.clone(), other.clone()))
                        .or_default()
                        .add(l.label, theirs);
                    self.pairs
                        .entry((other.clone(), l.annotator_id.clone()))
                        .or_default()
                        .add(theirs, l.label);
                }
                slot.insert(l.annotator_id.clone(), l.label);
                if differ(slot) && !self.gold.contains_key(&l.tweet_id) {
                    self.open.insert(l.tweet_id.clone());
                }
            }
            StoreRecord::Adjudication(a) => {
                self.gold.insert(a.tweet_id.clone(), a.label);
                self.open.remove(&a.tweet_id);
            }
        }
        self.records.push(rec);
        Ok(())
    }

    fn append(&mut self, rec: StoreRecord) -> Result<()> {
        if let Some(path) = &self.path {
            let line = serde_json::to_string(&rec)?;
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Error::io(path, e))?;
            writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
            f.flush().map_err(|e| Error::io(path, e))?;
        }
        self.apply(rec)
    }

    /// Records a label; a second label for the same (tweet, annotator) is rejected.
    pub fn submit(&mut self, record: LabelRecord) -> Result<()> {
        if self.label_of(&record.tweet_id, &record.annotator_id).is_some() {
            return Err(Error::DuplicateLabel {
                tweet_id: record.tweet_id,
                annotator_id: record.annotator_id,
            });
        }
        self.append(StoreRecord::Label(record))
    }

    /// Writes a gold label. Annotator labels stay untouched. Returns the
    /// stored record, whose `was_disagreement` flags adjudications of
    /// tweets that were not in dispute.
    pub fn adjudicate(
        &mut self,
        tweet_id: &str,
        adjudicator_id: &str,
        label: Label,
        timestamp: DateTime<Utc>,
    ) -> Result<AdjudicationRecord> {
        let rec = AdjudicationRecord {
            tweet_id: tweet_id.to_string(),
            adjudicator_id: adjudicator_id.to_string(),
            label,
            timestamp,
            was_disagreement: self.labels.get(tweet_id).is_some_and(differ),
        };
        self.append(StoreRecord::Adjudication(rec.clone()))?;
        Ok(rec)
    }

    pub fn records(&self) -> &[StoreRecord] {
        &self.records
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn label_of(&self, tweet_id: &str, annotator_id: &str) -> Option<Label> {
        self.labels.get(tweet_id)?.get(annotator_id).copied()
    }

    pub fn labels_for(&self, tweet_id: &str) -> BTreeMap<String, Label> {
        self.labels.get(tweet_id).cloned().unwrap_or_default()
    }

    pub fn gold(&self, tweet_id: &str) -> Option<Label> {
        self.gold.get(tweet_id).copied()
    }

    pub fn annotators(&self) -> BTreeSet<String> {
        self.labels.values().flat_map(|m| m.keys().cloned()).collect()
    }

    pub fn label_count(&self) -> usize {
        self.labels.values().map(BTreeMap::len).sum()
    }

    pub fn matrix(&self, a: &str, b: &str) -> ConfusionMatrix2x2 {
        if a != b {
            return self
                .pairs
                .get(&(a.to_string(), b.to_string()))
                .copied()
                .unwrap_or_default();
        }
        ConfusionMatrix2x2::from_pairs(self.labels.values().filter_map(|m| Some((*m.get(a)?, *m.get(b)?))))
    }

    pub fn agreement(&self, a: &str, b: &str) -> AgreementReport {
        AgreementReport::new(vec![a.to_string(), b.to_string()], self.matrix(a, b))
    }

    /// Disputed tweets that have not been adjudicated yet, sorted by id.
    pub fn open_disagreements(&self) -> Vec<String> {
        self.open.iter().cloned().collect()
    }

    pub fn open_disagreement_count(&self) -> usize {
        self.open.len()
    }

    /// Copies annotator labels onto the corpus. The gold label becomes the
    /// adjudicated one, or the shared label when at least two annotators agree.
    pub fn annotate(&self, corpus: &Corpus) -> Corpus {
        Corpus::from_tweets(corpus.tweets().iter().map(|t| {
            let mut t = t.clone();
            let labels = self.labels_for(&t.id);
            if let Some(g) = self.gold(&t.id) {
                t.gold_label = Some(g);
            } else if labels.len() >= 2 && !differ(&labels) {
                t.gold_label = labels.values().next().copied();
            }
            t.annotator_labels.extend(labels);
            t
        }))
        .0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Tweet;

    fn ts() -> DateTime<Utc> {
        DateTime::from_timestamp(1_600_000_000, 0).unwrap()
    }

    fn rec(tweet: &str, who: &str, label: Label) -> LabelRecord {
        LabelRecord {
            tweet_id: tweet.into(),
            annotator_id: who.into(),
            label,
            timestamp: ts(),
        }
    }

    #[test]
    fn perfect_agreement() {
        let k = cohen_kappa(&ConfusionMatrix2x2::new([[7, 0], [0, 3]])).unwrap();
        assert_eq!(k, 1.0);
    }

    #[test]
    fn constant_annotator_is_undefined() {
        let m = ConfusionMatrix2x2::new([[10, 0], [0, 0]]);
        assert!(matches!(cohen_kappa(&m), Err(Error::UndefinedKappa(_))));
        assert!(matches!(
            cohen_kappa(&ConfusionMatrix2x2::default()),
            Err(Error::UndefinedKappa(_))
        ));
        // one annotator constant, the other not: p_e < 1 so kappa is 0
        let m = ConfusionMatrix2x2::new([[6, 4], [0, 0]]);
        assert_eq!(cohen_kappa(&m).unwrap(), 0.0);
    }

    #[test]
    fn report_on_empty_store() {
        let store = LabelStore::in_memory();
        let r = store.agreement("a", "b");
        assert!(r.kappa.is_none());
        assert!(r.reason.is_some());
        assert_eq!(r.items, 0);
    }

    #[test]
    fn corpus_disagreements() {
        let mut t1 = Tweet::new("1", "x");
        t1.annotator_labels = BTreeMap::from([("a".into(), Label::Safe), ("b".into(), Label::Dangerous)]);
        let mut t2 = Tweet::new("2", "x");
        t2.annotator_labels = BTreeMap::from([("a".into(), Label::Safe), ("b".into(), Label::Safe)]);
        let mut t3 = Tweet::new("3", "x");
        t3.annotator_labels = BTreeMap::from([("a".into(), Label::Dangerous)]);
        let corpus = Corpus::from_tweets([t1, t2, t3]).0;
        assert_eq!(disagreements(&corpus), vec!["1".to_string()]);
        assert_eq!(corpus_matrix(&corpus, "a", "b").total(), 2);
    }

    #[test]
    fn double_submission_conflicts() {
        let mut s = LabelStore::in_memory();
        s.submit(rec("t", "a", Label::Safe)).unwrap();
        let err = s.submit(rec("t", "a", Label::Dangerous)).unwrap_err();
        assert!(matches!(err, Error::DuplicateLabel { .. }));
        assert_eq!(s.label_of("t", "a"), Some(Label::Safe));
    }

    #[test]
    fn adjudication_keeps_annotator_labels() {
        let mut s = LabelStore::in_memory();
        s.submit(rec("t", "a", Label::Safe)).unwrap();
        s.submit(rec("t", "b", Label::Dangerous)).unwrap();
        s.submit(rec("u", "a", Label::Safe)).unwrap();
        s.submit(rec("u", "b", Label::Safe)).unwrap();
        assert_eq!(s.open_disagreements(), vec!["t".to_string()]);
        let r = s.adjudicate("t", "judge", Label::Dangerous, ts()).unwrap();
        assert!(r.was_disagreement);
        assert!(s.open_disagreements().is_empty());
        assert_eq!(s.labels_for("t").len(), 2);
        assert_eq!(s.gold("t"), Some(Label::Dangerous));
        let flagged = s.adjudicate("u", "judge", Label::Safe, ts()).unwrap();
        assert!(!flagged.was_disagreement);
    }

    #[test]
    fn file_store_replays() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.jsonl");
        {
            let mut s = LabelStore::open(&path).unwrap();
            s.submit(rec("t", "a", Label::Safe)).unwrap();
            s.submit(rec("t", "b", Label::Dangerous)).unwrap();
            s.adjudicate("t", "judge", Label::Safe, ts()).unwrap();
        }
        let s = LabelStore::open(&path).unwrap();
        assert_eq!(s.records().len(), 3);
        assert_eq!(s.gold("t"), Some(Label::Safe));
        assert!(matches!(s.records()[2], StoreRecord::Adjudication(_)));
        let again = LabelStore::replay(s.records().to_vec()).unwrap();
        assert_eq!(again.records(), s.records());
    }

    #[test]
    fn annotate_corpus() {
        let mut s = LabelStore::in_memory();
        s.submit(rec("1", "a", Label::Dangerous)).unwrap();
        s.submit(rec("1", "b", Label::Dangerous)).unwrap();
        s.submit(rec("2", "a", Label::Dangerous)).unwrap();
        let corpus = Corpus::from_tweets([Tweet::new("1", "x"), Tweet::new("2", "y")]).0;
        let out = s.annotate(&corpus);
        assert_eq!(out.get("1").unwrap().gold_label, Some(Label::Dangerous));
        assert_eq!(out.get("2").unwrap().gold_label, None);
        assert_eq!(out.get("2").unwrap().annotator_labels.len(), 1);
    }
}
