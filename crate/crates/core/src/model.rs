//! Sparse L2-regularized logistic regression, evaluation metrics, the
//! majority baseline and an end-to-end experiment runner.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{ingest, split, Corpus, DatasetSplit, SplitSpec};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::resources::Resources;
use crate::textproc::FeatureVector;

pub const PARAMS_VERSION: u32 = 1;

/// Named feature values for one tweet. Word tokens are binary indicators.
pub fn feature_map(f: &FeatureVector) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    let mut flag = |name: &str, on: bool| {
        if on {
            m.insert(name.to_string(), 1.0);
        }
    };
    flag("mention", f.has_mention);
    flag("question", f.is_question);
    flag("conditional", f.has_conditional);
    flag("modal", f.has_modal);
    flag("body_part", f.has_body_part());
    flag("laughter", f.has_laughter);
    for (name, count) in [
        ("emoji:pleasant", f.emoji_pleasant),
        ("emoji:unpleasant", f.emoji_unpleasant),
        ("emoji:other", f.emoji_other),
        ("seeds", f.seed_count),
    ] {
        if count > 0 {
            m.insert(name.to_string(), (count as f64).ln_1p());
        }
    }
    for tok in f.tokens.keys() {
        m.insert(format!("tok:{tok}"), 1.0);
    }
    m
}

/// Sparse example: (feature index, value) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: Vec<(usize, f64)>,
    pub label: Label,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    names: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_names(names: impl IntoIterator<Item = String>) -> Self {
        let mut sorted: Vec<String> = names.into_iter().collect();
        sorted.sort();
        sorted.dedup();
        let index = sorted.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Vocabulary { names: sorted, index }
    }

    pub fn build<'a>(maps: impl IntoIterator<Item = &'a BTreeMap<String, f64>>) -> Self {
        Self::from_names(maps.into_iter().flat_map(|m| m.keys().cloned()))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Unknown names are dropped.
    pub fn encode(&self, features: &BTreeMap<String, f64>) -> Vec<(usize, f64)> {
        features.iter().filter_map(|(n, v)| Some((self.get(n)?, *v))).collect()
    }

    fn reindex(&mut self) {
        self.index = self.names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    /// Step size tried by the first line search. Later searches start from
    /// twice the previously accepted step.
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            learning_rate: 1.0,
            l2: 1e-3,
            epochs: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub version: u32,
    pub vocabulary: Vocabulary,
    /// Aligned with `vocabulary`.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub hyperparams: Hyperparams,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(z)) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn target(label: Label) -> f64 {
    match label {
        Label::Safe => 0.0,
        Label::Dangerous => 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    /// Probability of the dangerous class.
    pub probability: f64,
}

impl ModelParams {
    pub fn zeros(vocabulary: Vocabulary, hyperparams: Hyperparams) -> Self {
        ModelParams {
            version: PARAMS_VERSION,
            weights: vec![0.0; vocabulary.len()],
            vocabulary,
            bias: 0.0,
            hyperparams,
        }
    }

    pub fn score(&self, features: &[(usize, f64)]) -> f64 {
        self.bias + features.iter().map(|&(i, v)| self.weights[i] * v).sum::<f64>()
    }

    pub fn predict_encoded(&self, features: &[(usize, f64)]) -> Prediction {
        let p = sigmoid(self.score(features)).clamp(f64::EPSILON, 1.0 - f64::EPSILON);
        Prediction {
            label: if p > 0.5 { Label::Dangerous } else { Label::Safe },
            probability: p,
        }
    }

    /// Features absent from the vocabulary are ignored.
    pub fn predict(&self, features: &BTreeMap<String, f64>) -> Prediction {
        self.predict_encoded(&self.vocabulary.encode(features))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path.as_ref(), self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut p: ModelParams = serde_json::from_str(&crate::error::read_to_string(path)?)?;
        if p.version != PARAMS_VERSION {
            return Err(Error::Config(format!(
                "unsupported params version {} (expected {PARAMS_VERSION})",
                p.version
            )));
        }
        if p.weights.len() != p.vocabulary.len() {
            return Err(Error::Config("weights and vocabulary differ in length".into()));
        }
        if !p.weights.iter().chain([&p.bias]).all(|w| w.is_finite()) {
            return Err(Error::Config("non-finite parameter".into()));
        }
        p.vocabulary.reindex();
        Ok(p)
    }
}

/// Mean logistic loss plus (l2 / 2)·‖w‖² over a fixed data set. The
/// parameter vector is the weights followed by the bias.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    pub data: &'a [Example],
    pub dim: usize,
    pub l2: f64,
}

impl Objective<'_> {
    pub fn loss(&self, params: &[f64]) -> f64 {
        let (w, b) = params.split_at(self.dim);
        let n = self.data.len() as f64;
        let data: f64 = self
            .data
            .iter()
            .map(|ex| {
                let z = b[0] + ex.features.iter().map(|&(i, v)| w[i] * v).sum::<f64>();
                softplus(z) - target(ex.label) * z
            })
            .sum::<f64>()
            / n;
        data + 0.5 * self.l2 * w.iter().map(|x| x * x).sum::<f64>()
    }

    pub fn loss_and_gradient(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let (w, b) = params.split_at(self.dim);
        let n = self.data.len() as f64;
        let mut grad = vec![0.0; self.dim + 1];
        let mut loss = 0.0;
        for ex in self.data {
            let z = b[0] + ex.features.iter().map(|&(i, v)| w[i] * v).sum::<f64>();
            let y = target(ex.label);
            loss += softplus(z) - y * z;
            let r = (sigmoid(z) - y) / n;
            for &(i, v) in &ex.features {
                grad[i] += r * v;
            }
            grad[self.dim] += r;
        }
        loss /= n;
        for (g, wi) in grad.iter_mut().zip(w) {
            *g += self.l2 * wi;
        }
        loss += 0.5 * self.l2 * w.iter().map(|x| x * x).sum::<f64>();
        (loss, grad)
    }
}

/// Full-batch gradient descent with backtracking (Armijo) line search, so
/// the training loss never increases between epochs.
#[derive(Debug)]
pub struct Trainer<'a> {
    objective: Objective<'a>,
    params: Vec<f64>,
    loss: f64,
    hyperparams: Hyperparams,
    vocabulary: Vocabulary,
    converged: bool,
    next_eta: f64,
}

impl<'a> Trainer<'a> {
    pub fn new(data: &'a [Example], vocabulary: Vocabulary, hyperparams: Hyperparams) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyInput("training set is empty".into()));
        }
        let first = data[0].label;
        if data.iter().all(|e| e.label == first) {
            return Err(Error::SingleClass);
        }
        if !(hyperparams.learning_rate > 0.0 && hyperparams.l2 >= 0.0) {
            return Err(Error::Config(
                "learning rate must be positive and l2 non-negative".into(),
            ));
        }
        let objective = Objective {
            data,
            dim: vocabulary.len(),
            l2: hyperparams.l2,
        };
        let params = vec![0.0; objective.dim + 1];
        let loss = objective.loss(&params);
        Ok(Trainer {
            objective,
            params,
            loss,
            hyperparams,
            vocabulary,
            converged: false,
            next_eta: hyperparams.learning_rate,
        })
    }

    pub fn loss(&self) -> f64 {
        self.loss
    }

    /// One epoch. Returns the new loss, or `None` once no step decreases it.
    pub fn step(&mut self) -> Option<f64> {
        if self.converged {
            return None;
        }
        let (loss, grad) = self.objective.loss_and_gradient(&self.params);
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        if g2 < 1e-20 {
            self.converged = true;
            return None;
        }
        let mut eta = self.next_eta;
        for _ in 0..80 {
            let cand: Vec<f64> = self.params.iter().zip(&grad).map(|(p, g)| p - eta * g).collect();
            let cand_loss = self.objective.loss(&cand);
            if cand_loss <= loss - 1e-4 * eta * g2 {
                self.params = cand;
                self.loss = cand_loss;
                self.next_eta = 2.0 * eta;
                return Some(cand_loss);
            }
            eta *= 0.5;
        }
        self.converged = true;
        None
    }

    pub fn params(&self) -> ModelParams {
        let dim = self.objective.dim;
        ModelParams {
            version: PARAMS_VERSION,
            vocabulary: self.vocabulary.clone(),
            weights: self.params[..dim].to_vec(),
            bias: self.params[dim],
            hyperparams: self.hyperparams,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Loss before training followed by the loss after each epoch.
    pub loss_curve: Vec<f64>,
}

pub fn train(data: &[Example], vocabulary: Vocabulary, hyperparams: Hyperparams) -> Result<TrainOutcome> {
    let mut t = Trainer::new(data, vocabulary, hyperparams)?;
    let mut curve = vec![t.loss()];
    for _ in 0..hyperparams.epochs {
        match t.step() {
            Some(l) => curve.push(l),
            None => break,
        }
    }
    Ok(TrainOutcome {
        params: t.params(),
        loss_curve: curve,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// All values in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class: BTreeMap<Label, ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub n: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

/// Per-class and macro metrics. The precision of a class that is never
/// predicted is 0, and so is F1 when precision and recall are both 0.
pub fn evaluate(predictions: &[Label], gold: &[Label]) -> Result<EvalReport> {
    if predictions.len() != gold.len() {
        return Err(Error::LengthMismatch {
            predictions: predictions.len(),
            gold: gold.len(),
        });
    }
    if gold.is_empty() {
        return Err(Error::EmptyInput("nothing to evaluate".into()));
    }
    let mut per_class = BTreeMap::new();
    for class in Label::ALL {
        let tp = predictions
            .iter()
            .zip(gold)
            .filter(|(p, g)| **p == class && **g == class)
            .count();
        let predicted = predictions.iter().filter(|p| **p == class).count();
        let support = gold.iter().filter(|g| **g == class).count();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class.insert(
            class,
            ClassMetrics {
                precision,
                recall,
                f1,
                support,
            },
        );
    }
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.values().map(f).sum::<f64>() / Label::ALL.len() as f64;
    let correct = predictions.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(EvalReport {
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        accuracy: ratio(correct, gold.len()),
        n: gold.len(),
        per_class,
    })
}

/// Aligned table with one row per model: Precision, Recall, Acc, F1 (macro).
pub fn results_table(rows: &[(&str, &EvalReport)]) -> String {
    let width = rows.iter().map(|(n, _)| n.chars().count()).max().unwrap_or(0).max(5);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<width$} {:>9} {:>9} {:>9} {:>9}",
        "Model", "Precision", "Recall", "Acc", "F1"
    );
    for (name, r) in rows {
        let _ = writeln!(
            s,
            "{:<width$} {:>9.2} {:>9.2} {:>9.2} {:>9.2}",
            name, r.macro_precision, r.macro_recall, r.accuracy, r.macro_f1
        );
    }
    s
}

/// Predicts the most frequent training label (safe on ties).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityBaseline {
    pub label: Label,
}

impl MajorityBaseline {
    pub fn fit(labels: &[Label]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyInput("no training labels".into()));
        }
        let dangerous = labels.iter().filter(|l| **l == Label::Dangerous).count();
        let label = if dangerous * 2 > labels.len() {
            Label::Dangerous
        } else {
            Label::Safe
        };
        Ok(MajorityBaseline { label })
    }

    pub fn predict(&self, n: usize) -> Vec<Label> {
        vec![self.label; n]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Majority,
    #[default]
    Logistic,
}

/// Where the train/dev/test ids come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitSource {
    Manifest(PathBuf),
    Spec(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Labeled, preprocessed corpus (JSONL).
    pub corpus: PathBuf,
    pub split: SplitSource,
    #[serde(default)]
    pub augmentation: Option<PathBuf>,
    #[serde(default)]
    pub model: ModelKind,
    #[serde(default)]
    pub hyperparams: Hyperparams,
    /// Seed for the split when `split` is a spec.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub model: ModelKind,
    pub train_size: usize,
    pub augmentation_size: usize,
    pub dev_size: usize,
    pub test_size: usize,
    /// Epoch (1-based) whose parameters scored best on dev.
    pub best_epoch: Option<usize>,
    pub dev: Option<EvalReport>,
    pub test: EvalReport,
}

fn labeled(corpus: &Corpus) -> Result<Vec<Label>> {
    corpus
        .tweets()
        .iter()
        .map(|t| t.gold_label.ok_or(Error::Unlabeled))
        .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub params: Option<ModelParams>,
}

/// Trains on train (plus augmentation), picks the epoch with the best dev
/// macro F1 and reports on test. With `out_dir` set, writes `report.json`
/// and, for the logistic model, `params.json`.
pub fn run_experiment(config: &ExperimentConfig, resources: &Resources) -> Result<ExperimentOutput> {
    let corpus = ingest(&config.corpus)?.corpus;
    let parts: DatasetSplit = match &config.split {
        SplitSource::Manifest(p) => DatasetSplit::load(p)?,
        SplitSource::Spec(p) => split(&corpus, &SplitSpec::load(p)?, config.seed)?,
    };
    let mut train_set = corpus.subset(&parts.train);
    let dev_set = corpus.subset(&parts.dev);
    let test_set = corpus.subset(&parts.test);
    let mut augmentation_size = 0;
    if let Some(p) = &config.augmentation {
        let extra = ingest(p)?.corpus;
        if extra.is_empty() {
            log::warn!("augmentation corpus {} is empty", p.display());
        }
        for t in extra.tweets() {
            if train_set.push(t.clone()) {
                augmentation_size += 1;
            }
        }
    }
    let train_labels = labeled(&train_set)?;
    let dev_labels = labeled(&dev_set)?;
    let test_labels = labeled(&test_set)?;

    let (report, params) = match config.model {
        ModelKind::Majority => {
            let base = MajorityBaseline::fit(&train_labels)?;
            let dev = (!dev_labels.is_empty())
                .then(|| evaluate(&base.predict(dev_labels.len()), &dev_labels))
                .transpose()?;
            let test = evaluate(&base.predict(test_labels.len()), &test_labels)?;
            (
                ExperimentReport {
                    model: ModelKind::Majority,
                    train_size: train_set.len(),
                    augmentation_size,
                    dev_size: dev_set.len(),
                    test_size: test_set.len(),
                    best_epoch: None,
                    dev,
                    test,
                },
                None,
            )
        }
        ModelKind::Logistic => {
            let maps = |c: &Corpus| -> Vec<BTreeMap<String, f64>> {
                c.tweets()
                    .iter()
                    .map(|t| feature_map(&resources.analyze(&t.text).features))
                    .collect()
            };
            let train_maps = maps(&train_set);
            let vocab = Vocabulary::build(&train_maps);
            let encode = |ms: &[BTreeMap<String, f64>], ls: &[Label]| -> Vec<Example> {
                ms.iter()
                    .zip(ls)
                    .map(|(m, l)| Example {
                        features: vocab.encode(m),
                        label: *l,
                    })
                    .collect()
            };
            let train_ex = encode(&train_maps, &train_labels);
            let dev_ex = encode(&maps(&dev_set), &dev_labels);
            let test_ex = encode(&maps(&test_set), &test_labels);
            let predict_all = |p: &ModelParams, ex: &[Example]| -> Vec<Label> {
                ex.iter().map(|e| p.predict_encoded(&e.features).label).collect()
            };

            let mut trainer = Trainer::new(&train_ex, vocab.clone(), config.hyperparams)?;
            let mut best: Option<(usize, f64, ModelParams)> = None;
            for epoch in 1..=config.hyperparams.epochs {
                if trainer.step().is_none() {
                    break;
                }
                if dev_ex.is_empty() {
                    continue;
                }
                let p = trainer.params();
                let f1 = evaluate(&predict_all(&p, &dev_ex), &dev_labels)?.macro_f1;
                if best.as_ref().is_none_or(|(_, b, _)| f1 > *b) {
                    best = Some((epoch, f1, p));
                }
            }
            let (best_epoch, params) = match best {
                Some((e, _, p)) => (Some(e), p),
                None => (None, trainer.params()),
            };
            let dev = (!dev_ex.is_empty())
                .then(|| evaluate(&predict_all(&params, &dev_ex), &dev_labels))
                .transpose()?;
            let test = evaluate(&predict_all(&params, &test_ex), &test_labels)?;
            (
                ExperimentReport {
                    model: ModelKind::Logistic,
                    train_size: train_set.len(),
                    augmentation_size,
                    dev_size: dev_set.len(),
                    test_size: test_set.len(),
                    best_epoch,
                    dev,
                    test,
                },
                Some(params),
            )
        }
    };

    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_json(&dir.join("report.json"), &report)?;
        if let Some(p) = &params {
            p.save(dir.join("params.json"))?;
        }
    }
    Ok(ExperimentOutput { report, params })
}
