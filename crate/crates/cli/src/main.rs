//! `dangspeech`: one binary, one subcommand per pipeline stage.

mod config;
mod error;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dangspeech_core::agreement::{corpus_matrix, AgreementReport, ConfusionMatrix2x2, LabelStore};
use dangspeech_core::collector::{
    write_result, CollectionResult, Collector, CollectorConfig, FailurePlan, SimClock, SyntheticSource, Window,
};
use dangspeech_core::corpus::{
    ingest, phenomena_stats, preprocess, split, timeline_stats, Corpus, DatasetSplit, SplitSpec,
};
use dangspeech_core::model::{
    evaluate, feature_map, results_table, run_experiment, EvalReport, ExperimentConfig, Hyperparams, MajorityBaseline,
    ModelKind, ModelParams, SplitSource,
};
use dangspeech_core::resources::Resources;
use dangspeech_core::seedgen::{diff_against_published, load_published};
use dangspeech_core::synth::{annotated_corpus, collector_world, CorpusShape, WorldShape};
use dangspeech_core::Label;
use dangspeech_service::{router, serve, AppState};
use serde::Serialize;

use config::CliConfig;
use error::CliError;

type CmdResult = Result<(), CliError>;

/// `print!` that exits quietly when stdout is closed early (e.g. piped into `head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        let mut stdout = std::io::stdout().lock();
        if let Err(e) = write!(stdout, $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
        }
    }};
}

macro_rules! outln {
    ($($arg:tt)*) => {{
        out!($($arg)*);
        out!("\n");
    }};
}

#[derive(Debug, Parser)]
#[command(
    name = "dangspeech",
    version,
    about = "Build, annotate and evaluate Arabic dangerous-speech corpora"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Directory holding the lexicon, seed rules, marker lists and rules.toml [default: data]
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Seed for every random choice [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for written artifacts [default: out]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML file overriding data paths, seed, output directory and rule toggles
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Expand the threat lexicon into seed phrases and write seeds.txt.
    ///
    /// Each verb is inflected for first-person singular and plural subjects
    /// and for object suffixes; the result is the seed list used for search.
    GenSeeds {
        /// Compare against a published seed list and fail on any difference
        #[arg(long)]
        check: Option<PathBuf>,
    },
    /// Find seed phrases in texts (arguments, or one per line with --input).
    ///
    /// Matching runs on normalized tokens, so spelling variants of alef,
    /// yeh and teh marbuta as well as diacritics and tatweel still match.
    Match(TextInput),
    /// Print the feature vector of each text.
    ///
    /// Features cover mentions, questions, emoji sentiment, conditional and
    /// modal markers, body parts, laughter and seed counts.
    Features(TextInput),
    /// Apply the annotation guideline rules to each text.
    ///
    /// Prints the suggested label, the rule that decided it and the
    /// evaluation trace. Texts without a seed get no verdict.
    Judge(TextInput),
    /// Load a JSONL corpus, drop duplicate ids and write corpus.jsonl.
    Ingest { input: PathBuf },
    /// Remove seed phrases and drop tweets left with fewer than two words.
    ///
    /// Writes preprocessed.jsonl and preprocess_report.json.
    Preprocess { input: PathBuf },
    /// Stratified train/dev/test split; writes split.json.
    ///
    /// The same corpus, spec and --seed always give the same manifest.
    Split {
        /// Labeled corpus [default: <out>/preprocessed.jsonl]
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Split spec with a `mode` of `ratios` or `counts` [default: <data-dir>/table8.json]
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Phenomena frequencies by class, and optional per-user timeline stats.
    Stats {
        /// Labeled corpus [default: <out>/preprocessed.jsonl]
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// TSV of `user<TAB>dangerous_tweets<TAB>timeline_tweets`
        #[arg(long)]
        timelines: Option<PathBuf>,
    },
    /// Cohen's kappa for two annotators.
    ///
    /// Give either a 2x2 matrix (rows annotator A, columns annotator B,
    /// safe first) or a corpus whose tweets carry annotator labels.
    Kappa {
        /// Four counts: safe/safe, safe/dangerous, dangerous/safe, dangerous/dangerous
        #[arg(long, value_delimiter = ',', conflicts_with = "corpus")]
        matrix: Option<Vec<u64>>,
        #[arg(long, required_unless_present = "matrix")]
        corpus: Option<PathBuf>,
        /// The two annotator ids to compare
        #[arg(long, value_delimiter = ',', default_values = ["A", "B"])]
        annotators: Vec<String>,
    },
    /// Train a classifier, pick the epoch with the best dev macro F1 and report test metrics.
    ///
    /// Writes report.json and, for the logistic model, params.json.
    Train {
        /// Labeled corpus [default: <out>/preprocessed.jsonl]
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Split manifest from `split` [default: <out>/split.json]
        #[arg(long, conflicts_with = "spec")]
        split: Option<PathBuf>,
        /// Split spec to apply with --seed instead of a manifest
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Extra labeled tweets added to the training part only
        #[arg(long)]
        augmentation: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ModelArg::Logistic)]
        model: ModelArg,
        #[arg(long, default_value_t = Hyperparams::default().epochs)]
        epochs: usize,
        #[arg(long, default_value_t = Hyperparams::default().learning_rate)]
        learning_rate: f64,
        #[arg(long, default_value_t = Hyperparams::default().l2)]
        l2: f64,
    },
    /// Evaluate a baseline or trained model on the test part; writes eval.json.
    ///
    /// With a `counts` split spec and no corpus, the majority baseline is
    /// scored from the class counts alone.
    Eval {
        #[arg(long, value_enum, required_unless_present = "params")]
        baseline: Option<BaselineArg>,
        /// Parameters written by `train`
        #[arg(long, conflicts_with = "baseline")]
        params: Option<PathBuf>,
        /// Split manifest or split spec
        #[arg(long)]
        split: PathBuf,
        /// Labeled corpus
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Run the two-phase collector against a simulated platform.
    ///
    /// Phase one searches for every seed inside the time window; phase two
    /// crawls the timelines of the users found. Requests are rate limited
    /// and retried with exponential backoff on a simulated clock.
    CollectSim {
        /// Checkpoint directory [default: <out>/checkpoint]
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Resume from the checkpoint directory
        #[arg(long)]
        resume: bool,
        /// Stop and checkpoint after this many work units
        #[arg(long)]
        stop_after: Option<usize>,
        /// Share of requests that fail transiently before succeeding
        #[arg(long, default_value_t = 0.0)]
        transient_rate: f64,
        /// Simulated users
        #[arg(long, default_value_t = WorldShape::default().users)]
        users: usize,
    },
    /// Serve the annotation API under /v1.
    Serve {
        /// Corpus to annotate
        #[arg(long)]
        corpus: PathBuf,
        /// Append-only label store [default: <out>/labels.jsonl]
        #[arg(long)]
        store: Option<PathBuf>,
        /// Registered annotator ids; agreement is reported for the first two
        #[arg(long, value_delimiter = ',', default_values = ["A", "B"])]
        annotators: Vec<String>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Allowed CORS origin (any origin when omitted)
        #[arg(long)]
        cors_origin: Option<String>,
    },
    /// Write a synthetic labeled corpus or a simulated platform dump.
    Synth {
        #[arg(long, value_enum, default_value_t = SynthKind::Annotated)]
        kind: SynthKind,
    },
}

#[derive(Debug, Args)]
struct TextInput {
    texts: Vec<String>,
    /// File with one text per line
    #[arg(long, conflicts_with = "texts")]
    input: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Majority,
    Logistic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BaselineArg {
    Majority,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SynthKind {
    /// 5,011 dual-annotated tweets
    Annotated,
    /// 1,000 timeline tweets with planted seeds
    World,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GenSeeds { .. } => "gen-seeds",
            Command::Match(_) => "match",
            Command::Features(_) => "features",
            Command::Judge(_) => "judge",
            Command::Ingest { .. } => "ingest",
            Command::Preprocess { .. } => "preprocess",
            Command::Split { .. } => "split",
            Command::Stats { .. } => "stats",
            Command::Kappa { .. } => "kappa",
            Command::Train { .. } => "train",
            Command::Eval { .. } => "eval",
            Command::CollectSim { .. } => "collect-sim",
            Command::Serve { .. } => "serve",
            Command::Synth { .. } => "synth",
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let command = std::env::args()
                .skip(1)
                .find(|a| !a.starts_with('-'))
                .unwrap_or_default();
            let err = serde_json::json!({
                "error": { "kind": "usage", "message": e.kind().to_string(), "command": command }
            });
            eprintln!("{}", e.render());
            eprintln!("{err}");
            return ExitCode::from(2);
        }
    };
    let name = cli.command.name();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json(name));
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let g = cli.global;
    let cfg = CliConfig::resolve(g.data_dir, g.seed, g.out, g.config.as_deref())?;
    match cli.command {
        Command::GenSeeds { check } => gen_seeds(&cfg, check),
        Command::Match(input) => per_text(
            &cfg,
            input,
            "matches.jsonl",
            |res, text| serde_json::json!({ "text": text, "matches": res.matcher.find(text) }),
        ),
        Command::Features(input) => per_text(
            &cfg,
            input,
            "features.jsonl",
            |res, text| serde_json::json!({ "text": text, "features": res.analyze(text).features }),
        ),
        Command::Judge(input) => per_text(&cfg, input, "judgements.jsonl", |res, text| {
            let a = res.analyze(text);
            let verdict = res.engine.judge_analysis(&a).ok();
            let trace = verdict.as_ref().map(|_| res.engine.trace(&a));
            serde_json::json!({ "text": text, "verdict": verdict, "trace": trace })
        }),
        Command::Ingest { input } => cmd_ingest(&cfg, &input),
        Command::Preprocess { input } => cmd_preprocess(&cfg, &input),
        Command::Split { corpus, spec } => cmd_split(&cfg, corpus, spec),
        Command::Stats { corpus, timelines } => cmd_stats(&cfg, corpus, timelines),
        Command::Kappa {
            matrix,
            corpus,
            annotators,
        } => cmd_kappa(&cfg, matrix, corpus, &annotators),
        Command::Train {
            corpus,
            split,
            spec,
            augmentation,
            model,
            epochs,
            learning_rate,
            l2,
        } => {
            let hp = Hyperparams {
                learning_rate,
                l2,
                epochs,
                seed: cfg.seed,
            };
            cmd_train(&cfg, corpus, split, spec, augmentation, model, hp)
        }
        Command::Eval {
            baseline,
            params,
            split,
            corpus,
        } => cmd_eval(&cfg, baseline.is_some(), params, &split, corpus),
        Command::CollectSim {
            checkpoint,
            resume,
            stop_after,
            transient_rate,
            users,
        } => cmd_collect(&cfg, checkpoint, resume, stop_after, transient_rate, users),
        Command::Serve {
            corpus,
            store,
            annotators,
            addr,
            cors_origin,
        } => cmd_serve(&cfg, &corpus, store, annotators, addr, cors_origin),
        Command::Synth { kind } => cmd_synth(&cfg, kind),
    }
}

fn require(paths: &[&Path]) -> CmdResult {
    for p in paths {
        if !p.is_file() {
            return Err(CliError::io(
                p,
                std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
            ));
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn print_json<T: Serialize>(value: &T) -> CmdResult {
    outln!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn gen_seeds(cfg: &CliConfig, check: Option<PathBuf>) -> CmdResult {
    if let Some(p) = &check {
        require(&[p])?;
    }
    let res = cfg.resources()?;
    let out = cfg.out_file("seeds.txt")?;
    std::fs::write(&out, res.seeds.to_lines()).map_err(|e| CliError::io(&out, e))?;
    let Some(published) = check else {
        outln!("{} phrases written to {}", res.seeds.len(), out.display());
        return Ok(());
    };
    let diff = diff_against_published(&res.seeds, &load_published(&published)?);
    let summary = format!(
        "{} phrases, {} missing, {} extra",
        res.seeds.len(),
        diff.missing.len(),
        diff.extra.len()
    );
    outln!("{summary}");
    write_json(&cfg.out_file("seed_diff.json")?, &diff)?;
    if diff.is_exact() {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "seed list differs from {}: {summary}",
            published.display()
        )))
    }
}

fn per_text(
    cfg: &CliConfig,
    input: TextInput,
    file: &str,
    f: impl Fn(&Resources, &str) -> serde_json::Value,
) -> CmdResult {
    if let Some(p) = &input.input {
        require(&[p])?;
    }
    let res = cfg.resources()?;
    let texts = match &input.input {
        Some(p) => {
            let fh = std::fs::File::open(p).map_err(|e| CliError::io(p, e))?;
            BufReader::new(fh)
                .lines()
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::io(p, e))?
                .into_iter()
                .filter(|l| !l.trim().is_empty())
                .collect()
        }
        None => input.texts,
    };
    if texts.is_empty() {
        return Err(CliError::Usage(
            "no input texts (pass them as arguments or with --input)".into(),
        ));
    }
    let path = cfg.out_file(file)?;
    let mut out = String::new();
    for t in &texts {
        let line = serde_json::to_string(&f(&res, t))?;
        outln!("{line}");
        out.push_str(&line);
        out.push('\n');
    }
    std::fs::write(&path, out).map_err(|e| CliError::io(&path, e))
}

fn cmd_ingest(cfg: &CliConfig, input: &Path) -> CmdResult {
    require(&[input])?;
    let ing = ingest(input)?;
    ing.corpus.save(cfg.out_file("corpus.jsonl")?)?;
    outln!("{} tweets, {} duplicates dropped", ing.corpus.len(), ing.duplicates);
    Ok(())
}

fn cmd_preprocess(cfg: &CliConfig, input: &Path) -> CmdResult {
    require(&[input])?;
    let res = cfg.resources()?;
    let corpus = ingest(input)?.corpus;
    let (kept, report) = preprocess(&corpus, &res.matcher);
    kept.save(cfg.out_file("preprocessed.jsonl")?)?;
    write_json(&cfg.out_file("preprocess_report.json")?, &report)?;
    let by_label: Vec<String> = report
        .retained_by_label
        .iter()
        .map(|(l, n)| format!("{l} {n}"))
        .collect();
    outln!(
        "{} in, {} retained ({}), {} dropped, {} seed occurrences removed",
        report.input,
        report.retained,
        by_label.join(", "),
        report.dropped,
        report.seeds_removed
    );
    Ok(())
}

fn default_corpus(cfg: &CliConfig, corpus: Option<PathBuf>) -> PathBuf {
    corpus.unwrap_or_else(|| cfg.out.join("preprocessed.jsonl"))
}

fn cmd_split(cfg: &CliConfig, corpus: Option<PathBuf>, spec: Option<PathBuf>) -> CmdResult {
    let corpus = default_corpus(cfg, corpus);
    let spec = spec.unwrap_or_else(|| cfg.data_dir.join("table8.json"));
    require(&[&corpus, &spec])?;
    let parts = split(&ingest(&corpus)?.corpus, &SplitSpec::load(&spec)?, cfg.seed)?;
    let out = cfg.out_file("split.json")?;
    write_json(&out, &parts)?;
    outln!(
        "train {}, dev {}, test {} (seed {}) written to {}",
        parts.train.len(),
        parts.dev.len(),
        parts.test.len(),
        parts.seed,
        out.display()
    );
    Ok(())
}

/// Reads `user<TAB>dangerous<TAB>timeline` rows; a non-numeric first row is a header.
fn read_timelines(path: &Path) -> Result<(Vec<u64>, Vec<u64>), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let (mut dangerous, mut sizes) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let parsed = match cols.as_slice() {
            [_, d, t] => d.trim().parse::<u64>().ok().zip(t.trim().parse::<u64>().ok()),
            _ => None,
        };
        match parsed {
            Some((d, t)) => {
                dangerous.push(d);
                sizes.push(t);
            }
            None if i == 0 => continue,
            None => {
                return Err(CliError::Usage(format!(
                    "{}:{}: expected user, dangerous count and timeline size separated by tabs",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok((dangerous, sizes))
}

fn cmd_stats(cfg: &CliConfig, corpus: Option<PathBuf>, timelines: Option<PathBuf>) -> CmdResult {
    let corpus = default_corpus(cfg, corpus);
    require(&[&corpus])?;
    if let Some(t) = &timelines {
        require(&[t])?;
    }
    let res = cfg.resources()?;
    let corpus = ingest(&corpus)?.corpus;
    let features: Vec<_> = corpus.tweets().iter().map(|t| res.analyze(&t.text).features).collect();
    let table = phenomena_stats(&corpus, &features)?;
    write_json(&cfg.out_file("phenomena.json")?, &table)?;
    out!("{}", table.to_text());
    if let Some(t) = timelines {
        let (dangerous, sizes) = read_timelines(&t)?;
        let stats = timeline_stats(&dangerous, &sizes)?;
        write_json(&cfg.out_file("timeline.json")?, &stats)?;
        out!("{}", stats.to_text());
    }
    Ok(())
}

fn print_agreement(report: &AgreementReport) -> CmdResult {
    match report.kappa {
        Some(k) => outln!("kappa {k:.4} over {} items", report.items),
        None => outln!("kappa undefined: {}", report.reason.as_deref().unwrap_or("no items")),
    }
    print_json(report)
}

fn cmd_kappa(cfg: &CliConfig, matrix: Option<Vec<u64>>, corpus: Option<PathBuf>, annotators: &[String]) -> CmdResult {
    let [a, b] = annotators else {
        return Err(CliError::Usage("--annotators takes exactly two ids".into()));
    };
    let (a, b) = (a.clone(), b.clone());
    let m = match (matrix, corpus) {
        (Some(v), _) => match v.as_slice() {
            &[ss, sd, ds, dd] => ConfusionMatrix2x2::new([[ss, sd], [ds, dd]]),
            _ => return Err(CliError::Usage("--matrix takes exactly four counts".into())),
        },
        (None, Some(p)) => {
            require(&[&p])?;
            corpus_matrix(&ingest(&p)?.corpus, &a, &b)
        }
        (None, None) => return Err(CliError::Usage("give --matrix or --corpus".into())),
    };
    let report = AgreementReport::new(vec![a, b], m);
    write_json(&cfg.out_file("agreement.json")?, &report)?;
    print_agreement(&report)
}

fn cmd_train(
    cfg: &CliConfig,
    corpus: Option<PathBuf>,
    manifest: Option<PathBuf>,
    spec: Option<PathBuf>,
    augmentation: Option<PathBuf>,
    model: ModelArg,
    hyperparams: Hyperparams,
) -> CmdResult {
    let corpus = default_corpus(cfg, corpus);
    let split = match (manifest, spec) {
        (_, Some(s)) => SplitSource::Spec(s),
        (Some(m), None) => SplitSource::Manifest(m),
        (None, None) => SplitSource::Manifest(cfg.out.join("split.json")),
    };
    let split_path = match &split {
        SplitSource::Manifest(p) | SplitSource::Spec(p) => p.clone(),
    };
    require(&[&corpus, &split_path])?;
    if let Some(a) = &augmentation {
        require(&[a])?;
    }
    let res = cfg.resources()?;
    let exp = ExperimentConfig {
        corpus,
        split,
        augmentation,
        model: match model {
            ModelArg::Majority => ModelKind::Majority,
            ModelArg::Logistic => ModelKind::Logistic,
        },
        hyperparams,
        seed: cfg.seed,
        out_dir: Some(cfg.out.clone()),
    };
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
    let output = run_experiment(&exp, &res)?;
    let r = &output.report;
    outln!(
        "train {} (+{} augmentation), dev {}, test {}, best epoch {}",
        r.train_size,
        r.augmentation_size,
        r.dev_size,
        r.test_size,
        r.best_epoch.map_or("-".to_string(), |e| e.to_string())
    );
    let mut rows: Vec<(&str, &EvalReport)> = Vec::new();
    if let Some(d) = &r.dev {
        rows.push(("dev", d));
    }
    rows.push(("test", &r.test));
    out!("{}", results_table(&rows));
    Ok(())
}

fn test_gold(corpus: &Corpus, ids: &[String]) -> Result<Vec<Label>, CliError> {
    ids.iter()
        .map(|id| {
            corpus
                .get(id)
                .and_then(|t| t.gold_label)
                .ok_or_else(|| CliError::Usage(format!("split id `{id}` is missing or unlabeled in the corpus")))
        })
        .collect()
}

fn cmd_eval(
    cfg: &CliConfig,
    baseline: bool,
    params: Option<PathBuf>,
    split_path: &Path,
    corpus: Option<PathBuf>,
) -> CmdResult {
    require(&[split_path])?;
    let raw: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(split_path).map_err(|e| CliError::io(split_path, e))?)?;
    let is_spec = raw.get("mode").is_some();

    let (name, report) = match (corpus, is_spec) {
        (None, true) => {
            let SplitSpec::Counts { counts } = serde_json::from_value(raw)? else {
                return Err(CliError::Usage("a ratios split spec needs --corpus".into()));
            };
            if !baseline {
                return Err(CliError::Usage("scoring a trained model needs --corpus".into()));
            }
            let train: Vec<Label> = counts
                .iter()
                .flat_map(|(l, c)| std::iter::repeat_n(*l, c.train))
                .collect();
            let gold: Vec<Label> = counts
                .iter()
                .flat_map(|(l, c)| std::iter::repeat_n(*l, c.test))
                .collect();
            let base = MajorityBaseline::fit(&train)?;
            ("Baseline", evaluate(&base.predict(gold.len()), &gold)?)
        }
        (None, false) => return Err(CliError::Usage("a split manifest needs --corpus".into())),
        (Some(c), _) => {
            require(&[&c])?;
            let corpus = ingest(&c)?.corpus;
            let parts: DatasetSplit = if is_spec {
                split(&corpus, &serde_json::from_value(raw)?, cfg.seed)?
            } else {
                serde_json::from_value(raw)?
            };
            let gold = test_gold(&corpus, &parts.test)?;
            match params {
                None => {
                    let train = test_gold(&corpus, &parts.train)?;
                    let base = MajorityBaseline::fit(&train)?;
                    ("Baseline", evaluate(&base.predict(gold.len()), &gold)?)
                }
                Some(p) => {
                    require(&[&p])?;
                    let model = ModelParams::load(&p)?;
                    let res = cfg.resources()?;
                    let preds: Vec<Label> = parts
                        .test
                        .iter()
                        .filter_map(|id| corpus.get(id))
                        .map(|t| model.predict(&feature_map(&res.analyze(&t.text).features)).label)
                        .collect();
                    ("Logistic", evaluate(&preds, &gold)?)
                }
            }
        }
    };
    write_json(&cfg.out_file("eval.json")?, &report)?;
    out!("{}", results_table(&[(name, &report)]));
    outln!(
        "Acc {:.2}, F1 {:.2}, P {:.2}, R {:.2}",
        report.accuracy,
        report.macro_f1,
        report.macro_precision,
        report.macro_recall
    );
    Ok(())
}

#[derive(Serialize)]
struct CollectReport<'a> {
    tweets: usize,
    users: usize,
    planted: usize,
    recovered_planted: usize,
    extra: usize,
    elapsed_secs: f64,
    counters: &'a dangspeech_core::collector::Counters,
}

fn cmd_collect(
    cfg: &CliConfig,
    checkpoint: Option<PathBuf>,
    resume: bool,
    stop_after: Option<usize>,
    transient_rate: f64,
    users: usize,
) -> CmdResult {
    if !(0.0..=1.0).contains(&transient_rate) {
        return Err(CliError::Usage("--transient-rate must be within [0, 1]".into()));
    }
    let ckpt = checkpoint.unwrap_or_else(|| cfg.out.join("checkpoint"));
    let res = cfg.resources()?;
    let base = WorldShape::default();
    let shape = WorldShape {
        users,
        threat_users: base.threat_users.min(users),
        ..base
    };
    let world = collector_world(&res, &shape, cfg.seed)?;
    let plan = FailurePlan {
        transient_rate,
        transient_failures: 2,
        broken_users: BTreeSet::new(),
        seed: cfg.seed,
    };
    let source = SyntheticSource::with_failures(world.tweets.clone(), plan);
    let config = CollectorConfig::new(Window {
        start: world.window_start,
        end: world.window_end,
    });
    let mut collector = if resume {
        Collector::resume(source, SimClock::default(), &res.matcher, config, &ckpt)?
    } else {
        Collector::new(source, SimClock::default(), &res.matcher, config)
    };
    if let Some(units) = stop_after {
        if collector.run_for(units)? {
            collector.checkpoint(&ckpt)?;
            let s = collector.state();
            outln!(
                "stopped in phase {:?} after {} requests; checkpoint in {}",
                s.phase,
                s.counters.requests,
                ckpt.display()
            );
            return Ok(());
        }
    }
    let result: CollectionResult = collector.run()?;
    let out = cfg.out_file("collected.jsonl")?;
    let fh = std::fs::File::create(&out).map_err(|e| CliError::io(&out, e))?;
    let mut w = std::io::BufWriter::new(fh);
    write_result(&result, &mut w)?;
    w.flush().map_err(|e| CliError::io(&out, e))?;

    let got: BTreeSet<&str> = result.tweets.iter().map(|t| t.id.as_str()).collect();
    let recovered = world.planted.iter().filter(|id| got.contains(id.as_str())).count();
    let report = CollectReport {
        tweets: result.tweets.len(),
        users: result.users.len(),
        planted: world.planted.len(),
        recovered_planted: recovered,
        extra: got.len() - recovered,
        elapsed_secs: result.elapsed_secs,
        counters: &result.counters,
    };
    write_json(&cfg.out_file("collect_report.json")?, &report)?;
    outln!(
        "{} tweets from {} users ({} of {} planted), {} requests, {} retries, {:.1} s simulated",
        report.tweets,
        report.users,
        recovered,
        report.planted,
        result.counters.requests,
        result.counters.retries,
        result.elapsed_secs
    );
    Ok(())
}

fn cmd_serve(
    cfg: &CliConfig,
    corpus: &Path,
    store: Option<PathBuf>,
    annotators: Vec<String>,
    addr: SocketAddr,
    cors_origin: Option<String>,
) -> CmdResult {
    require(&[corpus])?;
    let res = Arc::new(cfg.resources()?);
    let corpus = ingest(corpus)?.corpus;
    let store_path = match store {
        Some(p) => p,
        None => cfg.out_file("labels.jsonl")?,
    };
    let store = LabelStore::open(&store_path)?;
    let state = Arc::new(AppState::new(res, corpus, store, annotators)?);
    let app = router(state, cors_origin.as_deref())?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start runtime: {e}")))?;
    outln!("serving /v1 on http://{addr} (labels in {})", store_path.display());
    rt.block_on(serve(addr, app))
        .map_err(|e| CliError::io(store_path.as_path(), e))
}

fn cmd_synth(cfg: &CliConfig, kind: SynthKind) -> CmdResult {
    let res = cfg.resources()?;
    let corpus = match kind {
        SynthKind::Annotated => annotated_corpus(&res, &CorpusShape::REFERENCE, cfg.seed)?,
        SynthKind::World => {
            let world = collector_world(&res, &WorldShape::default(), cfg.seed)?;
            Corpus::from_tweets(world.tweets).0
        }
    };
    let out = cfg.out_file("synthetic.jsonl")?;
    corpus.save(&out)?;
    let counts: BTreeMap<Label, usize> = corpus.label_counts();
    let by_label: Vec<String> = counts.iter().map(|(l, n)| format!("{l} {n}")).collect();
    outln!(
        "{} tweets ({}) written to {}",
        corpus.len(),
        if by_label.is_empty() {
            "unlabeled".to_string()
        } else {
            by_label.join(", ")
        },
        out.display()
    );
    Ok(())
}
