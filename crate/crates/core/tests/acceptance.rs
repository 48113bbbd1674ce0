//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{brute_force_matches, fixture, kappa_oracle, res};
use dangspeech_core::agreement::{cohen_kappa, ConfusionMatrix2x2};
use dangspeech_core::collector::{Collector, CollectorConfig, FailurePlan, SimClock, SyntheticSource, Window};
use dangspeech_core::corpus::{ingest, preprocess, split, Corpus, SplitSpec};
use dangspeech_core::lexicon::{Dialect, Lexicon};
use dangspeech_core::model::{
    run_experiment, train, Example, ExperimentConfig, Hyperparams, ModelKind, Objective, SplitSource, Vocabulary,
};
use dangspeech_core::resources::default_data_dir;
use dangspeech_core::seedgen::{diff_against_published, generate_all, load_published, RuleSet};
use dangspeech_core::synth::{annotated_corpus, collector_world, matcher_texts, CorpusShape, WorldShape};
use dangspeech_core::textproc::{normalize, normalize_str, tokenize};
use dangspeech_core::{Error, Label};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn run(name: &str, limit: Option<Duration>, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let outcome = match (outcome, limit) {
        (Ok(_), Some(l)) if elapsed > l => Err(format!("took {elapsed:.2?}, limit {l:?}")),
        (o, _) => o,
    };
    let ok = outcome.is_ok();
    let detail = outcome.unwrap_or_else(|e| e);
    println!(
        "{} {name:<24} {detail} [{elapsed:.2?}]",
        if ok { "PASS" } else { "FAIL" }
    );
    ok
}

fn lexicon_fidelity() -> Check {
    let lex = Lexicon::load(default_data_dir().join("lexicon.tsv")).map_err(|e| e.to_string())?;
    let expected = [
        (Dialect::Msa, 30),
        (Dialect::Gulf, 50),
        (Dialect::Egyptian, 39),
        (Dialect::Maghrebi, 34),
        (Dialect::Levantine, 34),
    ];
    let mut parts = Vec::new();
    for (d, n) in expected {
        let got = lex.verbs_for_dialect(d).len();
        ensure!(got == n, "{d:?}: {got} verbs, expected {n}");
        parts.push(format!("{d:?} {got}"));
    }
    let unique: BTreeSet<&str> = lex.verbs().iter().map(|v| v.surface.as_str()).collect();
    ensure!(unique.len() == 57, "{} unique verbs, expected 57", unique.len());
    Ok(format!("{}, unique 57", parts.join(", ")))
}

fn seed_reproduction() -> Check {
    let dir = default_data_dir();
    let lex = Lexicon::load(dir.join("lexicon.tsv")).map_err(|e| e.to_string())?;
    let rules = RuleSet::load(dir.join("seed_rules.tsv")).map_err(|e| e.to_string())?;
    let seeds = generate_all(&lex, &rules).map_err(|e| e.to_string())?;
    let published = load_published(dir.join("seeds_286.txt")).map_err(|e| e.to_string())?;
    let diff = diff_against_published(&seeds, &published);
    ensure!(
        diff.is_exact(),
        "{} missing, {} extra: {:?} / {:?}",
        diff.missing.len(),
        diff.extra.len(),
        diff.missing,
        diff.extra
    );
    ensure!(seeds.len() == 286, "{} phrases", seeds.len());
    let mwe = std::fs::read_to_string(fixture("multiword_expressions.txt")).map_err(|e| e.to_string())?;
    let mwe: Vec<String> = mwe
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(normalize_str)
        .collect();
    ensure!(mwe.len() == 26, "{} multiword expressions in fixture", mwe.len());
    let absent: Vec<&String> = mwe.iter().filter(|m| !seeds.contains(m)).collect();
    ensure!(absent.is_empty(), "multiword expressions not generated: {absent:?}");
    Ok("286 phrases, 0 missing, 0 extra; 26/26 multiword expressions".into())
}

fn matcher_oracle() -> Check {
    let res = res();
    let seeds: Vec<Vec<String>> = res
        .seeds
        .texts()
        .map(|s| s.split(' ').map(str::to_string).collect())
        .collect();
    let texts = matcher_texts(res, 500, 2024);
    let mut spans = 0;
    for (i, text) in texts.iter().enumerate() {
        let tokens = tokenize(normalize(text).as_str());
        let expected = brute_force_matches(&seeds, &tokens);
        let got: Vec<(String, usize, usize)> = res
            .matcher
            .find(text)
            .into_iter()
            .map(|m| (m.seed, m.token_span.start, m.token_span.end))
            .collect();
        ensure!(got == expected, "text {i}: {got:?} != {expected:?}");
        spans += got.len();
    }
    Ok(format!("500 texts, {spans} spans identical to window scan"))
}

fn guideline_fixtures() -> Check {
    let corpus = ingest(fixture("guideline_examples.jsonl"))
        .map_err(|e| e.to_string())?
        .corpus;
    ensure!(corpus.len() == 10, "{} examples", corpus.len());
    let mut correct = 0;
    let mut wrong = Vec::new();
    for t in corpus.tweets() {
        match res().judge(&t.text) {
            Some(v) if Some(v.label) == t.gold_label => correct += 1,
            other => wrong.push(format!("{}: {:?}", t.id, other.map(|v| v.label))),
        }
    }
    ensure!(correct == 10, "{correct}/10; wrong: {wrong:?}");
    Ok("10/10".into())
}

fn kappa() -> Check {
    let m = [[3570, 52], [70, 1319]];
    let k = cohen_kappa(&ConfusionMatrix2x2::new(m)).map_err(|e| e.to_string())?;
    ensure!((k - 0.939).abs() <= 0.001, "kappa {k:.4}, expected 0.939 ± 0.001");
    ensure!((k - kappa_oracle(m)).abs() < 1e-12, "kappa {k} differs from oracle");
    let perfect = cohen_kappa(&ConfusionMatrix2x2::new([[40, 0], [0, 9]])).map_err(|e| e.to_string())?;
    ensure!(perfect == 1.0, "perfect agreement gave {perfect}");
    let degenerate = cohen_kappa(&ConfusionMatrix2x2::new([[12, 0], [0, 0]]));
    ensure!(
        matches!(degenerate, Err(Error::UndefinedKappa(_))),
        "constant annotator gave {degenerate:?}"
    );
    Ok(format!("kappa {k:.4}; perfect 1.0; degenerate undefined"))
}

fn reference_corpus() -> Corpus {
    annotated_corpus(res(), &CorpusShape::REFERENCE, 42).unwrap()
}

fn preprocessing_and_split() -> Check {
    let corpus = reference_corpus();
    ensure!(corpus.len() == 5011, "fixture has {} tweets", corpus.len());
    let (kept, report) = preprocess(&corpus, &res().matcher);
    ensure!(report.retained == 4445, "retained {}", report.retained);
    let (s, d) = (
        report.retained_by_label[&Label::Safe],
        report.retained_by_label[&Label::Dangerous],
    );
    ensure!((s, d) == (3225, 1220), "retained classes {s}/{d}");
    let spec = SplitSpec::load(default_data_dir().join("table8.json")).map_err(|e| e.to_string())?;
    let parts = split(&kept, &spec, 7).map_err(|e| e.to_string())?;
    let sizes = (parts.train.len(), parts.dev.len(), parts.test.len());
    ensure!(sizes == (3579, 433, 433), "split sizes {sizes:?}");
    let test_safe = parts
        .test
        .iter()
        .filter(|id| kept.get(id).unwrap().gold_label == Some(Label::Safe))
        .count();
    ensure!(
        (test_safe, parts.test.len() - test_safe) == (254, 179),
        "test classes {test_safe}/{}",
        parts.test.len() - test_safe
    );
    Ok("5011 -> 4445 (3225 safe / 1220 dangerous); 3579/433/433, test 254 + 179".into())
}

fn experiment_config(dir: &std::path::Path, model: ModelKind) -> Result<ExperimentConfig, String> {
    let corpus_path = dir.join("preprocessed.jsonl");
    if !corpus_path.exists() {
        let (kept, _) = preprocess(&reference_corpus(), &res().matcher);
        kept.save(&corpus_path).map_err(|e| e.to_string())?;
    }
    Ok(ExperimentConfig {
        corpus: corpus_path,
        split: SplitSource::Spec(default_data_dir().join("table8.json")),
        augmentation: None,
        model,
        hyperparams: Hyperparams {
            epochs: 60,
            ..Hyperparams::default()
        },
        seed: 7,
        out_dir: None,
    })
}

fn baseline_metrics() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = experiment_config(dir.path(), ModelKind::Majority)?;
    let out = run_experiment(&cfg, res()).map_err(|e| e.to_string())?;
    let t = &out.report.test;
    ensure!((t.accuracy - 58.66).abs() <= 0.01, "accuracy {:.4}", t.accuracy);
    ensure!((t.macro_f1 - 36.97).abs() <= 0.01, "macro F1 {:.4}", t.macro_f1);
    Ok(format!(
        "Acc {:.2}, F1 {:.2} (P {:.2}, R {:.2})",
        t.accuracy, t.macro_f1, t.macro_precision, t.macro_recall
    ))
}

fn classifier_properties() -> Check {
    // gradient vs central differences
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = rng.gen_range(1..10);
        let data: Vec<Example> = (0..rng.gen_range(2..40))
            .map(|i| Example {
                features: (0..dim)
                    .filter(|_| rng.gen_bool(0.5))
                    .map(|j| (j, 1.0 + j as f64 * 0.3))
                    .collect(),
                label: if i % 2 == 0 { Label::Safe } else { Label::Dangerous },
            })
            .collect();
        let obj = Objective {
            data: &data,
            dim,
            l2: 0.05,
        };
        let params: Vec<f64> = (0..=dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, grad) = obj.loss_and_gradient(&params);
        for k in 0..=dim {
            let (mut up, mut down) = (params.clone(), params.clone());
            up[k] += 1e-5;
            down[k] -= 1e-5;
            let fd = (obj.loss(&up) - obj.loss(&down)) / 2e-5;
            worst = worst.max((fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-3));
        }
    }
    ensure!(worst <= 1e-5, "gradient relative error {worst:e}");

    // separable set, monotone loss
    let data: Vec<Example> = (0..20)
        .map(|i| {
            let x = 0.5 + (i / 2) as f64 * 0.1;
            let (f, label) = if i % 2 == 0 {
                ((0, x), Label::Dangerous)
            } else {
                ((1, x), Label::Safe)
            };
            Example {
                features: vec![f],
                label,
            }
        })
        .collect();
    let out = train(
        &data,
        Vocabulary::from_names(["a".to_string(), "b".to_string()]),
        Hyperparams {
            l2: 0.0,
            epochs: 300,
            ..Hyperparams::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let increases = out.loss_curve.windows(2).filter(|w| w[1] > w[0] + 1e-9).count();
    ensure!(increases == 0, "loss increased {increases} times");
    let acc = data
        .iter()
        .filter(|e| out.params.predict_encoded(&e.features).label == e.label)
        .count();
    ensure!(acc == 20, "separable accuracy {acc}/20");

    // two same-seed runs give byte-identical artifacts
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut bytes = Vec::new();
    for run in ["a", "b"] {
        let mut cfg = experiment_config(dir.path(), ModelKind::Logistic)?;
        cfg.out_dir = Some(dir.path().join(run));
        run_experiment(&cfg, res()).map_err(|e| e.to_string())?;
        let report = std::fs::read(dir.path().join(run).join("report.json")).map_err(|e| e.to_string())?;
        let params = std::fs::read(dir.path().join(run).join("params.json")).map_err(|e| e.to_string())?;
        bytes.push((report, params));
    }
    ensure!(bytes[0] == bytes[1], "same-seed runs differ");
    Ok(format!(
        "max gradient rel. error {worst:.1e}; monotone loss; 20/20 separable; identical runs"
    ))
}

fn collector_oracle() -> Check {
    let world = collector_world(res(), &WorldShape::default(), 5).map_err(|e| e.to_string())?;
    ensure!(world.tweets.len() == 1000, "world has {} tweets", world.tweets.len());
    let oracle: BTreeSet<String> = world
        .tweets
        .iter()
        .filter(|t| !res().matcher.find(&t.text).is_empty())
        .map(|t| t.id.clone())
        .collect();
    let cfg = CollectorConfig::new(Window {
        start: world.window_start,
        end: world.window_end,
    });
    let plan = FailurePlan {
        transient_rate: 0.2,
        transient_failures: 2,
        seed: 3,
        ..FailurePlan::default()
    };
    let source = || SyntheticSource::with_failures(world.tweets.clone(), plan.clone());

    let full = Collector::new(source(), SimClock::default(), &res().matcher, cfg.clone())
        .run()
        .map_err(|e| e.to_string())?;
    let ids: Vec<&String> = full.tweets.iter().map(|t| &t.id).collect();
    let unique: BTreeSet<String> = ids.iter().map(|s| s.to_string()).collect();
    ensure!(unique.len() == ids.len(), "duplicates in output");
    ensure!(
        unique == oracle,
        "collected {} tweets, oracle has {}",
        unique.len(),
        oracle.len()
    );
    ensure!(full.users == world.threat_users, "user set differs");

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for stop in [40, 290, 300] {
        let ck = dir.path().join(stop.to_string());
        let mut c = Collector::new(source(), SimClock::default(), &res().matcher, cfg.clone());
        c.run_for(stop).map_err(|e| e.to_string())?;
        c.checkpoint(&ck).map_err(|e| e.to_string())?;
        let resumed = Collector::resume(source(), SimClock::default(), &res().matcher, cfg.clone(), &ck)
            .map_err(|e| e.to_string())?
            .run()
            .map_err(|e| e.to_string())?;
        ensure!(resumed.tweets == full.tweets, "resume after {stop} units differs");
    }
    Ok(format!(
        "{} planted tweets from {} users recovered; resume x3 identical",
        oracle.len(),
        full.users.len()
    ))
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        run("lexicon-fidelity", Some(secs(1)), lexicon_fidelity),
        run("seed-reproduction", Some(secs(1)), seed_reproduction),
        run("matcher-oracle", Some(secs(5)), matcher_oracle),
        run("guideline-fixtures", None, guideline_fixtures),
        run("kappa", None, kappa),
        run("preprocessing-split", None, preprocessing_and_split),
        run("baseline-metrics", None, baseline_metrics),
        run("classifier-properties", None, classifier_properties),
        run("collector-oracle", Some(secs(10)), collector_oracle),
    ];
    let passed = results.iter().filter(|r| **r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
