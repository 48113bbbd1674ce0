mod common;

use std::collections::BTreeMap;

use approx::assert_abs_diff_eq;
use dangspeech_core::agreement::{cohen_kappa, corpus_matrix, disagreements, ConfusionMatrix2x2};
use dangspeech_core::corpus::{
    phenomena_stats, preprocess, split, split_overlap, timeline_stats, Corpus, SplitSpec, Tweet,
};
use dangspeech_core::resources::default_data_dir;
use dangspeech_core::synth::{annotated_corpus, matcher_texts, CorpusShape};
use dangspeech_core::Label;
use proptest::prelude::*;
use std::sync::OnceLock;

use common::res;

fn reference() -> &'static Corpus {
    static C: OnceLock<Corpus> = OnceLock::new();
    C.get_or_init(|| annotated_corpus(res(), &CorpusShape::REFERENCE, 42).unwrap())
}

#[test]
fn reference_fixture_structure() {
    let c = reference();
    assert_eq!(c.len(), 5011);
    let counts = c.label_counts();
    assert_eq!((counts[&Label::Safe], counts[&Label::Dangerous]), (3636, 1375));
    assert_eq!(
        corpus_matrix(c, "A", "B"),
        ConfusionMatrix2x2::new([[3570, 52], [70, 1319]])
    );
    assert_eq!(disagreements(c).len(), 122);
    assert_abs_diff_eq!(
        cohen_kappa(&corpus_matrix(c, "A", "B")).unwrap(),
        0.939,
        epsilon = 0.001
    );
}

#[test]
fn preprocessing_keeps_4445() {
    let (out, report) = preprocess(reference(), &res().matcher);
    assert_eq!(report.input, 5011);
    assert_eq!(report.retained, 4445);
    assert_eq!(report.dropped, 566);
    assert_eq!(report.retained_by_label[&Label::Safe], 3225);
    assert_eq!(report.retained_by_label[&Label::Dangerous], 1220);
    assert!(out.tweets().iter().all(|t| res().matcher.find(&t.text).is_empty()));
    let (again, _) = preprocess(&out, &res().matcher);
    assert_eq!(again, out);
}

#[test]
fn explicit_counts_split() {
    let (out, _) = preprocess(reference(), &res().matcher);
    let spec = SplitSpec::load(default_data_dir().join("table8.json")).unwrap();
    let s = split(&out, &spec, 7).unwrap();
    assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (3579, 433, 433));
    let count = |ids: &[String], l: Label| {
        ids.iter()
            .filter(|id| out.get(id).unwrap().gold_label == Some(l))
            .count()
    };
    assert_eq!(
        (count(&s.test, Label::Safe), count(&s.test, Label::Dangerous)),
        (254, 179)
    );
    assert_eq!(
        (count(&s.dev, Label::Safe), count(&s.dev, Label::Dangerous)),
        (244, 189)
    );
    assert_eq!(
        (count(&s.train, Label::Safe), count(&s.train, Label::Dangerous)),
        (2727, 852)
    );
    assert!(split_overlap(&s).is_empty());
    assert_eq!(split(&out, &spec, 7).unwrap(), s);
}

#[test]
fn phenomena_hand_count() {
    let rows = [
        ("1", "@a والله اقتلك 🙂", Label::Safe),
        ("2", "هههه اقتلك يا ولد", Label::Safe),
        ("3", "لو شفتك اذبحك؟", Label::Safe),
        ("4", "جمهوركم اضربك بس", Label::Safe),
        ("5", "الحين اقتلك وبس", Label::Safe),
        ("6", "@a @b اضربك على وجهك 🔪", Label::Dangerous),
        ("7", "اذا جيت احرقك", Label::Dangerous),
        ("8", "ليش اطعنك؟", Label::Dangerous),
        ("9", "@a ودي اقتلك", Label::Dangerous),
        ("10", "اقتلك يا كلب", Label::Dangerous),
    ];
    let corpus = Corpus::from_tweets(rows.iter().map(|(id, text, l)| Tweet::new(*id, *text).with_label(*l))).0;
    let features: Vec<_> = corpus
        .tweets()
        .iter()
        .map(|t| res().analyze(&t.text).features)
        .collect();
    let table = phenomena_stats(&corpus, &features).unwrap();
    let got: BTreeMap<&str, (usize, f64, f64)> = table
        .rows
        .iter()
        .map(|r| (r.phenomenon.as_str(), (r.freq, r.pct_non_dangerous, r.pct_dangerous)))
        .collect();
    let expected = BTreeMap::from([
        ("Mentions", (3, 20.0, 40.0)),
        ("Questions", (2, 20.0, 20.0)),
        ("Emoji", (2, 20.0, 20.0)),
        ("Conditional", (2, 20.0, 20.0)),
        ("Body parts", (1, 0.0, 20.0)),
        ("Hahaha", (1, 20.0, 0.0)),
    ]);
    assert_eq!(got, expected);
    assert_eq!((table.n_safe, table.n_dangerous), (5, 5));
    let text = table.to_text();
    assert!(text.contains("Freq.") && text.contains("Percentage (dangerous class)"));
}

#[test]
fn timeline_oracle() {
    let counts = [1, 1, 1, 1, 1, 2, 2, 3, 4, 4, 4, 5, 5, 6, 6, 6, 7, 8, 10, 23];
    let sizes = [
        120, 300, 450, 80, 900, 1000, 50, 75, 60, 200, 310, 90, 40, 1500, 620, 700, 88, 99, 101, 217,
    ];
    let s = timeline_stats(&counts, &sizes).unwrap();
    assert_eq!(s.users, 20);
    assert_abs_diff_eq!(s.mean, 5.0, epsilon = 1e-12);
    assert_abs_diff_eq!(s.std_dev, 4.9736145915484, epsilon = 1e-9);
    assert_eq!((s.min, s.max), (1, 23));
    assert_eq!((s.p25, s.p50, s.p75), (1, 4, 6));
    assert_abs_diff_eq!(s.avg_timeline_tweets.unwrap(), 350.0);
    assert_abs_diff_eq!(s.pct_of_timeline.unwrap(), 100.0 * 100.0 / 7000.0, epsilon = 1e-9);
    assert!(s.to_text().contains("75th percentile"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn preprocess_is_idempotent(seed in any::<u64>()) {
        let texts = matcher_texts(res(), 20, seed);
        let corpus = Corpus::from_tweets(texts.into_iter().enumerate().map(|(i, t)| Tweet::new(i.to_string(), t))).0;
        let (once, _) = preprocess(&corpus, &res().matcher);
        let (twice, _) = preprocess(&once, &res().matcher);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn ratio_split_partitions(n_safe in 0usize..80, n_dangerous in 0usize..80, train in 0.0f64..1.0, dev_frac in 0.0f64..1.0, seed in any::<u64>()) {
        let dev = (1.0 - train) * dev_frac;
        let test = 1.0 - train - dev;
        let tweets = (0..n_safe).map(|i| Tweet::new(format!("s{i}"), "x").with_label(Label::Safe))
            .chain((0..n_dangerous).map(|i| Tweet::new(format!("d{i}"), "x").with_label(Label::Dangerous)));
        let corpus = Corpus::from_tweets(tweets).0;
        let s = split(&corpus, &SplitSpec::Ratios { train, dev, test }, seed).unwrap();
        prop_assert!(split_overlap(&s).is_empty());
        prop_assert_eq!(s.train.len() + s.dev.len() + s.test.len(), corpus.len());
        for (prefix, n) in [("s", n_safe), ("d", n_dangerous)] {
            for (ids, r) in [(&s.train, train), (&s.dev, dev), (&s.test, test)] {
                let k = ids.iter().filter(|id| id.starts_with(prefix)).count() as f64;
                prop_assert!((k - n as f64 * r).abs() <= 1.0 + 1e-9, "{prefix}: {k} vs {}", n as f64 * r);
            }
        }
    }

    #[test]
    fn phenomena_rows_sum_to_100(seed in any::<u64>()) {
        let texts = matcher_texts(res(), 30, seed);
        let corpus = Corpus::from_tweets(texts.into_iter().enumerate().map(|(i, t)| {
            Tweet::new(i.to_string(), t).with_label(if i % 3 == 0 { Label::Dangerous } else { Label::Safe })
        })).0;
        let features: Vec<_> = corpus.tweets().iter().map(|t| res().analyze(&t.text).features).collect();
        let table = phenomena_stats(&corpus, &features).unwrap();
        for r in &table.rows {
            prop_assert!((r.pct_non_dangerous + r.pct_absent_non_dangerous - 100.0).abs() < 1e-9);
            prop_assert!((r.pct_dangerous + r.pct_absent_dangerous - 100.0).abs() < 1e-9);
        }
    }
}
