use approx::assert_abs_diff_eq;
use dangspeech_core::model::{evaluate, train, Example, Hyperparams, MajorityBaseline, Objective, Vocabulary};
use dangspeech_core::Label;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vocab(n: usize) -> Vocabulary {
    Vocabulary::from_names((0..n).map(|i| format!("f{i:03}")))
}

fn random_batch(seed: u64, dim: usize, n: usize) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mut features = Vec::new();
            for j in 0..dim {
                if rng.gen_bool(0.4) {
                    features.push((j, rng.gen_range(-2.0..2.0)));
                }
            }
            Example {
                features,
                label: if i % 2 == 0 { Label::Safe } else { Label::Dangerous },
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>(), dim in 1usize..8, n in 2usize..30, l2 in 0.0f64..0.5) {
        let data = random_batch(seed, dim, n);
        let obj = Objective { data: &data, dim, l2 };
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
        let params: Vec<f64> = (0..=dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let (_, grad) = obj.loss_and_gradient(&params);
        let eps = 1e-5;
        for k in 0..=dim {
            let mut up = params.clone();
            let mut down = params.clone();
            up[k] += eps;
            down[k] -= eps;
            let fd = (obj.loss(&up) - obj.loss(&down)) / (2.0 * eps);
            let rel = (fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-3);
            prop_assert!(rel <= 1e-5, "component {k}: analytic {} vs numeric {fd} (rel {rel})", grad[k]);
        }
    }

    #[test]
    fn training_loss_never_increases(seed in any::<u64>(), lr in 0.1f64..20.0) {
        let data = random_batch(seed, 6, 40);
        let hp = Hyperparams { learning_rate: lr, l2: 1e-2, epochs: 60, seed };
        let out = train(&data, vocab(6), hp).unwrap();
        for w in out.loss_curve.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn evaluate_permutation_invariant(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..60), seed in any::<u64>()) {
        let lab = |b: bool| if b { Label::Dangerous } else { Label::Safe };
        let pred: Vec<Label> = pairs.iter().map(|p| lab(p.0)).collect();
        let gold: Vec<Label> = pairs.iter().map(|p| lab(p.1)).collect();
        let base = evaluate(&pred, &gold).unwrap();
        let mut idx: Vec<usize> = (0..pairs.len()).collect();
        rand::seq::SliceRandom::shuffle(idx.as_mut_slice(), &mut ChaCha8Rng::seed_from_u64(seed));
        let p2: Vec<Label> = idx.iter().map(|&i| pred[i]).collect();
        let g2: Vec<Label> = idx.iter().map(|&i| gold[i]).collect();
        prop_assert_eq!(&evaluate(&p2, &g2).unwrap(), &base);

        let mean_f1 = (base.per_class[&Label::Safe].f1 + base.per_class[&Label::Dangerous].f1) / 2.0;
        prop_assert!((base.macro_f1 - mean_f1).abs() < 1e-12);
        for v in [base.accuracy, base.macro_f1, base.macro_precision, base.macro_recall] {
            prop_assert!((0.0..=100.0).contains(&v));
        }

        // swapping class names swaps per-class metrics and keeps macro values
        let sp: Vec<Label> = pred.iter().map(|l| l.other()).collect();
        let sg: Vec<Label> = gold.iter().map(|l| l.other()).collect();
        let swapped = evaluate(&sp, &sg).unwrap();
        prop_assert_eq!(swapped.per_class[&Label::Safe], base.per_class[&Label::Dangerous]);
        prop_assert_eq!(swapped.per_class[&Label::Dangerous], base.per_class[&Label::Safe]);
        prop_assert!((swapped.macro_f1 - base.macro_f1).abs() < 1e-12);
        prop_assert!((swapped.macro_precision - base.macro_precision).abs() < 1e-12);
        prop_assert!((swapped.accuracy - base.accuracy).abs() < 1e-12);
    }
}

#[test]
fn separable_toy_set_is_fit_perfectly() {
    // dangerous points have x0 - x1 > 0.5, safe points x0 - x1 < -0.5
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let data: Vec<Example> = (0..20)
        .map(|i| {
            let base: f64 = rng.gen_range(0.0..2.0);
            let margin: f64 = rng.gen_range(0.5..1.5);
            let (x0, x1, label) = if i % 2 == 0 {
                (base + margin, base, Label::Dangerous)
            } else {
                (base, base + margin, Label::Safe)
            };
            Example {
                features: vec![(0, x0), (1, x1)],
                label,
            }
        })
        .collect();
    let hp = Hyperparams {
        l2: 0.0,
        epochs: 500,
        ..Hyperparams::default()
    };
    let out = train(&data, vocab(2), hp).unwrap();
    let correct = data
        .iter()
        .filter(|e| out.params.predict_encoded(&e.features).label == e.label)
        .count();
    assert_eq!(correct, 20);
}

#[test]
fn same_seed_same_params() {
    let data = random_batch(5, 5, 50);
    let hp = Hyperparams {
        seed: 3,
        ..Hyperparams::default()
    };
    let a = serde_json::to_string(&train(&data, vocab(5), hp).unwrap().params).unwrap();
    let b = serde_json::to_string(&train(&data, vocab(5), hp).unwrap().params).unwrap();
    assert_eq!(a, b);
}

#[test]
fn majority_baseline_on_test_split_sizes() {
    let mut gold = vec![Label::Safe; 254];
    gold.extend(vec![Label::Dangerous; 179]);
    let base = MajorityBaseline::fit(&[vec![Label::Safe; 2727], vec![Label::Dangerous; 852]].concat()).unwrap();
    assert_eq!(base.label, Label::Safe);
    let r = evaluate(&base.predict(gold.len()), &gold).unwrap();
    // hand computation: acc = 254/433, P_safe = 254/433, R_safe = 1, dangerous never predicted
    let p_safe = 100.0 * 254.0 / 433.0;
    let f1_safe = 2.0 * p_safe * 100.0 / (p_safe + 100.0);
    assert_abs_diff_eq!(r.accuracy, p_safe, epsilon = 1e-9);
    assert_abs_diff_eq!(r.per_class[&Label::Safe].f1, f1_safe, epsilon = 1e-9);
    assert_abs_diff_eq!(r.macro_f1, f1_safe / 2.0, epsilon = 1e-9);
    assert_abs_diff_eq!(r.macro_precision, p_safe / 2.0, epsilon = 1e-9);
    assert_abs_diff_eq!(r.macro_recall, 50.0, epsilon = 1e-9);
    assert_eq!(r.per_class[&Label::Dangerous].precision, 0.0);
    assert_abs_diff_eq!(r.accuracy, 58.66, epsilon = 0.01);
    assert_abs_diff_eq!(r.macro_f1, 36.97, epsilon = 0.01);
    assert_abs_diff_eq!(r.per_class[&Label::Safe].f1, 73.95, epsilon = 0.01);
}
