mod common;

use common::{gradient_relative_error, metrics_oracle, params, random_instance, random_labels, separable_examples, set_params};
use factcheck_core::corpus::VeracityLabel;
use factcheck_core::veracity::{
    evaluate, fit, train_baseline, ClassifierBackend, FeatureConfig, Features, MacroAverage, TrainConfig,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let (mut model, data) = random_instance(&mut rng);
        let rel = gradient_relative_error(&mut model, &data);
        assert!(rel < 1e-5, "relative error {rel}");
    }
}

#[test]
fn objective_is_convex_along_segments() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..50 {
        let (mut model, data) = random_instance(&mut rng);
        let a = params(&model);
        let b: Vec<f64> = a.iter().map(|_| rng.gen_range(-3.0..3.0)).collect();
        set_params(&mut model, &a);
        let la = model.loss(&data);
        set_params(&mut model, &b);
        let lb = model.loss(&data);
        for t in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
            set_params(&mut model, &mid);
            assert!(model.loss(&data) <= t * la + (1.0 - t) * lb + 1e-12);
        }
    }
}

#[test]
fn separable_fixture_is_fit_within_200_epochs() {
    let examples = separable_examples();
    assert_eq!(examples.len(), 40);
    let config = TrainConfig { max_epochs: 200, ..TrainConfig::default() };
    let (model, trace) = train_baseline(&examples, &config).unwrap();
    assert!(trace.losses.len() <= 201);
    let correct = examples
        .iter()
        .filter(|e| model.predict(&e.claim, &e.evidence).unwrap().argmax() == e.label)
        .count();
    assert_eq!(correct, 40);
    for w in trace.losses.windows(2) {
        assert!(w[1] <= w[0] + 1e-15, "loss increased: {} -> {}", w[0], w[1]);
    }
    let (again, trace_again) = train_baseline(&examples, &config).unwrap();
    assert_eq!(again, model);
    assert_eq!(trace_again, trace);
}

#[test]
fn loss_never_increases_on_random_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..20 {
        let (_, data) = random_instance(&mut rng);
        let config = TrainConfig {
            features: FeatureConfig { max_ngram: 1, hash_dim: 16 },
            max_epochs: 100,
            l2_lambda: 1e-2,
            ..TrainConfig::default()
        };
        let data: Vec<(Features, VeracityLabel)> = data
            .into_iter()
            .map(|(x, y)| (Features::from_entries(x.entries().to_vec()), y))
            .collect();
        let (_, trace) = fit(&data, &config);
        for w in trace.losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }
}

#[test]
fn evaluate_matches_confusion_matrix_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..100 {
        let n = rng.gen_range(1..60);
        let classes = rng.gen_range(1..=4);
        let golds = random_labels(&mut rng, n, classes);
        let preds = random_labels(&mut rng, n, 4);
        for avg in [MacroAverage::AllLabels, MacroAverage::GoldLabels] {
            let got = evaluate(&preds, &golds, avg).unwrap();
            let want = metrics_oracle(&preds, &golds, avg);
            assert!((got.precision - want.precision).abs() < 1e-12);
            assert!((got.recall - want.recall).abs() < 1e-12);
            assert!((got.macro_f1 - want.f1).abs() < 1e-12);
            assert!((got.accuracy - want.accuracy).abs() < 1e-12);
            assert_eq!(got.confusion.iter().flatten().sum::<usize>(), n);
        }
    }
}

#[test]
fn evaluate_is_permutation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..50 {
        let n = rng.gen_range(1..40);
        let golds = random_labels(&mut rng, n, 4);
        let preds = random_labels(&mut rng, n, 4);
        let mut pairs: Vec<_> = preds.iter().copied().zip(golds.iter().copied()).collect();
        pairs.shuffle(&mut rng);
        let (p2, g2): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        assert_eq!(
            evaluate(&preds, &golds, MacroAverage::AllLabels).unwrap(),
            evaluate(&p2, &g2, MacroAverage::AllLabels).unwrap()
        );
    }
}
