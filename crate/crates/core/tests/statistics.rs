use ical_core::acquisition::score_bald;
use ical_core::datasets::{gaussian_blobs, random_hypothesis_task, ring_centers};
use ical_core::dhsic::permutation_pvalue;
use ical_core::kernels::{kernel_matrix, KernelSpec};
use ical_core::models::{ensemble_predict_samples, ensemble_train, example1_model, DiscreteHypothesisModel, TrainHyper};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn soft_model() -> DiscreteHypothesisModel {
    // three points, four hypotheses, three classes with graded likelihoods
    let mut lik = Vec::new();
    for p in 0..3 {
        for h in 0..4 {
            let w: Vec<f64> = (0..3).map(|c| 1.0 + ((p + 2 * h + c * (h + 1)) % 4) as f64).collect();
            let s: f64 = w.iter().sum();
            lik.extend(w.iter().map(|v| v / s));
        }
    }
    DiscreteHypothesisModel::new(3, 4, 3, lik, vec![0.1, 0.2, 0.3, 0.4]).unwrap()
}

#[test]
fn sampled_marginals_converge() {
    let model = soft_model();
    let preds = model.sample_predictions(&[0, 1, 2], 4096, 11).unwrap();
    for i in 0..3 {
        let exact = model.marginal(i);
        for (a, b) in preds.mean_predictive(i).iter().zip(&exact) {
            assert!((a - b).abs() < 0.02, "point {i}: {a} vs {b}");
        }
    }
}

#[test]
fn sampled_mutual_information_error_shrinks_with_m() {
    let model = example1_model(10).unwrap();
    let exact = model.exact_stats(0).unwrap().mutual_information;
    let mean_err = |m: usize| {
        (0..40u64)
            .map(|seed| {
                let preds = model.sample_predictions(&[0], m, seed).unwrap();
                (score_bald(&preds, 0) - exact).abs()
            })
            .sum::<f64>()
            / 40.0
    };
    let (small, large) = (mean_err(64), mean_err(4096));
    // the 1/sqrt(m) rate predicts a factor of 8
    assert!(large < small / 3.0, "{small} -> {large}");
}

#[test]
fn permutation_pvalues_are_calibrated() {
    let spec = KernelSpec::default();
    let mut small = 0;
    let mut total = 0.0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
        let ys: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
        let k = kernel_matrix(&xs, 1, &spec).unwrap();
        let l = kernel_matrix(&ys, 1, &spec).unwrap();
        let p = permutation_pvalue(&k, &l, 99, seed).unwrap();
        assert!(p > 0.0 && p <= 1.0);
        total += p;
        if p <= 0.05 {
            small += 1;
        }
    }
    // 50 draws at level 0.05: expect 2.5 rejections
    assert!(small <= 8, "{small} of 50 below 0.05");
    let mean = total / 50.0;
    assert!((0.35..0.65).contains(&mean), "mean p-value {mean}");
}

#[test]
fn permutation_pvalue_detects_dependence() {
    let spec = KernelSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let xs: Vec<f64> = (0..30).map(|_| rng.random::<f64>() * 4.0).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x * x + 0.05 * rng.random::<f64>()).collect();
    let k = kernel_matrix(&xs, 1, &spec).unwrap();
    let l = kernel_matrix(&ys, 1, &spec).unwrap();
    assert!(permutation_pvalue(&k, &l, 199, 1).unwrap() <= 0.01);
}

#[test]
fn longer_training_sharpens_predictions() {
    let data = gaussian_blobs(3, 40, &ring_centers(3, 3.0), 0.7, 2).unwrap();
    let train: Vec<usize> = (0..data.len()).step_by(2).collect();
    let inputs: Vec<&[f64]> = train.iter().map(|&i| data.features(i)).collect();
    let entropy_after = |epochs: usize| {
        let hyper = TrainHyper { epochs, ..TrainHyper::default() };
        let model = ensemble_train(&data, &train, 5, &hyper, 9).unwrap();
        let preds = ensemble_predict_samples(&model, &inputs).unwrap();
        (0..preds.n_points()).map(|i| preds.predictive_entropy(i)).sum::<f64>() / preds.n_points() as f64
    };
    let (short, long) = (entropy_after(5), entropy_after(300));
    assert!(long < short, "{short} -> {long}");
}

#[test]
fn random_task_disagreement_controls_spread() {
    let calm = random_hypothesis_task(32, 100, 4, 0.0, 1).unwrap();
    let stats: f64 = (0..100).map(|p| calm.exact_stats(p).unwrap().mutual_information).sum();
    assert_eq!(stats, 0.0);
    let noisy = random_hypothesis_task(32, 100, 4, 0.5, 1).unwrap();
    let stats: f64 = (0..100).map(|p| noisy.exact_stats(p).unwrap().mutual_information).sum();
    assert!(stats > 0.0);
}
