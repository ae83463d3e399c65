use icu_attend::autodiff::Tensor;
use icu_attend::model::{Encoder, ModelConfig, Pooling};
use icu_attend::preprocess::EpisodeFeatures;
use icu_attend::synthetic;
use icu_attend::train::{
    auc, fit_epoch, mean_log_loss, predict_all, train_fold, AdamState, TrainConfig, Variant,
};
use icu_attend::{cross_validate, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Feature 0 carries the label as ±1 plus noise; the rest is noise.
fn separable(n: usize, steps: usize, width: usize, seed: u64) -> Vec<EpisodeFeatures> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = i % 2 == 0;
            let sign = if label { 1.0 } else { -1.0 };
            let data = (0..steps * width)
                .map(|k| {
                    let noise = rng.gen_range(-0.3..0.3);
                    if k % width == 0 { sign + noise } else { noise }
                })
                .collect();
            EpisodeFeatures {
                record_id: i as u64,
                matrix: Tensor::matrix(steps, width, data).unwrap(),
                label: Some(label),
            }
        })
        .collect()
}

fn bilstm(width: usize) -> ModelConfig {
    ModelConfig {
        input_dim: width,
        hidden: 8,
        heads: 2,
        attention_hidden: 16,
        encoder: Encoder::BiLstm,
        pooling: Pooling::Attention,
        dropout_in: 0.0,
        dropout_out: 0.0,
    }
}

#[test]
fn overfits_small_separable_set() {
    let data = separable(32, 4, 6, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut params = ModelParams::init(ModelConfig { hidden: 32, ..bilstm(6) }, &mut rng).unwrap();
    let mut adam = AdamState::new(&params.weights);
    let mut reached = None;
    for epoch in 1..=500 {
        let loss = fit_epoch(&mut params, &mut adam, &data, 32, 1e-3, &mut rng).unwrap();
        if loss < 0.05 {
            reached = Some(epoch);
            break;
        }
    }
    assert!(reached.is_some(), "final loss {}", mean_log_loss(&params, &data).unwrap());
}

#[test]
fn zero_learning_rate_leaves_parameters_bit_identical() {
    let data = separable(10, 3, 4, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut params = ModelParams::init(bilstm(4), &mut rng).unwrap();
    let before = params.clone();
    let mut adam = AdamState::new(&params.weights);
    for _ in 0..3 {
        fit_epoch(&mut params, &mut adam, &data, 3, 0.0, &mut rng).unwrap();
    }
    assert_eq!(params, before);
}

fn quick_config() -> TrainConfig {
    TrainConfig {
        max_epochs: 6,
        patience: 3,
        batch_size: 8,
        learning_rate: 5e-3,
        model: bilstm(4),
        ..TrainConfig::default()
    }
}

#[test]
fn fold_training_is_deterministic_and_keeps_best_checkpoint() {
    let train = separable(24, 3, 4, 4);
    let val = separable(10, 3, 4, 5);
    let a = train_fold(&train, &val, &quick_config(), 0, 9).unwrap();
    let b = train_fold(&train, &val, &quick_config(), 0, 9).unwrap();
    assert_eq!(a, b);

    let risks = predict_all(&a.best_params, &val).unwrap();
    let labels: Vec<bool> = val.iter().map(|e| e.label.unwrap()).collect();
    assert_eq!(auc(&risks, &labels).unwrap(), a.best_auc);
    assert_eq!(a.val_auc[a.best_epoch - 1], a.best_auc);
    assert!(a.val_auc.iter().all(|&v| v <= a.best_auc));
}

#[test]
fn two_fold_cross_validation_on_synthetic_records() {
    let episodes = synthetic::generate(40, 0.3, 12);
    let mut config = quick_config();
    config.folds = 2;
    config.max_epochs = 2;
    let report = cross_validate(&episodes, &config, Variant::LstmAttn).unwrap();
    assert_eq!(report.folds.len(), 2);
    let mut seen: Vec<u64> = report
        .folds
        .iter()
        .flat_map(|f| f.result.val_predictions.iter().map(|p| p.0))
        .collect();
    seen.sort_unstable();
    let mut all: Vec<u64> = episodes.iter().map(|e| e.record_id).collect();
    all.sort_unstable();
    assert_eq!(seen, all);
    assert!(report.mean_auc.is_finite() && report.pooled_auc.is_finite());
}
