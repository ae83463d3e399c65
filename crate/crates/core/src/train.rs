//! Optimization loop, stratified cross-validation and AUC.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::autodiff::Tensor;
use crate::ingest::{RawEpisode, WINDOW_MINUTES};
use crate::model::{forward_episode, log_loss, predict, Encoder, ModelConfig, ModelError, ModelParams, Pooling, Weights};
use crate::preprocess::{EpisodeFeatures, FittedPreprocessor, PreprocessError, DEFAULT_INTERVAL_MINUTES};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("AUC needs at least one positive and one negative label")]
    SingleClass,
    #[error("episode {0} has no label")]
    Unlabeled(u64),
    #[error("cannot split {n} episodes into {k} folds")]
    TooFewEpisodes { n: usize, k: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Diverged { epoch: usize },
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<TrainError>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

pub type Result<T> = std::result::Result<T, TrainError>;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub folds: usize,
    pub interval_minutes: u32,
    pub model: ModelConfig,
    /// Train folds on separate threads. Results do not depend on this.
    pub parallel_folds: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 100,
            patience: 10,
            seed: 0,
            folds: 5,
            interval_minutes: DEFAULT_INTERVAL_MINUTES,
            model: ModelConfig::default(),
            parallel_folds: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if self.folds < 2 {
            return bad("cross-validation needs at least 2 folds");
        }
        if self.interval_minutes == 0 {
            return bad("interval length must be positive");
        }
        self.model.validate()?;
        Ok(())
    }
}

/// The four reproducible model configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Logistic regression on one 48-hour interval of statistics.
    LrBaseline,
    LstmMean,
    LstmAttn,
    BilstmAttn,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::LrBaseline,
        Variant::LstmMean,
        Variant::LstmAttn,
        Variant::BilstmAttn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::LrBaseline => "lr-baseline",
            Variant::LstmMean => "lstm-mean",
            Variant::LstmAttn => "lstm-attn",
            Variant::BilstmAttn => "bilstm-attn",
        }
    }

    /// Applies the preset on top of `base`. The baseline uses a single
    /// 48-hour interval, no recurrence and no dropout.
    pub fn configure(self, base: &TrainConfig) -> TrainConfig {
        let mut cfg = base.clone();
        let m = &mut cfg.model;
        match self {
            Variant::LrBaseline => {
                cfg.interval_minutes = WINDOW_MINUTES;
                m.encoder = Encoder::Identity;
                m.pooling = Pooling::Mean;
                m.dropout_in = 0.0;
                m.dropout_out = 0.0;
            }
            Variant::LstmMean => {
                m.encoder = Encoder::Lstm;
                m.pooling = Pooling::Mean;
            }
            Variant::LstmAttn => {
                m.encoder = Encoder::Lstm;
                m.pooling = Pooling::Attention;
            }
            Variant::BilstmAttn => {
                m.encoder = Encoder::BiLstm;
                m.pooling = Pooling::Attention;
            }
        }
        cfg
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant `{s}` (expected lr-baseline, lstm-mean, lstm-attn or bilstm-attn)"))
    }
}

/// Stratified k-fold split of `0..labels.len()`.
///
/// Positives and negatives are shuffled separately, laid end to end and
/// dealt round-robin, so fold sizes and per-fold positive counts each differ
/// by at most one. Indices within a fold are ascending.
pub fn kfold_split(labels: &[bool], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = labels.len();
    if k < 2 {
        return Err(TrainError::InvalidConfig("fold count must be at least 2".into()));
    }
    if k > n {
        return Err(TrainError::TooFewEpisodes { n, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<usize> = (0..n).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..n).filter(|&i| !labels[i]).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    for (slot, idx) in pos.into_iter().chain(neg).enumerate() {
        folds[slot % k].push(idx);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Weights<Tensor>,
    pub v: Weights<Tensor>,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &Weights<Tensor>) -> Self {
        let zeros = params.map(|t| Tensor::zeros(t.shape()));
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }
}

/// One bias-corrected Adam update (β1 = 0.9, β2 = 0.999, ε = 1e-8).
pub fn adam_step(params: &mut Weights<Tensor>, grads: &Weights<Tensor>, state: &mut AdamState, lr: f64) {
    state.t += 1;
    let c1 = 1.0 - ADAM_BETA1.powi(state.t as i32);
    let c2 = 1.0 - ADAM_BETA2.powi(state.t as i32);
    let grads: Vec<&Tensor> = grads.named().into_iter().map(|(_, g)| g).collect();
    for (((p, g), m), v) in params
        .refs_mut()
        .into_iter()
        .zip(grads)
        .zip(state.m.refs_mut())
        .zip(state.v.refs_mut())
    {
        let (p, m, v) = (p.data_mut(), m.data_mut(), v.data_mut());
        for (i, &gi) in g.data().iter().enumerate() {
            m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * gi;
            v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * gi * gi;
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
}

/// Area under the ROC curve from the Mann–Whitney rank sum, with tied
/// scores sharing their average rank.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(TrainError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j share their mean.
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        rank_sum += avg_rank * order[i..j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

fn label_of(ep: &EpisodeFeatures) -> Result<bool> {
    ep.label.ok_or(TrainError::Unlabeled(ep.record_id))
}

fn add_into(acc: &mut Weights<Tensor>, g: &Weights<Tensor>) {
    let g: Vec<&Tensor> = g.named().into_iter().map(|(_, t)| t).collect();
    for (a, b) in acc.refs_mut().into_iter().zip(g) {
        for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
            *x += y;
        }
    }
}

fn scale(acc: &mut Weights<Tensor>, factor: f64) {
    for t in acc.refs_mut() {
        for x in t.data_mut() {
            *x *= factor;
        }
    }
}

/// One pass over `train` in a shuffled order with mini-batch Adam updates.
/// Returns the mean training-mode log-loss.
pub fn fit_epoch(
    params: &mut ModelParams,
    adam: &mut AdamState,
    train: &[EpisodeFeatures],
    batch_size: usize,
    learning_rate: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(rng);
    let mut total = 0.0;
    for batch in order.chunks(batch_size.max(1)) {
        let mut acc = params.weights.map(|t| Tensor::zeros(t.shape()));
        for &i in batch {
            let ep = &train[i];
            let label = label_of(ep)?;
            let pass = forward_episode(params, &ep.matrix, true, rng)?;
            let (loss, grads) = pass.loss_and_gradients(label)?;
            total += loss;
            add_into(&mut acc, &grads);
        }
        scale(&mut acc, 1.0 / batch.len() as f64);
        adam_step(&mut params.weights, &acc, adam, learning_rate);
    }
    Ok(total / train.len().max(1) as f64)
}

/// Eval-mode risk per episode.
pub fn predict_all(params: &ModelParams, episodes: &[EpisodeFeatures]) -> Result<Vec<f64>> {
    episodes
        .iter()
        .map(|ep| Ok(predict(params, &ep.matrix)?))
        .collect()
}

/// Mean eval-mode log-loss.
pub fn mean_log_loss(params: &ModelParams, episodes: &[EpisodeFeatures]) -> Result<f64> {
    let risks = predict_all(params, episodes)?;
    let mut total = 0.0;
    for (p, ep) in risks.iter().zip(episodes) {
        total += log_loss(*p, label_of(ep)?);
    }
    Ok(total / episodes.len().max(1) as f64)
}

/// Per-fold training record.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    /// Mean training-mode loss per epoch.
    pub train_loss: Vec<f64>,
    pub val_auc: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// 1-based epoch of the kept checkpoint.
    pub best_epoch: usize,
    pub best_auc: f64,
    pub best_params: ModelParams,
    /// `(record_id, risk, label)` of the kept checkpoint on the validation set.
    pub val_predictions: Vec<(u64, f64, bool)>,
}

impl FoldResult {
    pub fn best_train_loss(&self) -> f64 {
        self.train_loss[self.best_epoch - 1]
    }

    pub fn best_val_loss(&self) -> f64 {
        self.val_loss[self.best_epoch - 1]
    }
}

/// Trains one model with mini-batch Adam on the mean log-loss, scoring the
/// validation set after every epoch. The kept checkpoint has the highest
/// validation AUC (ties broken by lower validation loss); training stops
/// after `patience` epochs without improvement.
pub fn train_fold(
    train: &[EpisodeFeatures],
    val: &[EpisodeFeatures],
    config: &TrainConfig,
    fold: usize,
    seed: u64,
) -> Result<FoldResult> {
    config.validate()?;
    let first = train
        .first()
        .ok_or_else(|| TrainError::InvalidConfig("empty training split".into()))?;
    let mut model_cfg = config.model.clone();
    model_cfg.input_dim = first.matrix.cols();
    let val_labels = val.iter().map(label_of).collect::<Result<Vec<bool>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::init(model_cfg, &mut rng)?;
    let mut adam = AdamState::new(&params.weights);

    let mut result = FoldResult {
        fold,
        train_loss: Vec::new(),
        val_auc: Vec::new(),
        val_loss: Vec::new(),
        best_epoch: 0,
        best_auc: f64::NEG_INFINITY,
        best_params: params.clone(),
        val_predictions: Vec::new(),
    };
    let mut best_val_loss = f64::INFINITY;
    let mut stale = 0;

    for epoch in 1..=config.max_epochs {
        let loss = fit_epoch(&mut params, &mut adam, train, config.batch_size, config.learning_rate, &mut rng)?;
        if !loss.is_finite() {
            return Err(TrainError::Diverged { epoch });
        }
        let risks = predict_all(&params, val)?;
        let epoch_auc = auc(&risks, &val_labels)?;
        let epoch_val_loss = risks
            .iter()
            .zip(&val_labels)
            .map(|(&p, &y)| log_loss(p, y))
            .sum::<f64>()
            / val.len() as f64;
        result.train_loss.push(loss);
        result.val_auc.push(epoch_auc);
        result.val_loss.push(epoch_val_loss);

        let improved = epoch_auc > result.best_auc || (epoch_auc == result.best_auc && epoch_val_loss < best_val_loss);
        if improved {
            result.best_epoch = epoch;
            result.best_auc = epoch_auc;
            best_val_loss = epoch_val_loss;
            result.best_params = params.clone();
            result.val_predictions = val
                .iter()
                .zip(&risks)
                .zip(&val_labels)
                .map(|((ep, &p), &y)| (ep.record_id, p, y))
                .collect();
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    if result.best_epoch == 0 {
        return Err(TrainError::InvalidConfig("max_epochs must be at least 1".into()));
    }
    Ok(result)
}

/// A trained fold together with the preprocessing it was fitted with.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub result: FoldResult,
    pub preprocessor: FittedPreprocessor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub variant: Variant,
    pub folds: Vec<FoldOutcome>,
    /// Mean of per-fold validation AUCs.
    pub mean_auc: f64,
    /// Population standard deviation of per-fold AUCs.
    pub std_auc: f64,
    /// AUC of all folds' validation predictions pooled together.
    pub pooled_auc: f64,
}

fn run_fold(
    episodes: &[RawEpisode],
    folds: &[Vec<usize>],
    f: usize,
    cfg: &TrainConfig,
) -> Result<FoldOutcome> {
    let train: Vec<RawEpisode> = folds
        .iter()
        .enumerate()
        .filter(|&(g, _)| g != f)
        .flat_map(|(_, idx)| idx.iter().map(|&i| episodes[i].clone()))
        .collect();
    let val: Vec<&RawEpisode> = folds[f].iter().map(|&i| &episodes[i]).collect();
    // Fitting sees the training split only.
    let preprocessor = FittedPreprocessor::fit(&train, cfg.interval_minutes)?;
    let train_x = train
        .iter()
        .map(|ep| preprocessor.transform(ep))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let val_x = val
        .iter()
        .map(|ep| preprocessor.transform(ep))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let result = train_fold(&train_x, &val_x, cfg, f, cfg.seed.wrapping_add(f as u64))?;
    Ok(FoldOutcome { result, preprocessor })
}

/// Stratified k-fold cross-validation of one variant. Preprocessing is
/// fitted per fold; fold `f` trains with seed `seed + f`.
pub fn cross_validate(episodes: &[RawEpisode], config: &TrainConfig, variant: Variant) -> Result<CvReport> {
    let cfg = variant.configure(config);
    cfg.validate()?;
    let labels = episodes
        .iter()
        .map(|ep| ep.label.ok_or(TrainError::Unlabeled(ep.record_id)))
        .collect::<Result<Vec<bool>>>()?;
    let folds = kfold_split(&labels, cfg.folds, cfg.seed)?;

    let outcomes: Vec<Result<FoldOutcome>> = if cfg.parallel_folds {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..folds.len())
                .map(|f| {
                    let (folds, cfg) = (&folds, &cfg);
                    s.spawn(move || run_fold(episodes, folds, f, cfg))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("fold thread panicked"))
                .collect()
        })
    } else {
        (0..folds.len()).map(|f| run_fold(episodes, &folds, f, &cfg)).collect()
    };
    let folds_out = outcomes
        .into_iter()
        .enumerate()
        .map(|(fold, r)| {
            r.map_err(|e| TrainError::Fold {
                fold,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let aucs: Vec<f64> = folds_out.iter().map(|o| o.result.best_auc).collect();
    let mean_auc = aucs.iter().sum::<f64>() / aucs.len() as f64;
    let std_auc = (aucs.iter().map(|a| (a - mean_auc).powi(2)).sum::<f64>() / aucs.len() as f64).sqrt();
    let pooled: Vec<(f64, bool)> = folds_out
        .iter()
        .flat_map(|o| o.result.val_predictions.iter().map(|&(_, p, y)| (p, y)))
        .collect();
    let (scores, ys): (Vec<f64>, Vec<bool>) = pooled.into_iter().unzip();
    let pooled_auc = auc(&scores, &ys)?;
    Ok(CvReport {
        variant,
        folds: folds_out,
        mean_auc,
        std_auc,
        pooled_auc,
    })
}

/// The "48-hour statistics + logistic regression" baseline.
pub fn baseline_lr(episodes: &[RawEpisode], config: &TrainConfig) -> Result<CvReport> {
    cross_validate(episodes, config, Variant::LrBaseline)
}

pub const RESULTS_HEADER: &str = "variant\tfold\tauc\tauc_std\tbest_epoch\ttrain_loss\tval_loss";

/// Tab-separated results: one row per fold, then `mean` (with std) and
/// `pooled` summary rows.
pub fn results_table(reports: &[CvReport]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in reports {
        for o in &r.folds {
            let f = &o.result;
            out.push_str(&format!(
                "{}\t{}\t{}\t-\t{}\t{}\t{}\n",
                r.variant,
                f.fold + 1,
                f.best_auc,
                f.best_epoch,
                f.best_train_loss(),
                f.best_val_loss()
            ));
        }
        out.push_str(&format!("{}\tmean\t{}\t{}\t-\t-\t-\n", r.variant, r.mean_auc, r.std_auc));
        out.push_str(&format!("{}\tpooled\t{}\t-\t-\t-\t-\n", r.variant, r.pooled_auc));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if labels[i] && !labels[j] {
                    den += 1.0;
                    if scores[i] > scores[j] {
                        num += 1.0;
                    } else if scores[i] == scores[j] {
                        num += 0.5;
                    }
                }
            }
        }
        num / den
    }

    #[test]
    fn auc_examples() {
        let labels = [false, false, true, true];
        let scores = [0.1, 0.4, 0.35, 0.8];
        assert_eq!(brute_auc(&scores, &labels), 0.75);
        assert_eq!(auc(&scores, &labels).unwrap(), 0.75);
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &labels).unwrap(), 1.0);
        assert_eq!(auc(&[0.3; 4], &labels).unwrap(), 0.5);
        assert!(matches!(auc(&[0.1, 0.2], &[true, true]), Err(TrainError::SingleClass)));
    }

    #[test]
    fn kfold_basic() {
        let labels = vec![false; 10];
        let folds = kfold_split(&labels, 5, 1).unwrap();
        assert!(folds.iter().all(|f| f.len() == 2));
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(matches!(
            kfold_split(&labels[..3], 5, 1),
            Err(TrainError::TooFewEpisodes { n: 3, k: 5 })
        ));
    }

    #[test]
    fn kfold_is_stratified() {
        let labels: Vec<bool> = (0..1000).map(|i| i % 50 < 9).collect();
        let global = 0.18;
        for f in kfold_split(&labels, 5, 42).unwrap() {
            let rate = f.iter().filter(|&&i| labels[i]).count() as f64 / f.len() as f64;
            assert!((rate - global).abs() <= 1.0 / f.len() as f64);
        }
    }

    #[test]
    fn adam_zero_gradient_keeps_params() {
        let mut params = Weights {
            forward: None,
            backward: None,
            heads: vec![],
            classifier: crate::model::ClassifierWeights {
                w: Tensor::vector(vec![0.5, -0.25]),
                b: Tensor::scalar(0.1),
            },
        };
        let mut state = AdamState::new(&params);
        state.m.classifier.w = Tensor::vector(vec![1.0, 1.0]);
        let before = params.clone();
        let zero = params.map(|t| Tensor::zeros(t.shape()));
        adam_step(&mut params, &zero, &mut state, 0.0);
        assert_eq!(params, before);
        assert_eq!(state.m.classifier.w.data(), &[0.9, 0.9]);
    }

    #[test]
    fn adam_first_step_is_sign_scaled() {
        let mut params = Weights {
            forward: None,
            backward: None,
            heads: vec![],
            classifier: crate::model::ClassifierWeights {
                w: Tensor::vector(vec![0.0, 0.0]),
                b: Tensor::scalar(0.0),
            },
        };
        let mut state = AdamState::new(&params);
        let mut grads = params.map(|t| Tensor::zeros(t.shape()));
        grads.classifier.w = Tensor::vector(vec![0.2, -3.0]);
        adam_step(&mut params, &grads, &mut state, 0.01);
        // m̂ = g and v̂ = g², so the step is −lr · g / (|g| + ε).
        let w = params.classifier.w.data();
        assert!((w[0] + 0.01 * 0.2 / (0.2 + 1e-8)).abs() < 1e-15);
        assert!((w[1] - 0.01 * 3.0 / (3.0 + 1e-8)).abs() < 1e-15);
        assert_eq!(params.classifier.b.data(), &[0.0]);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("gru".parse::<Variant>().is_err());
        let lr = Variant::LrBaseline.configure(&TrainConfig::default());
        assert_eq!(lr.interval_minutes, 2880);
        assert_eq!(lr.model.encoder, Encoder::Identity);
    }

    #[test]
    fn config_validation() {
        let mut cfg = TrainConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.folds = 1;
        assert!(cfg.validate().is_err());
        cfg.folds = 5;
        cfg.learning_rate = 0.0;
        assert!(cfg.validate().is_err());
    }
}
