//! The recurrent attention network.
//!
//! Interval features pass through an (optionally bidirectional) LSTM, a set
//! of soft reading heads that each form a convex combination of the
//! per-interval states, an elementwise max across heads, and a logistic
//! output. Every forward pass is recorded on a [`Tape`] so the same code
//! path serves scoring and training.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AutodiffError, Tape, Tensor, Var};
use crate::preprocess::FittedPreprocessor;

/// Width of each head's scoring hidden layer.
pub const DEFAULT_ATTENTION_HIDDEN: usize = 16;
pub const DEFAULT_HIDDEN: usize = 32;
pub const DEFAULT_HEADS: usize = 2;
pub const DEFAULT_DROPOUT: f64 = 0.5;

pub const MODEL_MAGIC: &str = "ICU-ATTEND-MODEL";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("sequence has no intervals")]
    EmptySequence,
    #[error("input has {found} features per interval, model expects {expected}")]
    InputWidth { expected: usize, found: usize },
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("model uses mean pooling; no attention trace is available")]
    NoAttention,
    #[error("model file: {0}")]
    ModelFile(String),
    #[error("model file version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Gate order used for every per-gate array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Output = 2,
    Candidate = 3,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Input, Gate::Forget, Gate::Output, Gate::Candidate];

    fn name(self) -> &'static str {
        ["input", "forget", "output", "candidate"][self as usize]
    }
}

/// One direction of LSTM parameters: input weights `W_g` (H × D), recurrent
/// weights `U_g` (H × H) and biases `b_g` (H), indexed by [`Gate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmWeights<T> {
    pub w: [T; 4],
    pub u: [T; 4],
    pub b: [T; 4],
}

/// Scoring net of one reading head:
/// `score_t = out_w · tanh(hidden_w ĥ_t + hidden_b) + out_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadWeights<T> {
    pub hidden_w: T,
    pub hidden_b: T,
    pub out_w: T,
    pub out_b: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierWeights<T> {
    pub w: T,
    pub b: T,
}

/// All learnable tensors, generic so the same layout can hold values, tape
/// handles, gradients or optimizer moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights<T> {
    pub forward: Option<LstmWeights<T>>,
    pub backward: Option<LstmWeights<T>>,
    pub heads: Vec<HeadWeights<T>>,
    pub classifier: ClassifierWeights<T>,
}

impl<T> LstmWeights<T> {
    fn map<U>(&self, f: &mut impl FnMut(&T) -> U) -> LstmWeights<U> {
        LstmWeights {
            w: [f(&self.w[0]), f(&self.w[1]), f(&self.w[2]), f(&self.w[3])],
            u: [f(&self.u[0]), f(&self.u[1]), f(&self.u[2]), f(&self.u[3])],
            b: [f(&self.b[0]), f(&self.b[1]), f(&self.b[2]), f(&self.b[3])],
        }
    }

    fn named<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a T)>) {
        for g in Gate::ALL {
            out.push((format!("{prefix}.w_{}", g.name()), &self.w[g as usize]));
        }
        for g in Gate::ALL {
            out.push((format!("{prefix}.u_{}", g.name()), &self.u[g as usize]));
        }
        for g in Gate::ALL {
            out.push((format!("{prefix}.b_{}", g.name()), &self.b[g as usize]));
        }
    }

    fn refs_mut<'a>(&'a mut self, out: &mut Vec<&'a mut T>) {
        out.extend(self.w.iter_mut());
        out.extend(self.u.iter_mut());
        out.extend(self.b.iter_mut());
    }
}

impl<T> HeadWeights<T> {
    fn map<U>(&self, f: &mut impl FnMut(&T) -> U) -> HeadWeights<U> {
        HeadWeights {
            hidden_w: f(&self.hidden_w),
            hidden_b: f(&self.hidden_b),
            out_w: f(&self.out_w),
            out_b: f(&self.out_b),
        }
    }
}

impl<T> Weights<T> {
    /// Applies `f` to every tensor, preserving layout.
    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Weights<U> {
        Weights {
            forward: self.forward.as_ref().map(|l| l.map(&mut f)),
            backward: self.backward.as_ref().map(|l| l.map(&mut f)),
            heads: self.heads.iter().map(|h| h.map(&mut f)).collect(),
            classifier: ClassifierWeights {
                w: f(&self.classifier.w),
                b: f(&self.classifier.b),
            },
        }
    }

    /// Every tensor with a stable name, in canonical order.
    pub fn named(&self) -> Vec<(String, &T)> {
        let mut out = Vec::new();
        if let Some(l) = &self.forward {
            l.named("forward", &mut out);
        }
        if let Some(l) = &self.backward {
            l.named("backward", &mut out);
        }
        for (r, h) in self.heads.iter().enumerate() {
            out.push((format!("head{r}.hidden_w"), &h.hidden_w));
            out.push((format!("head{r}.hidden_b"), &h.hidden_b));
            out.push((format!("head{r}.out_w"), &h.out_w));
            out.push((format!("head{r}.out_b"), &h.out_b));
        }
        out.push(("classifier.w".into(), &self.classifier.w));
        out.push(("classifier.b".into(), &self.classifier.b));
        out
    }

    /// Mutable references in the same order as [`Weights::named`].
    pub fn refs_mut(&mut self) -> Vec<&mut T> {
        let mut out = Vec::new();
        if let Some(l) = &mut self.forward {
            l.refs_mut(&mut out);
        }
        if let Some(l) = &mut self.backward {
            l.refs_mut(&mut out);
        }
        for h in &mut self.heads {
            out.extend([&mut h.hidden_w, &mut h.hidden_b, &mut h.out_w, &mut h.out_b]);
        }
        out.extend([&mut self.classifier.w, &mut self.classifier.b]);
        out
    }
}

/// What turns the input rows into states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoder {
    /// No recurrence: states are the (dropped-out) input rows.
    Identity,
    Lstm,
    BiLstm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    Attention,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden: usize,
    pub heads: usize,
    pub attention_hidden: usize,
    pub encoder: Encoder,
    pub pooling: Pooling,
    pub dropout_in: f64,
    pub dropout_out: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_dim: crate::preprocess::FEATURE_DIM,
            hidden: DEFAULT_HIDDEN,
            heads: DEFAULT_HEADS,
            attention_hidden: DEFAULT_ATTENTION_HIDDEN,
            encoder: Encoder::Lstm,
            pooling: Pooling::Attention,
            dropout_in: DEFAULT_DROPOUT,
            dropout_out: DEFAULT_DROPOUT,
        }
    }
}

impl ModelConfig {
    /// Width of ĥ_t: H, 2H for the bidirectional encoder, or the input width
    /// without recurrence.
    pub fn state_dim(&self) -> usize {
        match self.encoder {
            Encoder::Identity => self.input_dim,
            Encoder::Lstm => self.hidden,
            Encoder::BiLstm => 2 * self.hidden,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if self.input_dim == 0 {
            return bad("input width must be positive");
        }
        if self.encoder != Encoder::Identity && self.hidden == 0 {
            return bad("hidden size must be positive");
        }
        if self.pooling == Pooling::Attention && (self.heads == 0 || self.attention_hidden == 0) {
            return bad("attention pooling needs at least one head with a positive scoring width");
        }
        for rate in [self.dropout_in, self.dropout_out] {
            if !(0.0..1.0).contains(&rate) {
                return bad("dropout rates must lie in [0, 1)");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub weights: Weights<Tensor>,
}

fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, fan_in: usize, fan_out: usize, rng: &mut R) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect();
    if cols == 1 {
        Tensor::vector(data)
    } else {
        Tensor::matrix(rows, cols, data).expect("shape matches data")
    }
}

fn lstm_shapes(config: &ModelConfig) -> LstmWeights<Vec<usize>> {
    let (h, d) = (config.hidden, config.input_dim);
    LstmWeights {
        w: std::array::from_fn(|_| vec![h, d]),
        u: std::array::from_fn(|_| vec![h, h]),
        b: std::array::from_fn(|_| vec![h]),
    }
}

impl ModelParams {
    /// Expected tensor shapes for `config`.
    pub fn shapes(config: &ModelConfig) -> Weights<Vec<usize>> {
        let s = config.state_dim();
        let a = config.attention_hidden;
        let lstm = (config.encoder != Encoder::Identity).then(|| lstm_shapes(config));
        let heads = match config.pooling {
            Pooling::Attention => config.heads,
            Pooling::Mean => 0,
        };
        Weights {
            backward: (config.encoder == Encoder::BiLstm).then(|| lstm_shapes(config)),
            forward: lstm,
            heads: (0..heads)
                .map(|_| HeadWeights {
                    hidden_w: vec![a, s],
                    hidden_b: vec![a],
                    out_w: vec![a],
                    out_b: vec![1],
                })
                .collect(),
            classifier: ClassifierWeights {
                w: vec![s],
                b: vec![1],
            },
        }
    }

    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let weights = Self::shapes(&config).map(|shape| Tensor::zeros(shape));
        Ok(Self { config, weights })
    }

    /// Uniform Glorot weights; zero biases except the forget-gate bias, which
    /// starts at 1.
    pub fn init<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Result<Self> {
        let mut params = Self::zeros(config)?;
        let cfg = params.config.clone();
        let (h, d, s, a) = (cfg.hidden, cfg.input_dim, cfg.state_dim(), cfg.attention_hidden);
        let w = &mut params.weights;
        for lstm in [&mut w.forward, &mut w.backward].into_iter().flatten() {
            for g in Gate::ALL {
                lstm.w[g as usize] = glorot(h, d, d, h, rng);
                lstm.u[g as usize] = glorot(h, h, h, h, rng);
            }
            lstm.b[Gate::Forget as usize] = Tensor::vector(vec![1.0; h]);
        }
        for head in &mut w.heads {
            head.hidden_w = glorot(a, s, s, a, rng);
            head.out_w = glorot(a, 1, a, 1, rng);
        }
        w.classifier.w = glorot(s, 1, s, 1, rng);
        Ok(params)
    }

    pub fn num_parameters(&self) -> usize {
        self.weights.named().iter().map(|(_, t)| t.len()).sum()
    }

    /// Registers every tensor as a leaf on `tape`.
    pub fn bind(&self, tape: &mut Tape) -> Weights<Var> {
        self.weights.map(|t| tape.leaf(t.clone()))
    }
}

/// Tape handles produced by one LSTM step.
#[derive(Debug, Clone, Copy)]
pub struct CellVars {
    pub h: Var,
    pub c: Var,
    pub input_gate: Var,
    pub forget_gate: Var,
    pub output_gate: Var,
    pub candidate: Var,
}

/// One LSTM step on the tape:
/// gates `σ(W_g x + U_g h + b_g)`, candidate `tanh(W_c x + U_c h + b_c)`,
/// `c_t = f ∗ c_{t−1} + i ∗ c̃`, `h_t = o ∗ tanh(c_t)`.
pub fn cell_on_tape(tape: &mut Tape, x: Var, h: Var, c: Var, w: &LstmWeights<Var>) -> Result<CellVars> {
    let mut pre = [x; 4];
    for g in Gate::ALL {
        let i = g as usize;
        let wx = tape.matmul(w.w[i], x)?;
        let uh = tape.matmul(w.u[i], h)?;
        let sum = tape.add(wx, uh)?;
        pre[i] = tape.add(sum, w.b[i])?;
    }
    let input_gate = tape.sigmoid(pre[Gate::Input as usize]);
    let forget_gate = tape.sigmoid(pre[Gate::Forget as usize]);
    let output_gate = tape.sigmoid(pre[Gate::Output as usize]);
    let candidate = tape.tanh(pre[Gate::Candidate as usize]);
    let kept = tape.mul(forget_gate, c)?;
    let written = tape.mul(input_gate, candidate)?;
    let c_new = tape.add(kept, written)?;
    let squashed = tape.tanh(c_new);
    let h_new = tape.mul(output_gate, squashed)?;
    Ok(CellVars {
        h: h_new,
        c: c_new,
        input_gate,
        forget_gate,
        output_gate,
        candidate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Runs one direction from zero state over `rows` (already on the tape) and
/// returns states aligned with the input order.
pub fn lstm_on_tape(
    tape: &mut Tape,
    rows: &[Var],
    w: &LstmWeights<Var>,
    direction: Direction,
) -> Result<Vec<Var>> {
    if rows.is_empty() {
        return Err(ModelError::EmptySequence);
    }
    let hidden = tape.value(w.b[0]).len();
    let mut h = tape.leaf(Tensor::zeros(&[hidden]));
    let mut c = tape.leaf(Tensor::zeros(&[hidden]));
    let mut states = vec![h; rows.len()];
    let order: Vec<usize> = match direction {
        Direction::Forward => (0..rows.len()).collect(),
        Direction::Backward => (0..rows.len()).rev().collect(),
    };
    for t in order {
        let step = cell_on_tape(tape, rows[t], h, c, w)?;
        h = step.h;
        c = step.c;
        states[t] = h;
    }
    Ok(states)
}

/// Attention probabilities of one head over the state rows.
pub fn attention_on_tape(tape: &mut Tape, states: &[Var], head: &HeadWeights<Var>) -> Result<Var> {
    let mut scores = Vec::with_capacity(states.len());
    for &s in states {
        let pre = tape.matmul(head.hidden_w, s)?;
        let pre = tape.add(pre, head.hidden_b)?;
        let act = tape.tanh(pre);
        let score = tape.matmul(head.out_w, act)?;
        scores.push(tape.add(score, head.out_b)?);
    }
    let scores = tape.concat(&scores)?;
    Ok(tape.softmax(scores)?)
}

/// `σ(w · z + b)` on the tape.
pub fn classify_on_tape(tape: &mut Tape, z: Var, c: &ClassifierWeights<Var>) -> Result<Var> {
    let logit = tape.matmul(c.w, z)?;
    let logit = tape.add(logit, c.b)?;
    Ok(tape.sigmoid(logit))
}

/// A recorded forward pass over one episode.
#[derive(Debug, Clone)]
pub struct EpisodePass {
    pub tape: Tape,
    pub bound: Weights<Var>,
    pub states: Var,
    pub attention: Vec<Var>,
    pub pooled: Var,
    pub prob: Var,
}

impl EpisodePass {
    pub fn risk(&self) -> f64 {
        self.tape.value(self.prob).item()
    }

    /// Per-head attention rows, states and risk; `None` under mean pooling.
    pub fn trace(&self, record_id: u64) -> Option<AttentionTrace> {
        if self.attention.is_empty() {
            return None;
        }
        Some(AttentionTrace {
            record_id,
            attention: self
                .attention
                .iter()
                .map(|&a| self.tape.value(a).data().to_vec())
                .collect(),
            states: self.tape.value(self.states).clone(),
            risk: self.risk(),
        })
    }

    /// Appends the log-loss for `label` and returns it with the gradient of
    /// every parameter.
    pub fn loss_and_gradients(mut self, label: bool) -> Result<(f64, Weights<Tensor>)> {
        let loss = self
            .tape
            .binary_cross_entropy(self.prob, if label { 1.0 } else { 0.0 })?;
        let grads = self.tape.backward(loss)?;
        let value = self.tape.value(loss).item();
        Ok((value, self.bound.map(|&v| grads.wrt(v))))
    }
}

/// Input dropout → encoder → attention or mean pooling → output dropout on
/// the pooled vector → logistic output. Dropout is active only when `train`
/// is set.
pub fn forward_episode<R: Rng + ?Sized>(
    params: &ModelParams,
    x: &Tensor,
    train: bool,
    rng: &mut R,
) -> Result<EpisodePass> {
    let cfg = &params.config;
    if x.shape().len() != 2 || x.rows() == 0 {
        return Err(ModelError::EmptySequence);
    }
    if x.cols() != cfg.input_dim {
        return Err(ModelError::InputWidth {
            expected: cfg.input_dim,
            found: x.cols(),
        });
    }
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape);
    let input = tape.leaf(x.clone());
    let input = tape.dropout(input, cfg.dropout_in, train, rng)?;
    let rows = (0..x.rows())
        .map(|t| tape.row(input, t))
        .collect::<std::result::Result<Vec<_>, _>>()?;

    let state_rows = match (&bound.forward, &bound.backward) {
        (Some(fw), None) => lstm_on_tape(&mut tape, &rows, fw, Direction::Forward)?,
        (Some(fw), Some(bw)) => {
            let f = lstm_on_tape(&mut tape, &rows, fw, Direction::Forward)?;
            let b = lstm_on_tape(&mut tape, &rows, bw, Direction::Backward)?;
            f.iter()
                .zip(&b)
                .map(|(&fv, &bv)| tape.concat(&[fv, bv]))
                .collect::<std::result::Result<Vec<_>, _>>()?
        }
        _ => rows,
    };
    let states = tape.stack_rows(&state_rows)?;

    let mut attention = Vec::new();
    let pooled = match cfg.pooling {
        Pooling::Mean => tape.mean(states, 0)?,
        Pooling::Attention => {
            let mut pooled: Option<Var> = None;
            for head in &bound.heads {
                let a = attention_on_tape(&mut tape, &state_rows, head)?;
                attention.push(a);
                let reading = tape.weighted_sum(a, states)?;
                pooled = Some(match pooled {
                    None => reading,
                    Some(p) => tape.maximum(p, reading)?,
                });
            }
            pooled.expect("validated: at least one head")
        }
    };
    let z = tape.dropout(pooled, cfg.dropout_out, train, rng)?;
    let prob = classify_on_tape(&mut tape, z, &bound.classifier)?;
    Ok(EpisodePass {
        tape,
        bound,
        states,
        attention,
        pooled,
        prob,
    })
}

/// Deterministic (dropout-free) risk for one feature matrix.
pub fn predict(params: &ModelParams, x: &Tensor) -> Result<f64> {
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    Ok(forward_episode(params, x, false, &mut rng)?.risk())
}

/// Attention probabilities, states and risk of a scored episode.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionTrace {
    pub record_id: u64,
    /// `R × T`; each row sums to 1.
    pub attention: Vec<Vec<f64>>,
    /// `T × state_dim`.
    pub states: Tensor,
    pub risk: f64,
}

pub fn attention_trace(params: &ModelParams, record_id: u64, x: &Tensor) -> Result<AttentionTrace> {
    if params.config.pooling != Pooling::Attention {
        return Err(ModelError::NoAttention);
    }
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    forward_episode(params, x, false, &mut rng)?
        .trace(record_id)
        .ok_or(ModelError::NoAttention)
}

// Value-level entry points. Each records a small tape and runs the same
// tape operations the training pass uses.

/// Values computed by one LSTM step.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStep {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    pub input_gate: Vec<f64>,
    pub forget_gate: Vec<f64>,
    pub output_gate: Vec<f64>,
    pub candidate: Vec<f64>,
}

pub fn lstm_cell(x: &[f64], h_prev: &[f64], c_prev: &[f64], w: &LstmWeights<Tensor>) -> Result<CellStep> {
    let mut tape = Tape::new();
    let bound = w.map(&mut |t: &Tensor| tape.leaf(t.clone()));
    let x = tape.leaf(Tensor::vector(x.to_vec()));
    let h = tape.leaf(Tensor::vector(h_prev.to_vec()));
    let c = tape.leaf(Tensor::vector(c_prev.to_vec()));
    let step = cell_on_tape(&mut tape, x, h, c, &bound)?;
    let v = |var| tape.value(var).data().to_vec();
    Ok(CellStep {
        h: v(step.h),
        c: v(step.c),
        input_gate: v(step.input_gate),
        forget_gate: v(step.forget_gate),
        output_gate: v(step.output_gate),
        candidate: v(step.candidate),
    })
}

fn input_rows(tape: &mut Tape, x: &Tensor) -> Result<Vec<Var>> {
    if x.shape().len() != 2 || x.rows() == 0 {
        return Err(ModelError::EmptySequence);
    }
    let m = tape.leaf(x.clone());
    Ok((0..x.rows())
        .map(|t| tape.row(m, t))
        .collect::<std::result::Result<Vec<_>, _>>()?)
}

/// States `T × H` of one direction, aligned with the rows of `x`.
pub fn run_lstm(x: &Tensor, w: &LstmWeights<Tensor>, direction: Direction) -> Result<Tensor> {
    let mut tape = Tape::new();
    let bound = w.map(&mut |t: &Tensor| tape.leaf(t.clone()));
    let rows = input_rows(&mut tape, x)?;
    let states = lstm_on_tape(&mut tape, &rows, &bound, direction)?;
    let m = tape.stack_rows(&states)?;
    Ok(tape.value(m).clone())
}

/// Joint states `T × 2H`: forward state t next to backward state t.
pub fn run_bilstm(x: &Tensor, forward: &LstmWeights<Tensor>, backward: &LstmWeights<Tensor>) -> Result<Tensor> {
    let f = run_lstm(x, forward, Direction::Forward)?;
    let b = run_lstm(x, backward, Direction::Backward)?;
    let rows: Vec<Vec<f64>> = (0..f.rows())
        .map(|t| f.row(t).iter().chain(b.row(t)).copied().collect())
        .collect();
    Ok(Tensor::from_rows(&rows)?)
}

fn state_rows(tape: &mut Tape, states: &Tensor) -> Result<(Var, Vec<Var>)> {
    let rows = input_rows(tape, states)?;
    let m = tape.stack_rows(&rows)?;
    Ok((m, rows))
}

/// Softmax-normalized attention of one head over the rows of `states`.
pub fn attention_weights(states: &Tensor, head: &HeadWeights<Tensor>) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let bound = head.map(&mut |t: &Tensor| tape.leaf(t.clone()));
    let (_, rows) = state_rows(&mut tape, states)?;
    let a = attention_on_tape(&mut tape, &rows, &bound)?;
    Ok(tape.value(a).data().to_vec())
}

/// `Σ_t a_t ĥ_t`.
pub fn read_head(states: &Tensor, attention: &[f64]) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let m = tape.leaf(states.clone());
    let a = tape.leaf(Tensor::vector(attention.to_vec()));
    let r = tape.weighted_sum(a, m)?;
    Ok(tape.value(r).data().to_vec())
}

/// Elementwise max across head readings.
pub fn pool_heads(readings: &[Vec<f64>]) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let mut vars = readings.iter().map(|r| tape.leaf(Tensor::vector(r.clone())));
    let mut acc = vars
        .next()
        .ok_or(ModelError::InvalidConfig("pooling needs at least one head".into()))?;
    let rest: Vec<Var> = vars.collect();
    for v in rest {
        acc = tape.maximum(acc, v)?;
    }
    Ok(tape.value(acc).data().to_vec())
}

/// Average of the state rows.
pub fn mean_pool(states: &Tensor) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let (m, _) = state_rows(&mut tape, states)?;
    let z = tape.mean(m, 0)?;
    Ok(tape.value(z).data().to_vec())
}

pub fn classify(z: &[f64], classifier: &ClassifierWeights<Tensor>) -> Result<f64> {
    let mut tape = Tape::new();
    let c = ClassifierWeights {
        w: tape.leaf(classifier.w.clone()),
        b: tape.leaf(classifier.b.clone()),
    };
    let z = tape.leaf(Tensor::vector(z.to_vec()));
    let p = classify_on_tape(&mut tape, z, &c)?;
    Ok(tape.value(p).item())
}

/// Clipped binary log-loss.
pub fn log_loss(p: f64, label: bool) -> f64 {
    let mut tape = Tape::new();
    let pv = tape.leaf(Tensor::scalar(p));
    let loss = tape
        .binary_cross_entropy(pv, if label { 1.0 } else { 0.0 })
        .expect("scalar input");
    tape.value(loss).item()
}

#[derive(Debug, Serialize, Deserialize)]
struct NamedTensor {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFileRepr {
    magic: String,
    version: u32,
    config: ModelConfig,
    preprocessor: Option<FittedPreprocessor>,
    tensors: Vec<NamedTensor>,
}

/// Parameters plus the preprocessing statistics they were trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub params: ModelParams,
    pub preprocessor: Option<FittedPreprocessor>,
}

impl ModelFile {
    pub fn to_json(&self) -> String {
        let repr = ModelFileRepr {
            magic: MODEL_MAGIC.to_string(),
            version: MODEL_FORMAT_VERSION,
            config: self.params.config.clone(),
            preprocessor: self.preprocessor.clone(),
            tensors: self
                .params
                .weights
                .named()
                .into_iter()
                .map(|(name, t)| NamedTensor {
                    name,
                    shape: t.shape().to_vec(),
                    data: t.data().to_vec(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&repr).expect("model file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: ModelFileRepr =
            serde_json::from_str(text).map_err(|e| ModelError::ModelFile(e.to_string()))?;
        if repr.magic != MODEL_MAGIC {
            return Err(ModelError::ModelFile(format!("bad magic `{}`", repr.magic)));
        }
        if repr.version != MODEL_FORMAT_VERSION {
            return Err(ModelError::VersionMismatch {
                found: repr.version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let mut params = ModelParams::zeros(repr.config)?;
        let expected: Vec<(String, Vec<usize>)> = params
            .weights
            .named()
            .into_iter()
            .map(|(n, t)| (n, t.shape().to_vec()))
            .collect();
        if expected.len() != repr.tensors.len() {
            return Err(ModelError::ModelFile(format!(
                "expected {} tensors, found {}",
                expected.len(),
                repr.tensors.len()
            )));
        }
        for ((slot, (name, shape)), stored) in params
            .weights
            .refs_mut()
            .into_iter()
            .zip(expected)
            .zip(repr.tensors)
        {
            if stored.name != name || stored.shape != shape {
                return Err(ModelError::ModelFile(format!(
                    "tensor `{}` {:?} does not match expected `{name}` {shape:?}",
                    stored.name, stored.shape
                )));
            }
            *slot = Tensor::new(stored.shape, stored.data)?;
        }
        Ok(Self {
            params,
            preprocessor: repr.preprocessor,
        })
    }
}
