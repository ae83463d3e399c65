//! Finite-difference verification of the tape gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Tensor;
use crate::model::{forward_episode, log_loss, ModelConfig, ModelParams, Result};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Outcome of a gradient check.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Name of the tensor holding the worst element.
    pub worst_tensor: String,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    pub checked: usize,
}

/// `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

fn eval_loss(params: &ModelParams, x: &Tensor, label: bool) -> Result<f64> {
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let p = forward_episode(params, x, false, &mut rng)?.risk();
    Ok(log_loss(p, label))
}

/// Compares every analytic parameter gradient of the log-loss with central
/// differences. Dropout must be off in `config`; it is forced off here.
pub fn grad_check_params(params: &ModelParams, x: &Tensor, label: bool) -> Result<GradCheckReport> {
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let (_, grads) = forward_episode(params, x, false, &mut rng)?.loss_and_gradients(label)?;
    let names: Vec<String> = params.weights.named().into_iter().map(|(n, _)| n).collect();
    let analytic: Vec<Tensor> = grads.named().into_iter().map(|(_, t)| t.clone()).collect();

    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_tensor: String::new(),
        worst_analytic: 0.0,
        worst_numeric: 0.0,
        checked: 0,
    };
    for (k, name) in names.iter().enumerate() {
        for i in 0..analytic[k].len() {
            let original = probe.weights.refs_mut()[k].data()[i];
            probe.weights.refs_mut()[k].data_mut()[i] = original + FD_STEP;
            let plus = eval_loss(&probe, x, label)?;
            probe.weights.refs_mut()[k].data_mut()[i] = original - FD_STEP;
            let minus = eval_loss(&probe, x, label)?;
            probe.weights.refs_mut()[k].data_mut()[i] = original;

            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let err = relative_error(analytic[k].data()[i], numeric);
            report.checked += 1;
            if err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst_tensor = name.clone();
                report.worst_analytic = analytic[k].data()[i];
                report.worst_numeric = numeric;
            }
        }
    }
    Ok(report)
}

/// Builds a randomly initialized model for `config` (dropout disabled), a
/// random input of `steps` intervals and a random label, then runs
/// [`grad_check_params`].
pub fn grad_check(config: &ModelConfig, steps: usize, seed: u64) -> Result<GradCheckReport> {
    let mut config = config.clone();
    config.dropout_in = 0.0;
    config.dropout_out = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::init(config, &mut rng)?;
    // Non-zero biases so every bias gradient path is exercised.
    for t in params.weights.refs_mut() {
        if t.shape().len() == 1 {
            for v in t.data_mut() {
                *v += rng.gen_range(-0.5..0.5);
            }
        }
    }
    let d = params.config.input_dim;
    let x = Tensor::matrix(steps, d, (0..steps * d).map(|_| rng.gen_range(-1.5..1.5)).collect())?;
    let label = rng.gen_bool(0.5);
    grad_check_params(&params, &x, label)
}
