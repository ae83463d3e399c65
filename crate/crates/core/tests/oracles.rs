//! Independent reimplementations checked against the tape-based forward
//! and backward passes.

use icu_attend::autodiff::{Tape, Tensor};
use icu_attend::gradcheck::{grad_check, grad_check_params, relative_error};
use icu_attend::model::{
    lstm_cell, run_bilstm, run_lstm, Direction, Encoder, Gate, LstmWeights, ModelConfig, ModelParams, Pooling,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Scalar-loop LSTM step written from the gate equations.
fn scalar_cell(x: &[f64], h: &[f64], c: &[f64], w: &LstmWeights<Tensor>) -> (Vec<f64>, Vec<f64>) {
    let hidden = h.len();
    let pre = |g: Gate, j: usize| {
        let g = g as usize;
        let mut s = w.b[g].data()[j];
        for (k, xk) in x.iter().enumerate() {
            s += w.w[g].data()[j * x.len() + k] * xk;
        }
        for (k, hk) in h.iter().enumerate() {
            s += w.u[g].data()[j * hidden + k] * hk;
        }
        s
    };
    let mut h_new = vec![0.0; hidden];
    let mut c_new = vec![0.0; hidden];
    for j in 0..hidden {
        let i = sigmoid(pre(Gate::Input, j));
        let f = sigmoid(pre(Gate::Forget, j));
        let o = sigmoid(pre(Gate::Output, j));
        let cand = pre(Gate::Candidate, j).tanh();
        c_new[j] = f * c[j] + i * cand;
        h_new[j] = o * c_new[j].tanh();
    }
    (h_new, c_new)
}

fn scalar_run(x: &Tensor, w: &LstmWeights<Tensor>, hidden: usize, reverse: bool) -> Vec<Vec<f64>> {
    let t_len = x.rows();
    let mut h = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    let mut out = vec![Vec::new(); t_len];
    let order: Vec<usize> = if reverse { (0..t_len).rev().collect() } else { (0..t_len).collect() };
    for t in order {
        let (hn, cn) = scalar_cell(x.row(t), &h, &c, w);
        h = hn;
        c = cn;
        out[t] = h.clone();
    }
    out
}

fn random_lstm(rng: &mut ChaCha8Rng, hidden: usize, input: usize, scale: f64) -> LstmWeights<Tensor> {
    let mut draw = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|_| if scale > 0.0 { rng.gen_range(-scale..scale) } else { 0.0 })
            .collect()
    };
    LstmWeights {
        w: std::array::from_fn(|_| Tensor::matrix(hidden, input, draw(hidden * input)).unwrap()),
        u: std::array::from_fn(|_| Tensor::matrix(hidden, hidden, draw(hidden * hidden)).unwrap()),
        b: std::array::from_fn(|_| Tensor::vector(draw(hidden))),
    }
}

#[test]
fn two_unit_cell_matches_scalar_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let input = rng.gen_range(1..6);
        let w = random_lstm(&mut rng, 2, input, 1.5);
        let x: Vec<f64> = (0..input).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let h: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let step = lstm_cell(&x, &h, &c, &w).unwrap();
        let (h_ref, c_ref) = scalar_cell(&x, &h, &c, &w);
        for j in 0..2 {
            assert!((step.h[j] - h_ref[j]).abs() < 1e-10);
            assert!((step.c[j] - c_ref[j]).abs() < 1e-10);
        }
    }
}

#[test]
fn sequence_matches_scalar_oracle_both_directions() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..50 {
        let (t_len, input) = (rng.gen_range(1..8), rng.gen_range(1..5));
        let fw = random_lstm(&mut rng, 2, input, 1.0);
        let bw = random_lstm(&mut rng, 2, input, 1.0);
        let x = Tensor::matrix(t_len, input, (0..t_len * input).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
        let f = run_lstm(&x, &fw, Direction::Forward).unwrap();
        let b = run_lstm(&x, &bw, Direction::Backward).unwrap();
        let (f_ref, b_ref) = (scalar_run(&x, &fw, 2, false), scalar_run(&x, &bw, 2, true));
        let joint = run_bilstm(&x, &fw, &bw).unwrap();
        for t in 0..t_len {
            for j in 0..2 {
                assert!((f.row(t)[j] - f_ref[t][j]).abs() < 1e-10);
                assert!((b.row(t)[j] - b_ref[t][j]).abs() < 1e-10);
                assert!((joint.row(t)[2 + j] - b_ref[t][j]).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn backward_on_palindrome_mirrors_forward() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let w = random_lstm(&mut rng, 3, 2, 1.0);
    let rows = [[0.3, -1.0], [1.2, 0.4], [-0.7, 0.9], [1.2, 0.4], [0.3, -1.0]];
    let x = Tensor::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap();
    let f = run_lstm(&x, &w, Direction::Forward).unwrap();
    let b = run_lstm(&x, &w, Direction::Backward).unwrap();
    for t in 0..5 {
        assert_eq!(f.row(t), b.row(4 - t));
    }
}

#[test]
fn zero_backward_params_leave_forward_half_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let fw = random_lstm(&mut rng, 3, 4, 1.0);
    let bw = random_lstm(&mut rng, 3, 4, 0.0);
    let x = Tensor::matrix(5, 4, (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let uni = run_lstm(&x, &fw, Direction::Forward).unwrap();
    let joint = run_bilstm(&x, &fw, &bw).unwrap();
    for t in 0..5 {
        assert_eq!(&joint.row(t)[..3], uni.row(t));
        assert!(joint.row(t)[3..].iter().all(|&v| v == 0.0));
    }
}

fn tiny_bilstm() -> ModelConfig {
    ModelConfig {
        input_dim: 4,
        hidden: 3,
        heads: 2,
        attention_hidden: 4,
        encoder: Encoder::BiLstm,
        pooling: Pooling::Attention,
        dropout_in: 0.0,
        dropout_out: 0.0,
    }
}

#[test]
fn bilstm_attention_gradients_match_finite_differences() {
    let report = grad_check(&tiny_bilstm(), 4, 0).unwrap();
    assert!(report.max_relative_error < 1e-4, "{report:?}");
    assert_eq!(report.checked, ModelParams::zeros(tiny_bilstm()).unwrap().num_parameters());
}

// Gradients near zero (the score offset gets exactly zero by shift
// invariance) sit at the central-difference roundoff floor, so across many
// draws the discrepancy is bounded in absolute terms instead.
#[test]
fn bilstm_attention_gradient_discrepancy_stays_at_roundoff() {
    for seed in 0..20 {
        let r = grad_check(&tiny_bilstm(), 4, seed).unwrap();
        let abs = (r.worst_analytic - r.worst_numeric).abs();
        assert!(r.max_relative_error < 1e-4 || abs < 1e-10, "seed {seed}: {r:?}");
    }
}

#[test]
fn lr_baseline_gradients_match_finite_differences() {
    let cfg = ModelConfig {
        encoder: Encoder::Identity,
        pooling: Pooling::Mean,
        ..tiny_bilstm()
    };
    let report = grad_check(&cfg, 1, 3).unwrap();
    assert!(report.max_relative_error < 1e-4, "{report:?}");
}

#[test]
fn random_graph_gradients_match_finite_differences() {
    // f(a, b) = bce(σ(v · max(tanh(A b), softmax(a ⊙ b))), 1) with shared use of b.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let a0: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b0: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let m0: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v0: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let build = |a: &[f64], b: &[f64]| {
        let mut tape = Tape::new();
        let av = tape.leaf(Tensor::vector(a.to_vec()));
        let bv = tape.leaf(Tensor::vector(b.to_vec()));
        let m = tape.leaf(Tensor::matrix(3, 3, m0.clone()).unwrap());
        let v = tape.leaf(Tensor::vector(v0.clone()));
        let mb = tape.matmul(m, bv).unwrap();
        let left = tape.tanh(mb);
        let ab = tape.mul(av, bv).unwrap();
        let right = tape.softmax(ab).unwrap();
        let mx = tape.maximum(left, right).unwrap();
        let logit = tape.matmul(v, mx).unwrap();
        let p = tape.sigmoid(logit);
        let loss = tape.binary_cross_entropy(p, 1.0).unwrap();
        (tape, av, bv, loss)
    };
    let (tape, av, bv, loss) = build(&a0, &b0);
    let grads = tape.backward(loss).unwrap();
    let eval = |a: &[f64], b: &[f64]| {
        let (t, _, _, l) = build(a, b);
        t.value(l).item()
    };
    let h = 1e-5;
    for i in 0..3 {
        let (mut ap, mut am) = (a0.clone(), a0.clone());
        ap[i] += h;
        am[i] -= h;
        let num = (eval(&ap, &b0) - eval(&am, &b0)) / (2.0 * h);
        assert!(relative_error(grads.wrt(av).data()[i], num) < 1e-4);
        let (mut bp, mut bm) = (b0.clone(), b0.clone());
        bp[i] += h;
        bm[i] -= h;
        let num = (eval(&a0, &bp) - eval(&a0, &bm)) / (2.0 * h);
        assert!(relative_error(grads.wrt(bv).data()[i], num) < 1e-4);
    }
}

#[test]
fn gradient_check_covers_mean_pooled_bilstm() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = ModelConfig {
        pooling: Pooling::Mean,
        ..tiny_bilstm()
    };
    let params = ModelParams::init(cfg, &mut rng).unwrap();
    let x = Tensor::matrix(3, 4, (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let report = grad_check_params(&params, &x, false).unwrap();
    assert!(report.max_relative_error < 1e-4, "{report:?}");
}
