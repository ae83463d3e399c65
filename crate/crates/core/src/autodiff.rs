//! Tape-based reverse-mode automatic differentiation.
//!
//! The engine supports exactly the operations the network needs. Every
//! operation appends a node to a [`Tape`]; [`Tape::backward`] walks the
//! nodes in reverse insertion order (which is a topological order, since
//! inputs are always recorded before their consumers) and accumulates
//! gradients along every path.
//!
//! Tensors are rank 1 or rank 2, row-major, double precision. There is no
//! broadcasting: binary elementwise operations require identical shapes.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lower clipping bound applied to probabilities inside the log-loss.
pub const PROB_CLIP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AutodiffError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("tensor data length {len} does not match shape {shape:?}")]
    DataLength { shape: Vec<usize>, len: usize },
    #[error("dropout rate {0} outside [0, 1)")]
    InvalidRate(f64),
    #[error("loss must be a scalar, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("{0} requires at least one input")]
    EmptyInput(&'static str),
    #[error("row {index} out of range for a matrix with {rows} rows")]
    RowOutOfRange { index: usize, rows: usize },
    #[error("axis {0} is invalid for a rank-2 tensor")]
    InvalidAxis(usize),
}

pub type Result<T> = std::result::Result<T, AutodiffError>;

/// Dense row-major tensor of rank 1 or 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if shape.is_empty() || shape.len() > 2 || expected != data.len() {
            return Err(AutodiffError::DataLength {
                shape,
                len: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn scalar(value: f64) -> Self {
        Self::vector(vec![value])
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() {
            return Err(AutodiffError::EmptyInput("from_rows"));
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(AutodiffError::ShapeMismatch {
                    op: "from_rows",
                    left: vec![cols],
                    right: vec![row.len()],
                });
            }
            data.extend_from_slice(row);
        }
        Self::matrix(rows.len(), cols, data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Column count; a vector is treated as a single column.
    pub fn cols(&self) -> usize {
        self.shape.get(1).copied().unwrap_or(1)
    }

    pub fn row(&self, index: usize) -> &[f64] {
        let cols = self.cols();
        &self.data[index * cols..(index + 1) * cols]
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> f64 {
        self.data[0]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    Concat(Vec<Var>),
    StackRows(Vec<Var>),
    Row(Var, usize),
    Sigmoid(Var),
    Tanh(Var),
    Softmax(Var),
    Maximum(Var, Var),
    Mean { input: Var, axis: usize },
    WeightedSum { weights: Var, rows: Var },
    Dropout { input: Var, mask: Vec<f64> },
    BinaryCrossEntropy { prob: Var, label: f64 },
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Record of a forward computation.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar loss with respect to every node on a tape.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient with respect to `var`; zero if the loss does not depend on it.
    pub fn wrt(&self, var: Var) -> Tensor {
        let shape = self.shapes[var.0].clone();
        match &self.grads[var.0] {
            Some(g) => Tensor {
                shape,
                data: g.clone(),
            },
            None => Tensor::zeros(&shape),
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> AutodiffError {
    AutodiffError::ShapeMismatch {
        op,
        left: a.shape.clone(),
        right: b.shape.clone(),
    }
}

fn accumulate(slot: &mut Option<Vec<f64>>, len: usize) -> &mut Vec<f64> {
    slot.get_or_insert_with(|| vec![0.0; len])
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Records an input tensor (parameter or constant).
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    /// Matrix product. Supported forms: `[m,k]·[k,n]`, `[m,k]·[k]` and the
    /// dot product `[k]·[k]` (which yields a one-element vector).
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        let out = match (av.shape.as_slice(), bv.shape.as_slice()) {
            (&[m, k], &[k2, n]) if k == k2 => {
                let mut data = vec![0.0; m * n];
                for i in 0..m {
                    for p in 0..k {
                        let x = av.data[i * k + p];
                        if x == 0.0 {
                            continue;
                        }
                        let brow = &bv.data[p * n..(p + 1) * n];
                        let orow = &mut data[i * n..(i + 1) * n];
                        for (o, &bval) in orow.iter_mut().zip(brow) {
                            *o += x * bval;
                        }
                    }
                }
                Tensor {
                    shape: vec![m, n],
                    data,
                }
            }
            (&[m, k], &[k2]) if k == k2 => {
                let data = (0..m)
                    .map(|i| {
                        av.data[i * k..(i + 1) * k]
                            .iter()
                            .zip(&bv.data)
                            .map(|(x, y)| x * y)
                            .sum()
                    })
                    .collect();
                Tensor::vector(data)
            }
            (&[k], &[k2]) if k == k2 => {
                Tensor::scalar(av.data.iter().zip(&bv.data).map(|(x, y)| x * y).sum())
            }
            _ => return Err(mismatch("matmul", av, bv)),
        };
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape != bv.shape {
            return Err(mismatch("add", av, bv));
        }
        let data = av.data.iter().zip(&bv.data).map(|(x, y)| x + y).collect();
        let out = Tensor {
            shape: av.shape.clone(),
            data,
        };
        Ok(self.push(out, Op::Add(a, b)))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape != bv.shape {
            return Err(mismatch("mul", av, bv));
        }
        let data = av.data.iter().zip(&bv.data).map(|(x, y)| x * y).collect();
        let out = Tensor {
            shape: av.shape.clone(),
            data,
        };
        Ok(self.push(out, Op::Mul(a, b)))
    }

    /// Concatenates vectors end to end.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(AutodiffError::EmptyInput("concat"));
        }
        let mut data = Vec::new();
        for &p in parts {
            let v = self.value(p);
            if v.shape.len() != 1 {
                return Err(mismatch("concat", v, self.value(parts[0])));
            }
            data.extend_from_slice(&v.data);
        }
        Ok(self.push(Tensor::vector(data), Op::Concat(parts.to_vec())))
    }

    /// Stacks equal-length vectors into the rows of a matrix.
    pub fn stack_rows(&mut self, rows: &[Var]) -> Result<Var> {
        let first = match rows.first() {
            Some(&r) => self.value(r).clone(),
            None => return Err(AutodiffError::EmptyInput("stack_rows")),
        };
        if first.shape.len() != 1 {
            return Err(mismatch("stack_rows", &first, &first));
        }
        let cols = first.len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for &r in rows {
            let v = self.value(r);
            if v.shape != first.shape {
                return Err(mismatch("stack_rows", &first, v));
            }
            data.extend_from_slice(&v.data);
        }
        let out = Tensor {
            shape: vec![rows.len(), cols],
            data,
        };
        Ok(self.push(out, Op::StackRows(rows.to_vec())))
    }

    /// Extracts one row of a matrix as a vector.
    pub fn row(&mut self, matrix: Var, index: usize) -> Result<Var> {
        let m = self.value(matrix);
        if m.shape.len() != 2 {
            return Err(mismatch("row", m, m));
        }
        if index >= m.rows() {
            return Err(AutodiffError::RowOutOfRange {
                index,
                rows: m.rows(),
            });
        }
        let out = Tensor::vector(m.row(index).to_vec());
        Ok(self.push(out, Op::Row(matrix, index)))
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let av = self.value(a);
        let out = Tensor {
            shape: av.shape.clone(),
            data: av.data.iter().map(|&x| f(x)).collect(),
        };
        self.push(out, op)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, f64::tanh, Op::Tanh(a))
    }

    /// Softmax over a vector, computed with max subtraction.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        if av.shape.len() != 1 {
            return Err(mismatch("softmax", av, av));
        }
        let max = av.data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = av.data.iter().map(|&x| (x - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let out = Tensor::vector(exps.into_iter().map(|e| e / total).collect());
        Ok(self.push(out, Op::Softmax(a)))
    }

    /// Elementwise maximum of two tensors. The gradient goes to the larger
    /// input; ties go to `a`.
    pub fn maximum(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape != bv.shape {
            return Err(mismatch("maximum", av, bv));
        }
        let data = av
            .data
            .iter()
            .zip(&bv.data)
            .map(|(&x, &y)| if x >= y { x } else { y })
            .collect();
        let out = Tensor {
            shape: av.shape.clone(),
            data,
        };
        Ok(self.push(out, Op::Maximum(a, b)))
    }

    /// Mean of a matrix along `axis` (0 averages rows together, 1 averages
    /// within each row).
    pub fn mean(&mut self, a: Var, axis: usize) -> Result<Var> {
        let av = self.value(a);
        if av.shape.len() != 2 {
            return Err(mismatch("mean", av, av));
        }
        let (rows, cols) = (av.rows(), av.cols());
        let data = match axis {
            0 => (0..cols)
                .map(|c| (0..rows).map(|r| av.data[r * cols + c]).sum::<f64>() / rows as f64)
                .collect(),
            1 => (0..rows)
                .map(|r| av.row(r).iter().sum::<f64>() / cols as f64)
                .collect(),
            _ => return Err(AutodiffError::InvalidAxis(axis)),
        };
        Ok(self.push(Tensor::vector(data), Op::Mean { input: a, axis }))
    }

    /// `Σ_t weights[t] · rows[t, :]` for a weight vector of length T and a
    /// `[T, D]` matrix.
    pub fn weighted_sum(&mut self, weights: Var, rows: Var) -> Result<Var> {
        let (wv, mv) = (self.value(weights), self.value(rows));
        if wv.shape.len() != 1 || mv.shape.len() != 2 || wv.len() != mv.rows() {
            return Err(mismatch("weighted_sum", wv, mv));
        }
        let cols = mv.cols();
        let mut data = vec![0.0; cols];
        for (t, &w) in wv.data.iter().enumerate() {
            for (o, &x) in data.iter_mut().zip(mv.row(t)) {
                *o += w * x;
            }
        }
        Ok(self.push(Tensor::vector(data), Op::WeightedSum { weights, rows }))
    }

    /// Inverted dropout. With `train` off (or a zero rate) this is the
    /// identity and records nothing.
    pub fn dropout<R: Rng + ?Sized>(
        &mut self,
        a: Var,
        rate: f64,
        train: bool,
        rng: &mut R,
    ) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(AutodiffError::InvalidRate(rate));
        }
        if !train || rate == 0.0 {
            return Ok(a);
        }
        let keep = 1.0 - rate;
        let av = self.value(a);
        let mask: Vec<f64> = (0..av.len())
            .map(|_| {
                if rng.gen::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
            .collect();
        let out = Tensor {
            shape: av.shape.clone(),
            data: av.data.iter().zip(&mask).map(|(x, m)| x * m).collect(),
        };
        Ok(self.push(out, Op::Dropout { input: a, mask }))
    }

    /// `-[y ln p + (1-y) ln(1-p)]` with `p` clipped to
    /// `[PROB_CLIP, 1 - PROB_CLIP]`.
    pub fn binary_cross_entropy(&mut self, prob: Var, label: f64) -> Result<Var> {
        let pv = self.value(prob);
        if pv.len() != 1 {
            return Err(AutodiffError::NonScalarLoss(pv.shape.clone()));
        }
        let p = pv.item().clamp(PROB_CLIP, 1.0 - PROB_CLIP);
        let loss = -(label * p.ln() + (1.0 - label) * (1.0 - p).ln());
        Ok(self.push(Tensor::scalar(loss), Op::BinaryCrossEntropy { prob, label }))
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(AutodiffError::NonScalarLoss(lv.shape.clone()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    match (av.shape.as_slice(), bv.shape.as_slice()) {
                        (&[m, k], &[_, n]) => {
                            let ga = accumulate(&mut grads[a.0], m * k);
                            for i in 0..m {
                                for p in 0..k {
                                    let mut s = 0.0;
                                    for j in 0..n {
                                        s += g[i * n + j] * bv.data[p * n + j];
                                    }
                                    ga[i * k + p] += s;
                                }
                            }
                            let gb = accumulate(&mut grads[b.0], k * n);
                            for i in 0..m {
                                for p in 0..k {
                                    let x = av.data[i * k + p];
                                    for j in 0..n {
                                        gb[p * n + j] += x * g[i * n + j];
                                    }
                                }
                            }
                        }
                        (&[m, k], &[_]) => {
                            let ga = accumulate(&mut grads[a.0], m * k);
                            for (row, gi) in ga.chunks_mut(k).zip(g.iter()) {
                                for (gp, b) in row.iter_mut().zip(&bv.data) {
                                    *gp += gi * b;
                                }
                            }
                            let gb = accumulate(&mut grads[b.0], k);
                            for (row, gi) in av.data.chunks(k).zip(g.iter()) {
                                for (gp, a) in gb.iter_mut().zip(row) {
                                    *gp += a * gi;
                                }
                            }
                        }
                        (&[k], _) => {
                            let ga = accumulate(&mut grads[a.0], k);
                            for (gp, b) in ga.iter_mut().zip(&bv.data) {
                                *gp += g[0] * b;
                            }
                            let gb = accumulate(&mut grads[b.0], k);
                            for (gp, a) in gb.iter_mut().zip(&av.data) {
                                *gp += g[0] * a;
                            }
                        }
                        _ => unreachable!("matmul shapes validated on the forward pass"),
                    }
                }
                Op::Add(a, b) => {
                    for v in [a, b] {
                        let gv = accumulate(&mut grads[v.0], g.len());
                        for (o, x) in gv.iter_mut().zip(&g) {
                            *o += x;
                        }
                    }
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&self.value(*a).data, &self.value(*b).data);
                    let ga = accumulate(&mut grads[a.0], g.len());
                    for i in 0..g.len() {
                        ga[i] += g[i] * bv[i];
                    }
                    let gb = accumulate(&mut grads[b.0], g.len());
                    for i in 0..g.len() {
                        gb[i] += g[i] * av[i];
                    }
                }
                Op::Concat(parts) | Op::StackRows(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let len = self.value(*p).len();
                        let gp = accumulate(&mut grads[p.0], len);
                        for (o, x) in gp.iter_mut().zip(&g[offset..offset + len]) {
                            *o += x;
                        }
                        offset += len;
                    }
                }
                Op::Row(m, index) => {
                    let mv = self.value(*m);
                    let cols = mv.cols();
                    let gm = accumulate(&mut grads[m.0], mv.len());
                    for (o, x) in gm[index * cols..(index + 1) * cols].iter_mut().zip(&g) {
                        *o += x;
                    }
                }
                Op::Sigmoid(a) => {
                    let y = &node.value.data;
                    let ga = accumulate(&mut grads[a.0], g.len());
                    for i in 0..g.len() {
                        ga[i] += g[i] * y[i] * (1.0 - y[i]);
                    }
                }
                Op::Tanh(a) => {
                    let y = &node.value.data;
                    let ga = accumulate(&mut grads[a.0], g.len());
                    for i in 0..g.len() {
                        ga[i] += g[i] * (1.0 - y[i] * y[i]);
                    }
                }
                Op::Softmax(a) => {
                    let y = &node.value.data;
                    let dot: f64 = g.iter().zip(y).map(|(gi, yi)| gi * yi).sum();
                    let ga = accumulate(&mut grads[a.0], g.len());
                    for i in 0..g.len() {
                        ga[i] += y[i] * (g[i] - dot);
                    }
                }
                Op::Maximum(a, b) => {
                    let (av, bv) = (&self.value(*a).data, &self.value(*b).data);
                    let to_a: Vec<bool> = av.iter().zip(bv).map(|(x, y)| x >= y).collect();
                    let ga = accumulate(&mut grads[a.0], g.len());
                    for i in 0..g.len() {
                        if to_a[i] {
                            ga[i] += g[i];
                        }
                    }
                    let gb = accumulate(&mut grads[b.0], g.len());
                    for i in 0..g.len() {
                        if !to_a[i] {
                            gb[i] += g[i];
                        }
                    }
                }
                Op::Mean { input, axis } => {
                    let iv = self.value(*input);
                    let (rows, cols) = (iv.rows(), iv.cols());
                    let gi = accumulate(&mut grads[input.0], rows * cols);
                    for r in 0..rows {
                        for c in 0..cols {
                            gi[r * cols + c] += if *axis == 0 {
                                g[c] / rows as f64
                            } else {
                                g[r] / cols as f64
                            };
                        }
                    }
                }
                Op::WeightedSum { weights, rows } => {
                    let (wv, mv) = (self.value(*weights), self.value(*rows));
                    let cols = mv.cols();
                    let gw = accumulate(&mut grads[weights.0], wv.len());
                    for (t, o) in gw.iter_mut().enumerate() {
                        *o += mv.row(t).iter().zip(&g).map(|(x, y)| x * y).sum::<f64>();
                    }
                    let gm = accumulate(&mut grads[rows.0], mv.len());
                    for (t, &w) in wv.data.iter().enumerate() {
                        for c in 0..cols {
                            gm[t * cols + c] += w * g[c];
                        }
                    }
                }
                Op::Dropout { input, mask } => {
                    let gi = accumulate(&mut grads[input.0], g.len());
                    for i in 0..g.len() {
                        gi[i] += g[i] * mask[i];
                    }
                }
                Op::BinaryCrossEntropy { prob, label } => {
                    let p = self.value(*prob).item().clamp(PROB_CLIP, 1.0 - PROB_CLIP);
                    let d = -label / p + (1.0 - label) / (1.0 - p);
                    accumulate(&mut grads[prob.0], 1)[0] += g[0] * d;
                }
            }
            // Keep leaf gradients for the caller; interior ones were consumed.
            if matches!(node.op, Op::Leaf) {
                grads[idx] = Some(g);
            }
        }

        Ok(Gradients {
            grads,
            shapes: self.nodes.iter().map(|n| n.value.shape.clone()).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn sigmoid_of_zero_is_half() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::scalar(0.0));
        let y = tape.sigmoid(x);
        assert_eq!(tape.value(y).item(), 0.5);
    }

    #[test]
    fn softmax_hand_values() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::vector(vec![2f64.ln(), 0.0, 0.0]));
        let y = tape.softmax(x).unwrap();
        let v = tape.value(y).data();
        for (got, want) in v.iter().zip([0.5, 0.25, 0.25]) {
            assert!(close(*got, want, 1e-15));
        }
    }

    #[test]
    fn eval_dropout_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::vector(vec![1.0, -2.0, 3.0]));
        let y = tape.dropout(x, 0.5, false, &mut rng).unwrap();
        assert_eq!(x, y);
        assert_eq!(tape.len(), 1);
    }

    #[test]
    fn train_dropout_scales_kept_units() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::vector(vec![1.0; 200]));
        let y = tape.dropout(x, 0.25, true, &mut rng).unwrap();
        let out = tape.value(y).data();
        assert!(out.iter().all(|&v| v == 0.0 || close(v, 1.0 / 0.75, 1e-15)));
        assert!(out.contains(&0.0));
    }

    #[test]
    fn dropout_rate_must_be_below_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::scalar(1.0));
        assert_eq!(
            tape.dropout(x, 1.0, true, &mut rng),
            Err(AutodiffError::InvalidRate(1.0))
        );
    }

    #[test]
    fn shape_mismatch_names_both_shapes() {
        let mut tape = Tape::new();
        let a = tape.leaf(Tensor::vector(vec![1.0, 2.0]));
        let b = tape.leaf(Tensor::vector(vec![1.0, 2.0, 3.0]));
        let err = tape.add(a, b).unwrap_err();
        assert_eq!(err.to_string(), "shape mismatch in add: [2] vs [3]");
    }

    #[test]
    fn dot_product_gradient_is_other_operand() {
        let mut tape = Tape::new();
        let w = tape.leaf(Tensor::vector(vec![0.3, -1.0, 2.0]));
        let x = tape.leaf(Tensor::vector(vec![4.0, 5.0, 6.0]));
        let loss = tape.matmul(w, x).unwrap();
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.wrt(w).data(), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn tanh_derivative() {
        let c = 0.7f64;
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::scalar(c));
        let y = tape.tanh(x);
        let grads = tape.backward(y).unwrap();
        assert!(close(grads.wrt(x).item(), 1.0 - c.tanh().powi(2), 1e-15));
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::vector(vec![1.0, 2.0]));
        assert_eq!(
            tape.backward(x).unwrap_err(),
            AutodiffError::NonScalarLoss(vec![2])
        );
    }

    #[test]
    fn maximum_ties_route_to_first_argument() {
        let mut tape = Tape::new();
        let a = tape.leaf(Tensor::vector(vec![1.0, 2.0]));
        let b = tape.leaf(Tensor::vector(vec![1.0, 3.0]));
        let m = tape.maximum(a, b).unwrap();
        let ones = tape.leaf(Tensor::vector(vec![1.0, 1.0]));
        let loss = tape.matmul(m, ones).unwrap();
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.wrt(a).data(), &[1.0, 0.0]);
        assert_eq!(grads.wrt(b).data(), &[0.0, 1.0]);
    }

    #[test]
    fn shared_subexpression_sums_paths() {
        // loss = s·s where s = sigmoid(x); d/dx = 2 s s' summed over both uses.
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::scalar(0.4));
        let s = tape.sigmoid(x);
        let loss = tape.mul(s, s).unwrap();
        let grads = tape.backward(loss).unwrap();
        let sv = 1.0 / (1.0 + (-0.4f64).exp());
        assert!(close(grads.wrt(x).item(), 2.0 * sv * sv * (1.0 - sv), 1e-15));
    }

    #[test]
    fn bce_matches_direct_evaluation() {
        let mut tape = Tape::new();
        let p = tape.leaf(Tensor::scalar(0.9));
        let loss = tape.binary_cross_entropy(p, 0.0).unwrap();
        assert!(close(tape.value(loss).item(), std::f64::consts::LN_10, 1e-12));
    }

    #[test]
    fn mean_axis_one() {
        let mut tape = Tape::new();
        let m = tape.leaf(Tensor::matrix(2, 2, vec![1.0, 3.0, 5.0, 9.0]).unwrap());
        let r = tape.mean(m, 1).unwrap();
        assert_eq!(tape.value(r).data(), &[2.0, 7.0]);
        assert_eq!(tape.mean(m, 2), Err(AutodiffError::InvalidAxis(2)));
    }
}
