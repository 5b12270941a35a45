//! Reverse-mode automatic differentiation on a flat tape.
//!
//! Nodes are appended in forward order, so parents always precede children
//! and the backward sweep is a single reverse walk — no explicit topological
//! sort. A node carries its value, a lazily allocated cotangent of the same
//! shape, and the op record needed to push gradients to its parents. Nodes
//! whose ancestors are all constants are skipped entirely: marking the input
//! frames as non-differentiable leaves is what keeps training from paying
//! for input gradients it never uses.

use crate::conv::{conv_bwd_frames, conv_bwd_params, conv_fwd, pool_bwd, pool_fwd, PoolConfig};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{matmul_acc, matmul_at_acc, matmul_bt_acc, Real, Tensor};

/// Handle to a tape node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

enum Op<R: Real> {
    Leaf,
    Matmul {
        a: NodeId,
        b: NodeId,
    },
    /// x[r,c] + bias[r] broadcast along columns (conv bias).
    AddBiasRows {
        x: NodeId,
        bias: NodeId,
    },
    /// x[r,c] + bias[c] broadcast along rows (batched FC bias).
    AddBiasCols {
        x: NodeId,
        bias: NodeId,
    },
    Relu {
        x: NodeId,
    },
    /// mask holds 0 or 1/(1-rate); value = x .* mask.
    Dropout {
        x: NodeId,
        mask: Vec<R>,
    },
    Conv {
        frames: NodeId,
        weights: NodeId,
        bias: NodeId,
        words_per_window: usize,
    },
    MaxOverTime {
        x: NodeId,
        argmax: Vec<u32>,
    },
    /// Each part contributes its flattened data as one row.
    ConcatRows {
        parts: Vec<NodeId>,
    },
    SoftmaxCrossEntropy {
        logits: NodeId,
        labels: Vec<usize>,
        softmax: Tensor<R>,
    },
}

struct Node<R: Real> {
    value: Tensor<R>,
    grad: Option<Tensor<R>>,
    requires_grad: bool,
    op: Op<R>,
}

/// Computation tape; one per forward/backward pass.
pub struct Tape<R: Real> {
    nodes: Vec<Node<R>>,
}

impl<R: Real> Default for Tape<R> {
    fn default() -> Self {
        Self::new()
    }
}

impl<R: Real> Tape<R> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn value(&self, id: NodeId) -> &Tensor<R> {
        &self.nodes[id.0].value
    }

    /// Accumulated gradient, present after `backward` for nodes that require
    /// gradients and received any.
    pub fn grad(&self, id: NodeId) -> Option<&Tensor<R>> {
        self.nodes[id.0].grad.as_ref()
    }

    fn push(&mut self, value: Tensor<R>, requires_grad: bool, op: Op<R>) -> NodeId {
        self.nodes.push(Node {
            value,
            grad: None,
            requires_grad,
            op,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    /// Differentiable input (parameters) or constant input (data).
    pub fn leaf(&mut self, value: Tensor<R>, requires_grad: bool) -> NodeId {
        self.push(value, requires_grad, Op::Leaf)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape().len() != 2 || bv.shape().len() != 2 || av.cols() != bv.rows() {
            return Err(Error::shape(format!(
                "matmul {:?} x {:?}",
                av.shape(),
                bv.shape()
            )));
        }
        let (m, k, p) = (av.rows(), av.cols(), bv.cols());
        let mut out = vec![R::ZERO; m * p];
        matmul_acc(av.data(), bv.data(), &mut out, m, k, p);
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(Tensor::from_vec(&[m, p], out)?, rg, Op::Matmul { a, b }))
    }

    pub fn add_bias_rows(&mut self, x: NodeId, bias: NodeId) -> Result<NodeId> {
        let (xv, bv) = (self.value(x), self.value(bias));
        if bv.numel() != xv.rows() {
            return Err(Error::shape(format!(
                "row bias {:?} on {:?}",
                bv.shape(),
                xv.shape()
            )));
        }
        let cols = xv.cols();
        let mut out = xv.clone();
        for (r, row) in out.data_mut().chunks_exact_mut(cols).enumerate() {
            let b = self.value(bias).data()[r];
            row.iter_mut().for_each(|v| *v += b);
        }
        let rg = self.needs(x) || self.needs(bias);
        Ok(self.push(out, rg, Op::AddBiasRows { x, bias }))
    }

    pub fn add_bias_cols(&mut self, x: NodeId, bias: NodeId) -> Result<NodeId> {
        let (xv, bv) = (self.value(x), self.value(bias));
        if bv.numel() != xv.cols() {
            return Err(Error::shape(format!(
                "column bias {:?} on {:?}",
                bv.shape(),
                xv.shape()
            )));
        }
        let cols = xv.cols();
        let mut out = xv.clone();
        for row in out.data_mut().chunks_exact_mut(cols) {
            for (v, b) in row.iter_mut().zip(self.value(bias).data()) {
                *v += *b;
            }
        }
        let rg = self.needs(x) || self.needs(bias);
        Ok(self.push(out, rg, Op::AddBiasCols { x, bias }))
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let out = self.value(x).map(|v| v.maximum(R::ZERO));
        let rg = self.needs(x);
        self.push(out, rg, Op::Relu { x })
    }

    /// Inverted dropout: zero with probability `rate`, scale survivors by
    /// 1/(1-rate). Identity when not training or rate is zero; inference is
    /// then a pure linear pass with no rescaling.
    pub fn dropout(&mut self, x: NodeId, rate: f64, training: bool, rng: &mut Rng) -> NodeId {
        assert!((0.0..1.0).contains(&rate), "dropout rate {rate}");
        if !training || rate == 0.0 {
            return x;
        }
        let keep_scale = R::from_f64(1.0 / (1.0 - rate));
        let mask: Vec<R> = (0..self.value(x).numel())
            .map(|_| {
                if rng.next_f64() < rate {
                    R::ZERO
                } else {
                    keep_scale
                }
            })
            .collect();
        let xv = self.value(x);
        let data: Vec<R> = xv.data().iter().zip(&mask).map(|(&v, &m)| v * m).collect();
        let out = Tensor::from_vec(xv.shape(), data).expect("mask matches shape");
        let rg = self.needs(x);
        self.push(out, rg, Op::Dropout { x, mask })
    }

    /// n-gram convolution: frames [len, pix], weights covering
    /// `words_per_window` frames per kernel, bias per kernel. Output [k, T].
    pub fn conv(
        &mut self,
        frames: NodeId,
        weights: NodeId,
        bias: NodeId,
        words_per_window: usize,
    ) -> Result<NodeId> {
        let out = conv_fwd(
            self.value(frames),
            self.value(weights),
            self.value(bias),
            words_per_window,
        )?;
        let rg = self.needs(frames) || self.needs(weights) || self.needs(bias);
        Ok(self.push(
            out,
            rg,
            Op::Conv {
                frames,
                weights,
                bias,
                words_per_window,
            },
        ))
    }

    pub fn max_over_time(&mut self, x: NodeId, cfg: &PoolConfig) -> Result<NodeId> {
        let (pooled, argmax) = pool_fwd(self.value(x), cfg)?;
        let rg = self.needs(x);
        Ok(self.push(pooled, rg, Op::MaxOverTime { x, argmax }))
    }

    /// Stack each part's flattened data as one row of a [B, numel] matrix.
    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::shape("concat_rows of zero parts"));
        }
        let width = self.value(parts[0]).numel();
        let mut data = Vec::with_capacity(parts.len() * width);
        let mut rg = false;
        for &p in parts {
            if self.value(p).numel() != width {
                return Err(Error::shape(format!(
                    "concat_rows: {} elements vs {}",
                    self.value(p).numel(),
                    width
                )));
            }
            data.extend_from_slice(self.value(p).data());
            rg |= self.needs(p);
        }
        Ok(self.push(
            Tensor::from_vec(&[parts.len(), width], data)?,
            rg,
            Op::ConcatRows {
                parts: parts.to_vec(),
            },
        ))
    }

    /// Mean over the batch of -log softmax(logits)[label], computed with
    /// max subtraction. Output is a scalar node.
    pub fn softmax_cross_entropy(&mut self, logits: NodeId, labels: &[usize]) -> Result<NodeId> {
        let lv = self.value(logits);
        if lv.shape().len() != 2 || lv.rows() != labels.len() {
            return Err(Error::shape(format!(
                "logits {:?} vs {} labels",
                lv.shape(),
                labels.len()
            )));
        }
        let (b, c) = (lv.rows(), lv.cols());
        for &label in labels {
            if label >= c {
                return Err(Error::LabelOutOfRange {
                    label: label as i64,
                    num_classes: c,
                });
            }
        }
        let mut softmax = vec![R::ZERO; b * c];
        let mut loss = R::ZERO;
        for (i, row) in lv.data().chunks_exact(c).enumerate() {
            let mut maxv = row[0];
            for &v in row {
                maxv = maxv.maximum(v);
            }
            let mut sum = R::ZERO;
            for (j, &v) in row.iter().enumerate() {
                let e = (v - maxv).exp();
                softmax[i * c + j] = e;
                sum += e;
            }
            for j in 0..c {
                softmax[i * c + j] = softmax[i * c + j] / sum;
            }
            loss += sum.ln() - (row[labels[i]] - maxv);
        }
        loss = loss / R::from_f64(b as f64);
        let rg = self.needs(logits);
        Ok(self.push(
            Tensor::scalar(loss),
            rg,
            Op::SoftmaxCrossEntropy {
                logits,
                labels: labels.to_vec(),
                softmax: Tensor::from_vec(&[b, c], softmax)?,
            },
        ))
    }

    /// Reverse sweep from `out`, seeding its cotangent with ones (so for a
    /// non-scalar node this differentiates the sum of its entries).
    pub fn backward(&mut self, out: NodeId) {
        {
            let node = &mut self.nodes[out.0];
            assert!(node.requires_grad, "backward from a constant node");
            let mut seed = Tensor::zeros(node.value.shape());
            seed.fill(R::ONE);
            node.grad = Some(seed);
        }
        for id in (0..=out.0).rev() {
            if !self.nodes[id].requires_grad || self.nodes[id].grad.is_none() {
                continue;
            }
            let deltas = self.parent_deltas(id);
            for (pid, delta) in deltas {
                self.accumulate(pid, delta);
            }
        }
    }

    fn accumulate(&mut self, id: NodeId, delta: Tensor<R>) {
        let node = &mut self.nodes[id.0];
        if !node.requires_grad {
            return;
        }
        match &mut node.grad {
            Some(g) => g.add_assign_checked(&delta).expect("delta shape"),
            slot => *slot = Some(delta),
        }
    }

    /// Gradient contributions of node `id` to each differentiable parent.
    fn parent_deltas(&self, id: usize) -> Vec<(NodeId, Tensor<R>)> {
        let node = &self.nodes[id];
        let grad = node.grad.as_ref().expect("checked by backward");
        let mut out = Vec::new();
        match &node.op {
            Op::Leaf => {}
            Op::Matmul { a, b } => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (m, k, p) = (av.rows(), av.cols(), bv.cols());
                if self.needs(*a) {
                    // da = grad @ b^T
                    let mut da = Tensor::zeros(av.shape());
                    matmul_bt_acc(grad.data(), bv.data(), da.data_mut(), m, p, k);
                    out.push((*a, da));
                }
                if self.needs(*b) {
                    // db = a^T @ grad
                    let mut db = Tensor::zeros(bv.shape());
                    matmul_at_acc(av.data(), grad.data(), db.data_mut(), k, m, p);
                    out.push((*b, db));
                }
            }
            Op::AddBiasRows { x, bias } => {
                if self.needs(*x) {
                    out.push((*x, grad.clone()));
                }
                if self.needs(*bias) {
                    let cols = grad.cols();
                    let mut db = Tensor::zeros(self.value(*bias).shape());
                    for (r, row) in grad.data().chunks_exact(cols).enumerate() {
                        let mut s = R::ZERO;
                        for &g in row {
                            s += g;
                        }
                        db.data_mut()[r] += s;
                    }
                    out.push((*bias, db));
                }
            }
            Op::AddBiasCols { x, bias } => {
                if self.needs(*x) {
                    out.push((*x, grad.clone()));
                }
                if self.needs(*bias) {
                    let cols = grad.cols();
                    let mut db = Tensor::zeros(self.value(*bias).shape());
                    for row in grad.data().chunks_exact(cols) {
                        for (d, &g) in db.data_mut().iter_mut().zip(row) {
                            *d += g;
                        }
                    }
                    out.push((*bias, db));
                }
            }
            Op::Relu { x } => {
                if self.needs(*x) {
                    let xv = self.value(*x);
                    let data: Vec<R> = xv
                        .data()
                        .iter()
                        .zip(grad.data())
                        .map(|(&v, &g)| if v > R::ZERO { g } else { R::ZERO })
                        .collect();
                    out.push((*x, Tensor::from_vec(xv.shape(), data).unwrap()));
                }
            }
            Op::Dropout { x, mask } => {
                if self.needs(*x) {
                    let data: Vec<R> = grad.data().iter().zip(mask).map(|(&g, &m)| g * m).collect();
                    out.push((*x, Tensor::from_vec(grad.shape(), data).unwrap()));
                }
            }
            Op::Conv {
                frames,
                weights,
                bias,
                words_per_window,
            } => {
                let fv = self.value(*frames);
                if self.needs(*weights) || self.needs(*bias) {
                    let mut dw = Tensor::zeros(self.value(*weights).shape());
                    let mut db = Tensor::zeros(self.value(*bias).shape());
                    conv_bwd_params(grad, fv, *words_per_window, dw.data_mut(), db.data_mut());
                    if self.needs(*weights) {
                        out.push((*weights, dw));
                    }
                    if self.needs(*bias) {
                        out.push((*bias, db));
                    }
                }
                if self.needs(*frames) {
                    let mut df = Tensor::zeros(fv.shape());
                    conv_bwd_frames(
                        grad,
                        self.value(*weights),
                        *words_per_window,
                        fv.cols(),
                        df.data_mut(),
                    );
                    out.push((*frames, df));
                }
            }
            Op::MaxOverTime { x, argmax } => {
                if self.needs(*x) {
                    let xv = self.value(*x);
                    let mut dx = Tensor::zeros(xv.shape());
                    pool_bwd(grad, argmax, xv.cols(), dx.data_mut());
                    out.push((*x, dx));
                }
            }
            Op::ConcatRows { parts } => {
                let width = grad.cols();
                for (r, &p) in parts.iter().enumerate() {
                    if self.needs(p) {
                        let slice = grad.data()[r * width..(r + 1) * width].to_vec();
                        out.push((p, Tensor::from_vec(self.value(p).shape(), slice).unwrap()));
                    }
                }
            }
            Op::SoftmaxCrossEntropy {
                logits,
                labels,
                softmax,
            } => {
                if self.needs(*logits) {
                    // d logits = (softmax - onehot) * upstream / B
                    let g = grad.data()[0] / R::from_f64(labels.len() as f64);
                    let c = softmax.cols();
                    let mut dl = softmax.map(|v| v * g);
                    for (i, &label) in labels.iter().enumerate() {
                        dl.data_mut()[i * c + label] -= g;
                    }
                    out.push((*logits, dl));
                }
            }
        }
        out
    }
}

/// Compare an analytic gradient against central finite differences
/// (f(x+h e_i) - f(x-h e_i)) / 2h over every coordinate of `x`. Returns the
/// max of |a-n| / max(|a|, |n|, 1e-8).
pub fn grad_check<R: Real>(
    mut f: impl FnMut(&Tensor<R>) -> R,
    x: &Tensor<R>,
    analytic: &Tensor<R>,
    h: f64,
) -> f64 {
    assert!(h > 0.0, "step must be positive");
    assert_eq!(x.shape(), analytic.shape(), "gradient shape mismatch");
    let mut max_err = 0.0f64;
    let mut probe = x.clone();
    for i in 0..x.numel() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + R::from_f64(h);
        let up = f(&probe).to_f64();
        probe.data_mut()[i] = orig - R::from_f64(h);
        let down = f(&probe).to_f64();
        probe.data_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let a = analytic.data()[i].to_f64();
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        max_err = max_err.max(err);
    }
    max_err
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random_tensor<R: Real>(shape: &[usize], rng: &mut Rng, scale: f64) -> Tensor<R> {
        let n = shape.iter().product();
        let data = (0..n)
            .map(|_| R::from_f64(rng.uniform_symmetric(scale)))
            .collect();
        Tensor::from_vec(shape, data).unwrap()
    }

    /// Sum of all entries of (a @ b) and its gradient wrt one input.
    fn matmul_sum_and_grad(a: &Tensor<f32>, b: &Tensor<f32>, wrt_a: bool) -> (f32, Tensor<f32>) {
        let mut tape = Tape::new();
        let na = tape.leaf(a.clone(), wrt_a);
        let nb = tape.leaf(b.clone(), !wrt_a);
        let mm = tape.matmul(na, nb).unwrap();
        let total: f32 = tape.value(mm).data().iter().sum();
        tape.backward(mm);
        let g = tape.grad(if wrt_a { na } else { nb }).unwrap().clone();
        (total, g)
    }

    #[test]
    fn matmul_gradients_match_finite_differences() {
        let mut rng = Rng::new(21);
        let a: Tensor<f32> = random_tensor(&[4, 5], &mut rng, 1.0);
        let b: Tensor<f32> = random_tensor(&[5, 6], &mut rng, 1.0);

        let (_, ga) = matmul_sum_and_grad(&a, &b, true);
        let err_a = grad_check(|t| matmul_sum_and_grad(t, &b, true).0, &a, &ga, 1e-3);
        assert!(err_a < 1e-3, "matmul wrt a: {err_a}");

        let (_, gb) = matmul_sum_and_grad(&a, &b, false);
        let err_b = grad_check(|t| matmul_sum_and_grad(&a, t, false).0, &b, &gb, 1e-3);
        assert!(err_b < 1e-3, "matmul wrt b: {err_b}");
    }

    #[test]
    fn matmul_rejects_mismatched_shapes() {
        let mut tape: Tape<f32> = Tape::new();
        let a = tape.leaf(Tensor::zeros(&[2, 3]), true);
        let b = tape.leaf(Tensor::zeros(&[4, 5]), true);
        assert!(matches!(tape.matmul(a, b), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn relu_values_and_gradient() {
        let mut tape: Tape<f32> = Tape::new();
        let x = tape.leaf(Tensor::from_vec(&[3], vec![-1.0, 0.0, 2.0]).unwrap(), true);
        let y = tape.relu(x);
        assert_eq!(tape.value(y).data(), &[0.0, 0.0, 2.0]);
        tape.backward(y);
        // Subgradient at 0 is 0.
        assert_eq!(tape.grad(x).unwrap().data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn relu_all_negative_gives_zero_output_and_gradient() {
        let mut tape: Tape<f32> = Tape::new();
        let x = tape.leaf(
            Tensor::from_vec(&[4], vec![-3.0, -0.5, -2.0, -0.1]).unwrap(),
            true,
        );
        let y = tape.relu(x);
        assert!(tape.value(y).data().iter().all(|&v| v == 0.0));
        tape.backward(y);
        assert!(tape.grad(x).unwrap().data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn relu_gradcheck_away_from_zero() {
        // Coordinates are kept out of (-1e-4, 1e-4) where the kink lives.
        let mut rng = Rng::new(22);
        let data: Vec<f32> = (0..24)
            .map(|_| {
                let v = 0.1 + rng.next_f64() * 0.9;
                if rng.next_f64() < 0.5 {
                    -v as f32
                } else {
                    v as f32
                }
            })
            .collect();
        let x = Tensor::from_vec(&[4, 6], data).unwrap();
        let run = |t: &Tensor<f32>| {
            let mut tape = Tape::new();
            let n = tape.leaf(t.clone(), true);
            let y = tape.relu(n);
            let s: f32 = tape.value(y).data().iter().sum();
            (s, n, tape, y)
        };
        let (_, n, mut tape, y) = run(&x);
        tape.backward(y);
        let analytic = tape.grad(n).unwrap().clone();
        let err = grad_check(|t| run(t).0, &x, &analytic, 1e-3);
        assert!(err < 1e-3, "relu gradcheck: {err}");
    }

    #[test]
    fn dropout_identity_cases() {
        let mut rng = Rng::new(23);
        let x: Tensor<f32> = random_tensor(&[5, 7], &mut rng, 1.0);
        let mut tape = Tape::new();
        let n = tape.leaf(x.clone(), false);
        let zero_rate = tape.dropout(n, 0.0, true, &mut rng);
        assert_eq!(tape.value(zero_rate), &x);
        let inference = tape.dropout(n, 0.5, false, &mut rng);
        assert_eq!(tape.value(inference), &x);
    }

    #[test]
    fn dropout_survivor_fraction_and_mean() {
        let n = 100_000;
        let x = Tensor::from_vec(&[n], vec![1.0f32; n]).unwrap();
        let mut rng = Rng::new(24);
        let mut tape = Tape::new();
        let leaf = tape.leaf(x, false);
        let y = tape.dropout(leaf, 0.5, true, &mut rng);
        let out = tape.value(y).data();
        let survivors = out.iter().filter(|&&v| v != 0.0).count() as f64 / n as f64;
        assert!(
            (survivors - 0.5).abs() < 0.01,
            "survivor fraction {survivors}"
        );
        // Inverted scaling keeps the expectation: mean of output ~ mean input.
        let mean: f64 = out.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
        // Survivors carry exactly the 1/(1-rate) scale.
        assert!(out.iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn dropout_mask_replays_per_seed() {
        let x = Tensor::from_vec(&[64], vec![1.0f32; 64]).unwrap();
        let run = |seed: u64| {
            let mut rng = Rng::new(seed);
            let mut tape = Tape::new();
            let leaf = tape.leaf(x.clone(), false);
            let y = tape.dropout(leaf, 0.3, true, &mut rng);
            tape.value(y).data().to_vec()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn softmax_ce_uniform_logits_is_ln_c() {
        let mut tape: Tape<f64> = Tape::new();
        let logits = tape.leaf(Tensor::zeros(&[3, 4]), true);
        let loss = tape.softmax_cross_entropy(logits, &[0, 1, 3]).unwrap();
        let got = tape.value(loss).data()[0];
        assert!((got - 4.0f64.ln()).abs() < 1e-12, "loss {got}");
    }

    #[test]
    fn softmax_ce_large_margin_drives_loss_to_zero() {
        let mut tape: Tape<f32> = Tape::new();
        let mut logits = Tensor::zeros(&[1, 4]);
        logits.data_mut()[2] = 50.0;
        let n = tape.leaf(logits, true);
        let loss = tape.softmax_cross_entropy(n, &[2]).unwrap();
        assert!(tape.value(loss).data()[0] < 1e-6);
    }

    #[test]
    fn softmax_ce_rejects_out_of_range_label() {
        let mut tape: Tape<f32> = Tape::new();
        let logits = tape.leaf(Tensor::zeros(&[2, 3]), true);
        assert!(matches!(
            tape.softmax_cross_entropy(logits, &[0, 3]),
            Err(Error::LabelOutOfRange { .. })
        ));
    }

    fn ce_loss<R: Real>(t: &Tensor<R>, labels: &[usize]) -> R {
        let mut tape = Tape::new();
        let n = tape.leaf(t.clone(), true);
        let loss = tape.softmax_cross_entropy(n, labels).unwrap();
        tape.value(loss).data()[0]
    }

    #[test]
    fn softmax_ce_gradient_rows_sum_to_zero_and_pass_gradcheck() {
        let mut rng = Rng::new(25);
        let logits: Tensor<f32> = random_tensor(&[3, 5], &mut rng, 2.0);
        let labels = [1usize, 4, 0];
        let mut tape = Tape::new();
        let n = tape.leaf(logits.clone(), true);
        let loss = tape.softmax_cross_entropy(n, &labels).unwrap();
        tape.backward(loss);
        let analytic = tape.grad(n).unwrap().clone();
        for row in analytic.data().chunks_exact(5) {
            let s: f32 = row.iter().sum();
            assert!(s.abs() < 1e-6, "row sum {s}");
        }
        // The op and its analytic gradient are 32-bit; the finite-difference
        // oracle runs the same generic op at f64 so its own rounding noise
        // does not drown the comparison.
        let err = grad_check(
            |t: &Tensor<f64>| ce_loss(t, &labels),
            &logits.cast(),
            &analytic.cast(),
            1e-3,
        );
        assert!(err < 1e-3, "softmax ce gradcheck: {err}");
    }

    fn conv_pool_sum<R: Real>(f: &Tensor<R>, w: &Tensor<R>, b: &Tensor<R>, cfg: &PoolConfig) -> R {
        let mut tape = Tape::new();
        let nf = tape.leaf(f.clone(), true);
        let nw = tape.leaf(w.clone(), true);
        let nb = tape.leaf(b.clone(), true);
        let u = tape.conv(nf, nw, nb, 2).unwrap();
        let pooled = tape.max_over_time(u, cfg).unwrap();
        let act = tape.relu(pooled);
        let mut s = R::ZERO;
        for &v in tape.value(act).data() {
            s += v;
        }
        s
    }

    #[test]
    fn conv_and_pool_gradients_pass_gradcheck() {
        // 32-bit op, f64 finite-difference oracle via the same generic code.
        let mut rng = Rng::new(26);
        let frames: Tensor<f32> = random_tensor(&[6, 8], &mut rng, 1.0);
        let weights: Tensor<f32> = random_tensor(&[3, 2, 2, 4], &mut rng, 0.5);
        let bias: Tensor<f32> = random_tensor(&[3], &mut rng, 0.5);
        let cfg = PoolConfig::new(2, 1, 2);

        let mut tape = Tape::new();
        let nf = tape.leaf(frames.clone(), true);
        let nw = tape.leaf(weights.clone(), true);
        let nb = tape.leaf(bias.clone(), true);
        let u = tape.conv(nf, nw, nb, 2).unwrap();
        let pooled = tape.max_over_time(u, &cfg).unwrap();
        let act = tape.relu(pooled);
        tape.backward(act);
        let gf = tape.grad(nf).unwrap().clone();
        let gw = tape.grad(nw).unwrap().clone();
        let gb = tape.grad(nb).unwrap().clone();

        let (f64frames, f64w, f64b) = (frames.cast(), weights.cast(), bias.cast());
        let err_w = grad_check(
            |t: &Tensor<f64>| conv_pool_sum(&f64frames, t, &f64b, &cfg),
            &f64w,
            &gw.cast(),
            1e-3,
        );
        assert!(err_w < 1e-3, "conv weights: {err_w}");
        let err_b = grad_check(
            |t: &Tensor<f64>| conv_pool_sum(&f64frames, &f64w, t, &cfg),
            &f64b,
            &gb.cast(),
            1e-3,
        );
        assert!(err_b < 1e-3, "conv bias: {err_b}");
        let err_f = grad_check(
            |t: &Tensor<f64>| conv_pool_sum(t, &f64w, &f64b, &cfg),
            &f64frames,
            &gf.cast(),
            1e-3,
        );
        assert!(err_f < 1e-3, "conv frames: {err_f}");
    }

    #[test]
    fn constant_frames_receive_no_gradient() {
        let mut rng = Rng::new(27);
        let frames: Tensor<f32> = random_tensor(&[5, 6], &mut rng, 1.0);
        let weights: Tensor<f32> = random_tensor(&[2, 2, 2, 3], &mut rng, 0.5);
        let bias: Tensor<f32> = random_tensor(&[2], &mut rng, 0.5);
        let mut tape = Tape::new();
        let nf = tape.leaf(frames, false);
        let nw = tape.leaf(weights, true);
        let nb = tape.leaf(bias, true);
        let u = tape.conv(nf, nw, nb, 2).unwrap();
        tape.backward(u);
        assert!(tape.grad(nf).is_none());
        assert!(tape.grad(nw).is_some());
    }

    #[test]
    fn concat_rows_splits_gradient_back() {
        let mut tape: Tape<f32> = Tape::new();
        let a = tape.leaf(
            Tensor::from_vec(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap(),
            true,
        );
        let b = tape.leaf(
            Tensor::from_vec(&[2, 2], vec![5.0, 6.0, 7.0, 8.0]).unwrap(),
            true,
        );
        let cat = tape.concat_rows(&[a, b]).unwrap();
        assert_eq!(tape.value(cat).shape(), &[2, 4]);
        tape.backward(cat);
        assert_eq!(tape.grad(a).unwrap().shape(), &[2, 2]);
        assert!(tape.grad(a).unwrap().data().iter().all(|&g| g == 1.0));
        assert!(tape.grad(b).unwrap().data().iter().all(|&g| g == 1.0));
    }

    #[test]
    fn grad_check_accepts_exact_gradients() {
        // f = sum(x): gradient is all ones.
        let mut rng = Rng::new(28);
        let x: Tensor<f64> = random_tensor(&[10], &mut rng, 2.0);
        let mut ones = Tensor::zeros(&[10]);
        ones.fill(1.0);
        let err = grad_check(|t| t.data().iter().sum::<f64>(), &x, &ones, 1e-5);
        assert!(err < 1e-6, "sum: {err}");

        // f = 0.5 * ||x||^2: gradient is x itself.
        let err = grad_check(
            |t| 0.5 * t.data().iter().map(|v| v * v).sum::<f64>(),
            &x,
            &x,
            1e-5,
        );
        assert!(err < 1e-4, "half norm: {err}");
    }

    #[test]
    fn grad_check_flags_a_wrong_gradient() {
        let x: Tensor<f64> = Tensor::from_vec(&[3], vec![1.0, 2.0, 3.0]).unwrap();
        let wrong = Tensor::from_vec(&[3], vec![1.0, 1.0, 2.0]).unwrap();
        let err = grad_check(|t| t.data().iter().sum::<f64>(), &x, &wrong, 1e-5);
        assert!(err > 0.3, "should flag the bad coordinate, got {err}");
    }

    #[test]
    fn composed_ops_pass_gradcheck() {
        // x -> matmul -> bias -> relu -> dropout(off) -> CE, checked wrt the
        // weight matrix with everything else constant.
        let mut rng = Rng::new(29);
        let x: Tensor<f32> = random_tensor(&[2, 4], &mut rng, 1.0);
        let w: Tensor<f32> = random_tensor(&[4, 3], &mut rng, 1.0);
        let b: Tensor<f32> = random_tensor(&[3], &mut rng, 0.5);
        let labels = [2usize, 0];
        let run = |wt: &Tensor<f32>| {
            let mut tape = Tape::new();
            let nx = tape.leaf(x.clone(), false);
            let nw = tape.leaf(wt.clone(), true);
            let nb = tape.leaf(b.clone(), false);
            let h = tape.matmul(nx, nw).unwrap();
            let h = tape.add_bias_cols(h, nb).unwrap();
            let h = tape.relu(h);
            let loss = tape.softmax_cross_entropy(h, &labels).unwrap();
            (tape.value(loss).data()[0], tape, nw, loss)
        };
        let (_, mut tape, nw, loss) = run(&w);
        tape.backward(loss);
        let analytic = tape.grad(nw).unwrap().clone();
        let err = grad_check(|t| run(t).0, &w, &analytic, 1e-3);
        assert!(err < 1e-3, "composed: {err}");
    }
}
