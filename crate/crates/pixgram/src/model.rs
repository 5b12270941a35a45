//! The full classifier: conv n-gram detector, max-over-time pooling, three
//! FC layers; plus the training loop, evaluation, and checkpoint files.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use crate::autodiff::{NodeId, Tape};
use crate::conv::{ConvKernelBank, PoolConfig};
use crate::corpus::{render_frames, tokenize, DatasetSplit, Document, TextVideo};
use crate::error::{Error, Result};
use crate::glyph::GlyphSet;
use crate::optim::{adam_step, AdamState};
use crate::rng::Rng;
use crate::tensor::{Real, Tensor};

/// Checkpoint file magic.
pub const CHECKPOINT_MAGIC: [u8; 4] = *b"PXGC";
/// Checkpoint format version.
pub const CHECKPOINT_VERSION: u32 = 1;

/// Architecture and training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Words covered by one kernel window (the n of the n-gram detector).
    pub words_per_window: usize,
    pub kernels: usize,
    pub seq_len: usize,
    pub img_rows: usize,
    pub img_cols: usize,
    pub pool: PoolConfig,
    pub fc1_out: usize,
    pub fc2_out: usize,
    pub num_classes: usize,
    pub dropout: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            words_per_window: 2,
            kernels: 50,
            seq_len: 80,
            img_rows: 20,
            img_cols: 131,
            pool: PoolConfig::default(),
            fc1_out: 512,
            fc2_out: 100,
            num_classes: 4,
            dropout: 0.5,
            lr: 1e-4,
            batch_size: 64,
            max_epochs: 20,
            patience: 3,
            seed: 42,
        }
    }
}

impl ModelConfig {
    pub fn frame_pixels(&self) -> usize {
        self.img_rows * self.img_cols
    }

    /// Conv output positions T = L - n + 1.
    pub fn conv_positions(&self) -> usize {
        self.seq_len - self.words_per_window + 1
    }

    /// Pooled positions per channel.
    pub fn pooled_len(&self) -> Result<usize> {
        self.pool.output_len(self.conv_positions()).ok_or_else(|| {
            Error::ConfigMismatch(format!(
                "pooling {:?} produces no output over {} positions",
                self.pool,
                self.conv_positions()
            ))
        })
    }

    /// FC1 input width: kernels times pooled positions.
    pub fn flat_len(&self) -> Result<usize> {
        Ok(self.kernels * self.pooled_len()?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.words_per_window == 0
            || self.kernels == 0
            || self.img_rows == 0
            || self.img_cols == 0
            || self.fc1_out == 0
            || self.fc2_out == 0
            || self.batch_size == 0
            || self.max_epochs == 0
        {
            return Err(Error::ConfigMismatch("zero-sized dimension".into()));
        }
        if self.num_classes < 2 {
            return Err(Error::ConfigMismatch(format!(
                "need at least 2 classes, got {}",
                self.num_classes
            )));
        }
        if self.seq_len < self.words_per_window {
            return Err(Error::ConfigMismatch(format!(
                "sequence length {} shorter than window {}",
                self.seq_len, self.words_per_window
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::ConfigMismatch(format!(
                "dropout {} outside [0,1)",
                self.dropout
            )));
        }
        if self.lr.is_nan() || self.lr <= 0.0 {
            return Err(Error::ConfigMismatch(format!(
                "lr {} not positive",
                self.lr
            )));
        }
        self.pooled_len()?;
        Ok(())
    }
}

/// All trainable tensors. FC weights are stored [in, out].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<R: Real> {
    pub conv: ConvKernelBank<R>,
    pub fc1_w: Tensor<R>,
    pub fc1_b: Tensor<R>,
    pub fc2_w: Tensor<R>,
    pub fc2_b: Tensor<R>,
    pub fc3_w: Tensor<R>,
    pub fc3_b: Tensor<R>,
}

impl<R: Real> PartialEq<ConvKernelBank<R>> for ConvKernelBank<R> {
    fn eq(&self, other: &ConvKernelBank<R>) -> bool {
        self.weights == other.weights && self.bias == other.bias
    }
}

/// Checkpoint order of the parameter tensors.
pub const PARAM_NAMES: [&str; 8] = [
    "conv_weights",
    "conv_bias",
    "fc1_weights",
    "fc1_bias",
    "fc2_weights",
    "fc2_bias",
    "fc3_weights",
    "fc3_bias",
];

impl<R: Real> ModelParams<R> {
    pub fn tensors(&self) -> [&Tensor<R>; 8] {
        [
            &self.conv.weights,
            &self.conv.bias,
            &self.fc1_w,
            &self.fc1_b,
            &self.fc2_w,
            &self.fc2_b,
            &self.fc3_w,
            &self.fc3_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor<R>; 8] {
        [
            &mut self.conv.weights,
            &mut self.conv.bias,
            &mut self.fc1_w,
            &mut self.fc1_b,
            &mut self.fc2_w,
            &mut self.fc2_b,
            &mut self.fc3_w,
            &mut self.fc3_b,
        ]
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.all_finite())
    }

    pub fn cast<S: Real>(&self) -> ModelParams<S> {
        ModelParams {
            conv: ConvKernelBank {
                weights: self.conv.weights.cast(),
                bias: self.conv.bias.cast(),
            },
            fc1_w: self.fc1_w.cast(),
            fc1_b: self.fc1_b.cast(),
            fc2_w: self.fc2_w.cast(),
            fc2_b: self.fc2_b.cast(),
            fc3_w: self.fc3_w.cast(),
            fc3_b: self.fc3_b.cast(),
        }
    }
}

fn uniform_tensor<R: Real>(shape: &[usize], bound: f64, rng: &mut Rng) -> Tensor<R> {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| R::from_f64(rng.uniform_symmetric(bound)))
        .collect();
    Tensor::from_vec(shape, data).expect("size from shape")
}

/// Weights uniform in +-sqrt(6/fan_in) per layer, biases zero. Draw order is
/// fixed (conv, fc1, fc2, fc3), so a seed pins every weight.
pub fn init_params<R: Real>(cfg: &ModelConfig, rng: &mut Rng) -> Result<ModelParams<R>> {
    cfg.validate()?;
    let pix = cfg.frame_pixels();
    let n = cfg.words_per_window;
    let flat = cfg.flat_len()?;
    let conv_bound = (6.0 / (n * pix) as f64).sqrt();
    let conv = ConvKernelBank::new(
        uniform_tensor(
            &[cfg.kernels, n, cfg.img_rows, cfg.img_cols],
            conv_bound,
            rng,
        ),
        Tensor::zeros(&[cfg.kernels]),
    )?;
    let fc1_bound = (6.0 / flat as f64).sqrt();
    let fc2_bound = (6.0 / cfg.fc1_out as f64).sqrt();
    let fc3_bound = (6.0 / cfg.fc2_out as f64).sqrt();
    Ok(ModelParams {
        conv,
        fc1_w: uniform_tensor(&[flat, cfg.fc1_out], fc1_bound, rng),
        fc1_b: Tensor::zeros(&[cfg.fc1_out]),
        fc2_w: uniform_tensor(&[cfg.fc1_out, cfg.fc2_out], fc2_bound, rng),
        fc2_b: Tensor::zeros(&[cfg.fc2_out]),
        fc3_w: uniform_tensor(&[cfg.fc2_out, cfg.num_classes], fc3_bound, rng),
        fc3_b: Tensor::zeros(&[cfg.num_classes]),
    })
}

/// Tape handles for the staged parameters.
pub struct ParamNodes {
    pub conv_w: NodeId,
    pub conv_b: NodeId,
    pub fc1_w: NodeId,
    pub fc1_b: NodeId,
    pub fc2_w: NodeId,
    pub fc2_b: NodeId,
    pub fc3_w: NodeId,
    pub fc3_b: NodeId,
}

impl ParamNodes {
    pub fn ids(&self) -> [NodeId; 8] {
        [
            self.conv_w,
            self.conv_b,
            self.fc1_w,
            self.fc1_b,
            self.fc2_w,
            self.fc2_b,
            self.fc3_w,
            self.fc3_b,
        ]
    }
}

/// Put the parameters on a tape; differentiable for training, constant for
/// inference (skips gradient buffers).
pub fn stage_params<R: Real>(
    tape: &mut Tape<R>,
    params: &ModelParams<R>,
    trainable: bool,
) -> ParamNodes {
    ParamNodes {
        conv_w: tape.leaf(params.conv.weights.clone(), trainable),
        conv_b: tape.leaf(params.conv.bias.clone(), trainable),
        fc1_w: tape.leaf(params.fc1_w.clone(), trainable),
        fc1_b: tape.leaf(params.fc1_b.clone(), trainable),
        fc2_w: tape.leaf(params.fc2_w.clone(), trainable),
        fc2_b: tape.leaf(params.fc2_b.clone(), trainable),
        fc3_w: tape.leaf(params.fc3_w.clone(), trainable),
        fc3_b: tape.leaf(params.fc3_b.clone(), trainable),
    }
}

/// Forward pass over a batch of frame stacks:
/// conv -> max-over-time -> ReLU -> flatten -> FC1 -> ReLU -> dropout
/// -> FC2 -> ReLU -> dropout -> FC3. Returns the [B, C] logits node.
pub fn build_forward<R: Real>(
    tape: &mut Tape<R>,
    nodes: &ParamNodes,
    batch: Vec<Tensor<R>>,
    cfg: &ModelConfig,
    training: bool,
    rng: &mut Rng,
) -> Result<NodeId> {
    if batch.is_empty() {
        return Err(Error::EmptySplit("forward over an empty batch"));
    }
    let expect = [cfg.seq_len, cfg.frame_pixels()];
    let mut pooled_rows = Vec::with_capacity(batch.len());
    for frames in batch {
        if frames.shape() != expect {
            return Err(Error::ConfigMismatch(format!(
                "frames {:?} but config wants {:?}",
                frames.shape(),
                expect
            )));
        }
        let input = tape.leaf(frames, false);
        let u = tape.conv(input, nodes.conv_w, nodes.conv_b, cfg.words_per_window)?;
        let pooled = tape.max_over_time(u, &cfg.pool)?;
        pooled_rows.push(tape.relu(pooled));
    }
    let flat = tape.concat_rows(&pooled_rows)?;
    let h1 = tape.matmul(flat, nodes.fc1_w)?;
    let h1 = tape.add_bias_cols(h1, nodes.fc1_b)?;
    let h1 = tape.relu(h1);
    let h1 = tape.dropout(h1, cfg.dropout, training, rng);
    let h2 = tape.matmul(h1, nodes.fc2_w)?;
    let h2 = tape.add_bias_cols(h2, nodes.fc2_b)?;
    let h2 = tape.relu(h2);
    let h2 = tape.dropout(h2, cfg.dropout, training, rng);
    let logits = tape.matmul(h2, nodes.fc3_w)?;
    tape.add_bias_cols(logits, nodes.fc3_b)
}

/// Logits for one rendered document.
pub fn forward(
    video: &TextVideo,
    params: &ModelParams<f32>,
    cfg: &ModelConfig,
    training: bool,
    rng: &mut Rng,
) -> Result<Tensor<f32>> {
    let frames = crate::conv::frames_tensor(video);
    let mut tape = Tape::new();
    let nodes = stage_params(&mut tape, params, false);
    let logits = build_forward(&mut tape, &nodes, vec![frames], cfg, training, rng)?;
    tape.value(logits).clone().reshaped(&[cfg.num_classes])
}

/// Row argmax; ties go to the smallest class index.
pub fn argmax_row<R: Real>(row: &[R]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn render_batch(
    token_lists: &[Vec<String>],
    idx: &[usize],
    glyphs: &GlyphSet,
    cfg: &ModelConfig,
) -> Result<Vec<Tensor<f32>>> {
    idx.iter()
        .map(|&i| render_frames(&token_lists[i], glyphs, cfg.seq_len))
        .collect()
}

/// Predictions for a slice of pre-tokenized documents, batched.
fn predict_tokens(
    token_lists: &[Vec<String>],
    params: &ModelParams<f32>,
    cfg: &ModelConfig,
    glyphs: &GlyphSet,
) -> Result<Vec<usize>> {
    let mut rng = Rng::new(0); // inference path never draws from it
    let mut preds = Vec::with_capacity(token_lists.len());
    let all: Vec<usize> = (0..token_lists.len()).collect();
    for chunk in all.chunks(cfg.batch_size) {
        let batch = render_batch(token_lists, chunk, glyphs, cfg)?;
        let mut tape = Tape::new();
        let nodes = stage_params(&mut tape, params, false);
        let logits = build_forward(&mut tape, &nodes, batch, cfg, false, &mut rng)?;
        let lv = tape.value(logits);
        for row in lv.data().chunks_exact(cfg.num_classes) {
            preds.push(argmax_row(row));
        }
    }
    Ok(preds)
}

/// Per-epoch training statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: f64,
    pub seconds: f64,
}

/// Loss/accuracy curve, the selected epoch, and wall-clock time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub total_seconds: f64,
}

impl TrainReport {
    /// JSON lines with the deterministic fields only ({epoch, train_loss,
    /// val_acc}); wall-clock timing stays out of the file so that equal
    /// seeds produce byte-identical reports.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.epochs {
            out.push_str(&format!(
                "{{\"epoch\":{},\"train_loss\":{},\"val_acc\":{}}}\n",
                e.epoch, e.train_loss, e.val_acc
            ));
        }
        out
    }
}

/// Trained model plus everything needed to run it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub label_names: Vec<String>,
    pub params: ModelParams<f32>,
}

/// Mini-batch Adam training with per-epoch validation and best-epoch
/// selection; stops after `patience` epochs without improvement.
pub fn train(split: &DatasetSplit, cfg: &ModelConfig) -> Result<(Checkpoint, TrainReport)> {
    train_with_progress(split, cfg, |_| {})
}

pub fn train_with_progress(
    split: &DatasetSplit,
    cfg: &ModelConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<(Checkpoint, TrainReport)> {
    cfg.validate()?;
    if split.train.is_empty() {
        return Err(Error::EmptySplit("no training documents"));
    }
    if split.validation.is_empty() {
        return Err(Error::EmptySplit("no validation documents"));
    }
    for doc in split.train.iter().chain(&split.validation) {
        if doc.label >= cfg.num_classes {
            return Err(Error::LabelOutOfRange {
                label: doc.label as i64,
                num_classes: cfg.num_classes,
            });
        }
    }

    let glyphs = GlyphSet::embedded();
    let train_tokens: Vec<Vec<String>> = split.train.iter().map(|d| tokenize(&d.text)).collect();
    let train_labels: Vec<usize> = split.train.iter().map(|d| d.label).collect();
    let val_tokens: Vec<Vec<String>> = split.validation.iter().map(|d| tokenize(&d.text)).collect();

    // Separate streams so the shuffle sequence never shifts the dropout
    // masks and vice versa.
    let mut init_rng = Rng::stream(cfg.seed, 0);
    let mut shuffle_rng = Rng::stream(cfg.seed, 1);
    let mut dropout_rng = Rng::stream(cfg.seed, 2);

    let mut params = init_params::<f32>(cfg, &mut init_rng)?;
    let mut states: Vec<AdamState<f32>> = params
        .tensors()
        .iter()
        .map(|t| AdamState::new(cfg.lr, t.shape()))
        .collect();

    let started = Instant::now();
    let mut report = TrainReport {
        epochs: Vec::new(),
        best_epoch: 0,
        total_seconds: 0.0,
    };
    let mut best_params = params.clone();
    let mut best_acc = f64::NEG_INFINITY;
    let mut epochs_since_best = 0usize;

    for epoch in 1..=cfg.max_epochs {
        let epoch_started = Instant::now();
        let mut order: Vec<usize> = (0..train_tokens.len()).collect();
        shuffle_rng.shuffle(&mut order);

        let mut loss_sum = 0.0f64;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = render_batch(&train_tokens, chunk, &glyphs, cfg)?;
            let labels: Vec<usize> = chunk.iter().map(|&i| train_labels[i]).collect();

            let mut tape = Tape::new();
            let nodes = stage_params(&mut tape, &params, true);
            let logits = build_forward(&mut tape, &nodes, batch, cfg, true, &mut dropout_rng)?;
            let loss = tape.softmax_cross_entropy(logits, &labels)?;
            loss_sum += tape.value(loss).data()[0] as f64 * chunk.len() as f64;
            tape.backward(loss);

            for (idx, (tensor, state)) in params
                .tensors_mut()
                .into_iter()
                .zip(&mut states)
                .enumerate()
            {
                let grad = tape
                    .grad(nodes.ids()[idx])
                    .expect("parameters sit on every path to the loss");
                adam_step(tensor, grad, state)?;
            }
        }

        let val_preds = predict_tokens(&val_tokens, &params, cfg, &glyphs)?;
        let correct = val_preds
            .iter()
            .zip(&split.validation)
            .filter(|(p, d)| **p == d.label)
            .count();
        let stats = EpochStats {
            epoch,
            train_loss: loss_sum / train_tokens.len() as f64,
            val_acc: correct as f64 / split.validation.len() as f64,
            seconds: epoch_started.elapsed().as_secs_f64(),
        };
        on_epoch(&stats);
        report.epochs.push(stats);

        let acc = report.epochs.last().unwrap().val_acc;
        if acc > best_acc {
            best_acc = acc;
            best_params = params.clone();
            report.best_epoch = epoch;
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if epochs_since_best >= cfg.patience {
                break;
            }
        }
    }
    report.total_seconds = started.elapsed().as_secs_f64();

    Ok((
        Checkpoint {
            config: cfg.clone(),
            label_names: split.label_names.clone(),
            params: best_params,
        },
        report,
    ))
}

/// Accuracy and per-document predictions under a trained checkpoint.
pub fn evaluate(docs: &[Document], checkpoint: &Checkpoint) -> Result<(f64, Vec<usize>)> {
    evaluate_with_threads(docs, checkpoint, 1)
}

/// Same, with documents scored in `threads` parallel contiguous chunks and
/// merged in order, so the output does not depend on the thread count.
pub fn evaluate_with_threads(
    docs: &[Document],
    checkpoint: &Checkpoint,
    threads: usize,
) -> Result<(f64, Vec<usize>)> {
    if docs.is_empty() {
        return Err(Error::EmptySplit("no documents to evaluate"));
    }
    let cfg = &checkpoint.config;
    for doc in docs {
        if doc.label >= cfg.num_classes {
            return Err(Error::ConfigMismatch(format!(
                "document label {} but checkpoint has {} classes",
                doc.label, cfg.num_classes
            )));
        }
    }
    let glyphs = GlyphSet::embedded();
    let token_lists: Vec<Vec<String>> = docs.iter().map(|d| tokenize(&d.text)).collect();

    let threads = threads.max(1).min(token_lists.len());
    let preds: Vec<usize> = if threads == 1 {
        predict_tokens(&token_lists, &checkpoint.params, cfg, &glyphs)?
    } else {
        let chunk_len = token_lists.len().div_ceil(threads);
        let chunks: Vec<&[Vec<String>]> = token_lists.chunks(chunk_len).collect();
        let results: Vec<Result<Vec<usize>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .into_iter()
                .map(|chunk| {
                    scope.spawn(|| predict_tokens(chunk, &checkpoint.params, cfg, &glyphs))
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let mut merged = Vec::with_capacity(token_lists.len());
        for r in results {
            merged.extend(r?);
        }
        merged
    };

    let correct = preds
        .iter()
        .zip(docs)
        .filter(|(p, d)| **p == d.label)
        .count();
    Ok((correct as f64 / docs.len() as f64, preds))
}

// Checkpoint file format, all little-endian:
//   "PXGC", u32 version, config scalars, label names, then the eight
//   parameter tensors in PARAM_NAMES order, each as u32 ndim, u32 dims,
//   f32 data.

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }
    fn tensor(&mut self, t: &Tensor<f32>) {
        self.u32(t.shape().len() as u32);
        for &d in t.shape() {
            self.u32(d as u32);
        }
        for &v in t.data() {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::CorruptLength(format!("truncated {what}")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
    fn str(&mut self, what: &str) -> Result<String> {
        let len = self.u32(what)? as usize;
        let bytes = self.take(len, what)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| Error::CorruptLength(format!("{what} is not UTF-8")))
    }
    fn tensor(&mut self, what: &str) -> Result<Tensor<f32>> {
        let ndim = self.u32(what)? as usize;
        if ndim > 8 {
            return Err(Error::CorruptLength(format!("{what}: {ndim} dimensions")));
        }
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(self.u32(what)? as usize);
        }
        let numel: usize = shape.iter().product();
        let raw = self.take(numel * 4, what)?;
        let data: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Tensor::from_vec(&shape, data)
    }
}

pub fn checkpoint_to_bytes(ckpt: &Checkpoint) -> Vec<u8> {
    let cfg = &ckpt.config;
    let mut w = Writer { buf: Vec::new() };
    w.buf.extend_from_slice(&CHECKPOINT_MAGIC);
    w.u32(CHECKPOINT_VERSION);
    w.u32(cfg.words_per_window as u32);
    w.u32(cfg.kernels as u32);
    w.u32(cfg.seq_len as u32);
    w.u32(cfg.img_rows as u32);
    w.u32(cfg.img_cols as u32);
    w.u32(cfg.pool.kernel as u32);
    w.u32(cfg.pool.stride as u32);
    w.u32(cfg.pool.dilation as u32);
    w.u32(cfg.fc1_out as u32);
    w.u32(cfg.fc2_out as u32);
    w.u32(cfg.num_classes as u32);
    w.f64(cfg.dropout);
    w.f64(cfg.lr);
    w.u32(cfg.batch_size as u32);
    w.u32(cfg.max_epochs as u32);
    w.u32(cfg.patience as u32);
    w.u64(cfg.seed);
    w.u32(ckpt.label_names.len() as u32);
    for name in &ckpt.label_names {
        w.str(name);
    }
    for t in ckpt.params.tensors() {
        w.tensor(t);
    }
    w.buf
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < 4 || bytes[..4] != CHECKPOINT_MAGIC {
        let mut found = [0u8; 4];
        found[..bytes.len().min(4)].copy_from_slice(&bytes[..bytes.len().min(4)]);
        return Err(Error::BadMagic {
            expected: CHECKPOINT_MAGIC,
            found,
        });
    }
    let mut r = Reader { bytes, pos: 4 };
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::VersionMismatch {
            expected: CHECKPOINT_VERSION,
            found: version,
        });
    }
    let cfg = ModelConfig {
        words_per_window: r.u32("config")? as usize,
        kernels: r.u32("config")? as usize,
        seq_len: r.u32("config")? as usize,
        img_rows: r.u32("config")? as usize,
        img_cols: r.u32("config")? as usize,
        pool: PoolConfig {
            kernel: r.u32("config")? as usize,
            stride: r.u32("config")? as usize,
            dilation: r.u32("config")? as usize,
        },
        fc1_out: r.u32("config")? as usize,
        fc2_out: r.u32("config")? as usize,
        num_classes: r.u32("config")? as usize,
        dropout: r.f64("config")?,
        lr: r.f64("config")?,
        batch_size: r.u32("config")? as usize,
        max_epochs: r.u32("config")? as usize,
        patience: r.u32("config")? as usize,
        seed: r.u64("config")?,
    };
    cfg.validate()?;
    let n_labels = r.u32("label names")? as usize;
    if n_labels != cfg.num_classes {
        return Err(Error::ConfigMismatch(format!(
            "{n_labels} label names for {} classes",
            cfg.num_classes
        )));
    }
    let mut label_names = Vec::with_capacity(n_labels);
    for _ in 0..n_labels {
        label_names.push(r.str("label name")?);
    }
    let mut tensors = Vec::with_capacity(8);
    for name in PARAM_NAMES {
        tensors.push(r.tensor(name)?);
    }
    if r.pos != bytes.len() {
        return Err(Error::CorruptLength(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    let mut it = tensors.into_iter();
    let params = ModelParams {
        conv: ConvKernelBank::new(it.next().unwrap(), it.next().unwrap())?,
        fc1_w: it.next().unwrap(),
        fc1_b: it.next().unwrap(),
        fc2_w: it.next().unwrap(),
        fc2_b: it.next().unwrap(),
        fc3_w: it.next().unwrap(),
        fc3_b: it.next().unwrap(),
    };
    // Shapes must agree with the config they shipped with.
    let flat = cfg.flat_len()?;
    let expected: [(&str, Vec<usize>); 8] = [
        (
            PARAM_NAMES[0],
            vec![
                cfg.kernels,
                cfg.words_per_window,
                cfg.img_rows,
                cfg.img_cols,
            ],
        ),
        (PARAM_NAMES[1], vec![cfg.kernels]),
        (PARAM_NAMES[2], vec![flat, cfg.fc1_out]),
        (PARAM_NAMES[3], vec![cfg.fc1_out]),
        (PARAM_NAMES[4], vec![cfg.fc1_out, cfg.fc2_out]),
        (PARAM_NAMES[5], vec![cfg.fc2_out]),
        (PARAM_NAMES[6], vec![cfg.fc2_out, cfg.num_classes]),
        (PARAM_NAMES[7], vec![cfg.num_classes]),
    ];
    for (tensor, (name, shape)) in params.tensors().iter().zip(&expected) {
        if tensor.shape() != shape.as_slice() {
            return Err(Error::ConfigMismatch(format!(
                "{name} has shape {:?}, config implies {shape:?}",
                tensor.shape()
            )));
        }
    }
    if !params.all_finite() {
        return Err(Error::CorruptLength("non-finite parameter value".into()));
    }
    Ok(Checkpoint {
        config: cfg,
        label_names,
        params,
    })
}

/// Tiny geometry for end-to-end gradient checks: 4x6 frames, L=6, n=2, k=3,
/// pooling (3,1,1), so the FC chain is 9 -> 8 -> 5 -> 2.
pub fn toy_config() -> ModelConfig {
    ModelConfig {
        words_per_window: 2,
        kernels: 3,
        seq_len: 6,
        img_rows: 4,
        img_cols: 6,
        pool: PoolConfig::new(3, 1, 1),
        fc1_out: 8,
        fc2_out: 5,
        num_classes: 2,
        dropout: 0.0,
        lr: 1e-4,
        batch_size: 2,
        max_epochs: 1,
        patience: 1,
        seed: 7,
    }
}

/// Random binary frame stack shaped for `cfg`.
pub fn random_binary_frames<R: Real>(cfg: &ModelConfig, rng: &mut Rng) -> Tensor<R> {
    let n = cfg.seq_len * cfg.frame_pixels();
    let data = (0..n)
        .map(|_| {
            if rng.next_f64() < 0.3 {
                R::ONE
            } else {
                R::ZERO
            }
        })
        .collect();
    Tensor::from_vec(&[cfg.seq_len, cfg.frame_pixels()], data).expect("size from shape")
}

/// Full-model loss for a fixed batch, as a pure function of the parameters.
pub fn batch_loss<R: Real>(
    cfg: &ModelConfig,
    params: &ModelParams<R>,
    batch: &[Tensor<R>],
    labels: &[usize],
) -> Result<R> {
    let mut rng = Rng::new(0); // dropout disabled below, never drawn from
    let mut tape = Tape::new();
    let nodes = stage_params(&mut tape, params, false);
    let mut eval_cfg = cfg.clone();
    eval_cfg.dropout = 0.0;
    let logits = build_forward(
        &mut tape,
        &nodes,
        batch.to_vec(),
        &eval_cfg,
        false,
        &mut rng,
    )?;
    let loss = tape.softmax_cross_entropy(logits, labels)?;
    Ok(tape.value(loss).data()[0])
}

/// Loss and the analytic gradient of every parameter tensor for one batch.
pub fn batch_loss_and_grads<R: Real>(
    cfg: &ModelConfig,
    params: &ModelParams<R>,
    batch: &[Tensor<R>],
    labels: &[usize],
) -> Result<(R, Vec<Tensor<R>>)> {
    let mut rng = Rng::new(0);
    let mut tape = Tape::new();
    let nodes = stage_params(&mut tape, params, true);
    let mut eval_cfg = cfg.clone();
    eval_cfg.dropout = 0.0;
    let logits = build_forward(
        &mut tape,
        &nodes,
        batch.to_vec(),
        &eval_cfg,
        false,
        &mut rng,
    )?;
    let loss = tape.softmax_cross_entropy(logits, labels)?;
    let value = tape.value(loss).data()[0];
    tape.backward(loss);
    let grads = nodes
        .ids()
        .iter()
        .map(|&id| tape.grad(id).expect("param gradient").clone())
        .collect();
    Ok((value, grads))
}

/// End-to-end gradient check of the full loss on a random 2-sample batch:
/// per parameter tensor, analytic gradient vs central differences at step
/// `h`. Returns (tensor name, max relative error) pairs.
pub fn end_to_end_grad_check<R: Real>(
    cfg: &ModelConfig,
    seed: u64,
    h: f64,
) -> Result<Vec<(&'static str, f64)>> {
    let mut rng = Rng::stream(seed, 40);
    let params = init_params::<R>(cfg, &mut rng)?;
    let batch = vec![
        random_binary_frames::<R>(cfg, &mut rng),
        random_binary_frames::<R>(cfg, &mut rng),
    ];
    let labels = [0usize, 1 % cfg.num_classes];
    let (_, grads) = batch_loss_and_grads(cfg, &params, &batch, &labels)?;
    let mut report = Vec::with_capacity(8);
    for idx in 0..8 {
        let err = crate::autodiff::grad_check(
            |t| {
                let mut probe = params.clone();
                *probe.tensors_mut()[idx] = t.clone();
                batch_loss(cfg, &probe, &batch, &labels).expect("same shapes")
            },
            params.tensors()[idx],
            &grads[idx],
            h,
        );
        report.push((PARAM_NAMES[idx], err));
    }
    Ok(report)
}

/// Atomic write: temp file in the target directory, then rename.
pub fn write_file_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name()
            .map(|n| n.to_string_lossy())
            .unwrap_or_default()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn save_checkpoint(
    params: &ModelParams<f32>,
    cfg: &ModelConfig,
    label_names: &[String],
    path: impl AsRef<Path>,
) -> Result<()> {
    let ckpt = Checkpoint {
        config: cfg.clone(),
        label_names: label_names.to_vec(),
        params: params.clone(),
    };
    write_file_atomic(path, &checkpoint_to_bytes(&ckpt))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    checkpoint_from_bytes(&fs::read(path)?)
}
