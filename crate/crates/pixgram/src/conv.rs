//! The n-gram detector layer pair: a full-frame convolution over the word
//! stack and dilated 1-D max-over-time pooling.
//!
//! One kernel spans `n` whole word images, so sliding it along the sequence
//! yields one scalar per n-gram position. With frames flattened to rows of a
//! [len, pix] matrix, window j is the contiguous run frames[j..j+n], and the
//! convolution is a single product of the [k, n*pix] weight matrix against
//! the unfolded [n*pix, T] window matrix (computed here as weights times the
//! [T, n*pix] window-rows matrix transposed). `conv_direct` is the naive
//! nested loop kept as the test oracle for that reduction.

use crate::error::{Error, Result};
use crate::glyph::IMAGE_PIXELS;
use crate::tensor::{dot, matmul_at_acc, Real, Tensor};

/// Bank of n-gram detector kernels; weights are [k, n, rows, cols].
#[derive(Debug, Clone)]
pub struct ConvKernelBank<R: Real> {
    pub weights: Tensor<R>,
    pub bias: Tensor<R>,
}

impl<R: Real> ConvKernelBank<R> {
    pub fn new(weights: Tensor<R>, bias: Tensor<R>) -> Result<Self> {
        if weights.shape().len() != 4 {
            return Err(Error::shape(format!(
                "kernel bank weights must be [k, n, rows, cols], got {:?}",
                weights.shape()
            )));
        }
        if weights.shape()[1] == 0 {
            return Err(Error::shape("kernel bank needs n >= 1"));
        }
        if bias.shape() != [weights.shape()[0]] {
            return Err(Error::shape(format!(
                "bias shape {:?} does not match {} kernels",
                bias.shape(),
                weights.shape()[0]
            )));
        }
        Ok(ConvKernelBank { weights, bias })
    }

    pub fn kernels(&self) -> usize {
        self.weights.shape()[0]
    }

    /// Words covered per window.
    pub fn words_per_window(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn frame_pixels(&self) -> usize {
        self.weights.shape()[2] * self.weights.shape()[3]
    }
}

/// Conv responses, one row per kernel, one column per n-gram position.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap<R: Real> {
    pub matrix: Tensor<R>, // [k, T]
}

impl<R: Real> FeatureMap<R> {
    pub fn kernels(&self) -> usize {
        self.matrix.rows()
    }

    pub fn positions(&self) -> usize {
        self.matrix.cols()
    }

    pub fn at(&self, kernel: usize, position: usize) -> R {
        self.matrix.at2(kernel, position)
    }
}

/// Max-over-time pooling window layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolConfig {
    pub kernel: usize,
    pub stride: usize,
    pub dilation: usize,
}

impl Default for PoolConfig {
    fn default() -> Self {
        PoolConfig {
            kernel: 3,
            stride: 3,
            dilation: 3,
        }
    }
}

impl PoolConfig {
    pub fn new(kernel: usize, stride: usize, dilation: usize) -> Self {
        assert!(kernel >= 1 && stride >= 1 && dilation >= 1);
        PoolConfig {
            kernel,
            stride,
            dilation,
        }
    }

    /// floor((t - dilation*(kernel-1) - 1) / stride) + 1, or None when no
    /// window fits.
    pub fn output_len(&self, t: usize) -> Option<usize> {
        let span = self.dilation * (self.kernel - 1) + 1;
        if t < span {
            None
        } else {
            Some((t - span) / self.stride + 1)
        }
    }

    /// Input indices read by window `t`: {t*stride + i*dilation, i < kernel}.
    pub fn window_indices(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.kernel).map(move |i| t * self.stride + i * self.dilation)
    }
}

/// Flatten a rendered word stack into the [len, pixels] frame matrix the
/// numeric layers consume.
pub fn frames_tensor(video: &crate::corpus::TextVideo) -> Tensor<f32> {
    let len = video.frames.len();
    let mut data = Vec::with_capacity(len * IMAGE_PIXELS);
    for frame in &video.frames {
        data.extend_from_slice(frame.pixels());
    }
    Tensor::from_vec(&[len, IMAGE_PIXELS], data).expect("frame count times pixels")
}

fn check_conv_shapes<R: Real>(
    frames: &Tensor<R>,
    weights: &Tensor<R>,
    bias: &Tensor<R>,
    n: usize,
) -> Result<(usize, usize, usize, usize)> {
    if frames.shape().len() != 2 {
        return Err(Error::shape(format!(
            "frames must be [len, pixels], got {:?}",
            frames.shape()
        )));
    }
    let len = frames.shape()[0];
    let pix = frames.shape()[1];
    let k = weights.shape()[0];
    if weights.numel() != k * n * pix {
        return Err(Error::shape(format!(
            "weights {:?} do not cover {n} frames of {pix} pixels",
            weights.shape()
        )));
    }
    if bias.numel() != k {
        return Err(Error::shape(format!(
            "bias {:?} does not match {k} kernels",
            bias.shape()
        )));
    }
    if len < n {
        return Err(Error::SequenceTooShort(format!(
            "{len} frames cannot hold a {n}-word window"
        )));
    }
    Ok((len, pix, k, len - n + 1))
}

/// Window block size: weight and gradient rows stay cache-hot while a small
/// band of the frame buffer streams through.
const WINDOW_BLOCK: usize = 8;

/// Hot loop of the forward convolution over flat slices. Kept as its own
/// function so the loop shape the vectorizer sees is exactly this nest.
fn conv_fwd_kernel<R: Real>(
    w: &[R],
    f: &[R],
    u: &mut [R],
    k: usize,
    t_len: usize,
    pix: usize,
    width: usize,
) {
    let mut jb = 0;
    while jb < t_len {
        let jend = (jb + WINDOW_BLOCK).min(t_len);
        for c in 0..k {
            let w_row = &w[c * width..(c + 1) * width];
            for j in jb..jend {
                u[c * t_len + j] = dot(w_row, &f[j * pix..j * pix + width]);
            }
        }
        jb = jend;
    }
}

/// Forward convolution: the product of the [k, n*pix] weight matrix against
/// the unfolded [n*pix, T] window matrix. Because window j of the row-major
/// frame buffer is the contiguous run frames[j*pix .. j*pix + n*pix], the
/// unfolded matrix is realized as overlapping views instead of a copy.
/// Returns the [k, T] response matrix.
pub fn conv_fwd<R: Real>(
    frames: &Tensor<R>,
    weights: &Tensor<R>,
    bias: &Tensor<R>,
    n: usize,
) -> Result<Tensor<R>> {
    let (_len, pix, k, t_len) = check_conv_shapes(frames, weights, bias, n)?;
    let width = n * pix;
    let mut u = vec![R::ZERO; k * t_len];
    conv_fwd_kernel(weights.data(), frames.data(), &mut u, k, t_len, pix, width);
    for (c, row) in u.chunks_exact_mut(t_len).enumerate() {
        let b = bias.data()[c];
        row.iter_mut().for_each(|v| *v += b);
    }
    Tensor::from_vec(&[k, t_len], u)
}

/// Gradient of the conv output with respect to weights and bias:
/// dW[k, n*pix] += dU[k, T] @ windows[T, n*pix], again over window views.
/// Max pooling routes gradient to few positions, so zero columns of dU are
/// skipped outright.
pub fn conv_bwd_params<R: Real>(
    grad_u: &Tensor<R>,
    frames: &Tensor<R>,
    n: usize,
    grad_weights: &mut [R],
    grad_bias: &mut [R],
) {
    let len = frames.shape()[0];
    let pix = frames.shape()[1];
    let width = n * pix;
    let k = grad_u.rows();
    let t_len = grad_u.cols();
    debug_assert_eq!(t_len, len - n + 1);
    let f = frames.data();
    let mut jb = 0;
    while jb < t_len {
        let jend = (jb + WINDOW_BLOCK).min(t_len);
        for c in 0..k {
            let gw_row = &mut grad_weights[c * width..(c + 1) * width];
            for j in jb..jend {
                let g = grad_u.data()[c * t_len + j];
                if g == R::ZERO {
                    continue;
                }
                let window = &f[j * pix..j * pix + width];
                for (d, &x) in gw_row.iter_mut().zip(window) {
                    *d += g * x;
                }
            }
        }
        jb = jend;
    }
    for (c, row) in grad_u.data().chunks_exact(t_len).enumerate() {
        let mut s = R::ZERO;
        for &g in row {
            s += g;
        }
        grad_bias[c] += s;
    }
}

/// Gradient of the conv output with respect to the input frames: fold the
/// transposed product back onto the overlapping windows.
pub fn conv_bwd_frames<R: Real>(
    grad_u: &Tensor<R>,
    weights: &Tensor<R>,
    n: usize,
    pix: usize,
    grad_frames: &mut [R],
) {
    let k = grad_u.rows();
    let t_len = grad_u.cols();
    let width = n * pix;
    // dWindows[T, n*pix] = dU^T[T, k] @ W[k, n*pix]
    let mut d_windows = vec![R::ZERO; t_len * width];
    matmul_at_acc(
        grad_u.data(),
        weights.data(),
        &mut d_windows,
        t_len,
        k,
        width,
    );
    for j in 0..t_len {
        let src = &d_windows[j * width..(j + 1) * width];
        let dst = &mut grad_frames[j * pix..j * pix + width];
        for (d, s) in dst.iter_mut().zip(src) {
            *d += *s;
        }
    }
}

/// Reference implementation: naive loops over kernel, position, word offset,
/// and pixel. No unfolding, no matrix product. Test oracle only.
pub fn conv_direct<R: Real>(frames: &Tensor<R>, bank: &ConvKernelBank<R>) -> Result<FeatureMap<R>> {
    let n = bank.words_per_window();
    let (_len, pix, k, t_len) = check_conv_shapes(frames, &bank.weights, &bank.bias, n)?;
    let mut u = vec![R::ZERO; k * t_len];
    for c in 0..k {
        for j in 0..t_len {
            let mut acc = bank.bias.data()[c];
            for i in 0..n {
                for p in 0..pix {
                    let w = bank.weights.data()[(c * n + i) * pix + p];
                    let x = frames.data()[(j + i) * pix + p];
                    acc += w * x;
                }
            }
            u[c * t_len + j] = acc;
        }
    }
    Ok(FeatureMap {
        matrix: Tensor::from_vec(&[k, t_len], u)?,
    })
}

/// Matrix-product convolution behind the `FeatureMap` type.
pub fn conv_forward<R: Real>(
    frames: &Tensor<R>,
    bank: &ConvKernelBank<R>,
) -> Result<FeatureMap<R>> {
    Ok(FeatureMap {
        matrix: conv_fwd(frames, &bank.weights, &bank.bias, bank.words_per_window())?,
    })
}

/// Per-channel dilated max pooling along the position axis. Returns pooled
/// values [k, P] and the winning input index per window (ties go to the
/// smallest index, which makes the backward routing deterministic).
pub fn pool_fwd<R: Real>(u: &Tensor<R>, cfg: &PoolConfig) -> Result<(Tensor<R>, Vec<u32>)> {
    let k = u.rows();
    let t_len = u.cols();
    let p_len = cfg.output_len(t_len).ok_or_else(|| {
        Error::SequenceTooShort(format!(
            "{t_len} positions cannot fill a pooling window (kernel {}, dilation {})",
            cfg.kernel, cfg.dilation
        ))
    })?;
    let mut pooled = vec![R::ZERO; k * p_len];
    let mut argmax = vec![0u32; k * p_len];
    for c in 0..k {
        let row = &u.data()[c * t_len..(c + 1) * t_len];
        for t in 0..p_len {
            let mut best_idx = t * cfg.stride;
            let mut best = row[best_idx];
            for idx in cfg.window_indices(t).skip(1) {
                if row[idx] > best {
                    best = row[idx];
                    best_idx = idx;
                }
            }
            pooled[c * p_len + t] = best;
            argmax[c * p_len + t] = best_idx as u32;
        }
    }
    Ok((Tensor::from_vec(&[k, p_len], pooled)?, argmax))
}

/// Route pooled gradients back to the winning positions only.
pub fn pool_bwd<R: Real>(grad_pooled: &Tensor<R>, argmax: &[u32], t_len: usize, grad_u: &mut [R]) {
    let k = grad_pooled.rows();
    let p_len = grad_pooled.cols();
    for c in 0..k {
        for t in 0..p_len {
            let src = c * p_len + t;
            grad_u[c * t_len + argmax[src] as usize] += grad_pooled.data()[src];
        }
    }
}

/// Elementwise ReLU applied after pooling.
pub fn pooled_relu<R: Real>(pooled: &Tensor<R>) -> Tensor<R> {
    pooled.map(|v| v.maximum(R::ZERO))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random_tensor(shape: &[usize], rng: &mut Rng) -> Tensor<f32> {
        let n = shape.iter().product();
        let data = (0..n).map(|_| rng.uniform_symmetric(1.0) as f32).collect();
        Tensor::from_vec(shape, data).unwrap()
    }

    fn random_bank(
        k: usize,
        n: usize,
        rows: usize,
        cols: usize,
        rng: &mut Rng,
    ) -> ConvKernelBank<f32> {
        ConvKernelBank::new(
            random_tensor(&[k, n, rows, cols], rng),
            random_tensor(&[k], rng),
        )
        .unwrap()
    }

    #[test]
    fn blank_video_zero_bias_gives_zero_map() {
        let mut rng = Rng::new(5);
        let mut bank = random_bank(3, 2, 4, 5, &mut rng);
        bank.bias = Tensor::zeros(&[3]);
        let frames = Tensor::zeros(&[6, 20]);
        let u = conv_forward(&frames, &bank).unwrap();
        assert!(u.matrix.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn default_geometry_has_reference_shapes() {
        // L=80, n=2 -> U has 79 positions; pooling (3,3,3) -> 25 outputs.
        let cfg = PoolConfig::default();
        assert_eq!(cfg.output_len(79), Some(25));
        let mut rng = Rng::new(1);
        let bank = random_bank(2, 2, 2, 3, &mut rng);
        let frames = random_tensor(&[80, 6], &mut rng);
        let u = conv_forward(&frames, &bank).unwrap();
        assert_eq!(u.matrix.shape(), &[2, 79]);
    }

    #[test]
    fn forward_matches_direct_oracle_on_random_instances() {
        // 200 random draws: L in [2,10], n in {1,2,3}, k in [1,4].
        let mut rng = Rng::new(2024);
        for round in 0..200 {
            let n = 1 + rng.below(3);
            let len = (n + rng.below(9)).clamp(2, 10);
            let k = 1 + rng.below(4);
            let rows = 2 + rng.below(4);
            let cols = 2 + rng.below(6);
            let bank = random_bank(k, n, rows, cols, &mut rng);
            let frames = random_tensor(&[len, rows * cols], &mut rng);
            let fast = conv_forward(&frames, &bank).unwrap();
            let slow = conv_direct(&frames, &bank).unwrap();
            assert_eq!(fast.matrix.shape(), slow.matrix.shape());
            for (a, b) in fast.matrix.data().iter().zip(slow.matrix.data()) {
                assert!(
                    (a - b).abs() < 1e-5,
                    "round {round}: fast {a} vs direct {b}"
                );
            }
        }
    }

    #[test]
    fn direct_oracle_sifts_one_hot_kernel() {
        // A kernel that is one-hot at pixel p copies frames[j][p] into row 0.
        let pix = 12;
        let p = 7;
        let mut w = Tensor::zeros(&[1, 1, 3, 4]);
        w.data_mut()[p] = 1.0;
        let bank = ConvKernelBank::new(w, Tensor::zeros(&[1])).unwrap();
        let mut rng = Rng::new(3);
        let frames = random_tensor(&[5, pix], &mut rng);
        let u = conv_direct(&frames, &bank).unwrap();
        for j in 0..5 {
            assert_eq!(u.at(0, j), frames.data()[j * pix + p]);
        }
    }

    #[test]
    fn direct_oracle_bias_only_bank() {
        let bank = ConvKernelBank::new(
            Tensor::zeros(&[2, 2, 3, 3]),
            Tensor::from_vec(&[2], vec![0.5, -1.25]).unwrap(),
        )
        .unwrap();
        let mut rng = Rng::new(4);
        let frames = random_tensor(&[6, 9], &mut rng);
        let u = conv_direct(&frames, &bank).unwrap();
        for j in 0..u.positions() {
            assert_eq!(u.at(0, j), 0.5);
            assert_eq!(u.at(1, j), -1.25);
        }
    }

    #[test]
    fn too_short_sequence_is_rejected() {
        let mut rng = Rng::new(6);
        let bank = random_bank(1, 3, 2, 2, &mut rng);
        let frames = random_tensor(&[2, 4], &mut rng);
        assert!(matches!(
            conv_forward(&frames, &bank),
            Err(Error::SequenceTooShort(_))
        ));
        assert!(matches!(
            conv_direct(&frames, &bank),
            Err(Error::SequenceTooShort(_))
        ));
    }

    #[test]
    fn prepending_a_frame_shifts_the_map_right() {
        let mut rng = Rng::new(7);
        let mut bank = random_bank(2, 2, 3, 3, &mut rng);
        bank.bias = Tensor::zeros(&[2]);
        let frames = random_tensor(&[6, 9], &mut rng);
        let extra = random_tensor(&[1, 9], &mut rng);
        let mut longer = extra.data().to_vec();
        longer.extend_from_slice(frames.data());
        let longer = Tensor::from_vec(&[7, 9], longer).unwrap();

        let u = conv_forward(&frames, &bank).unwrap();
        let u_shift = conv_forward(&longer, &bank).unwrap();
        for c in 0..2 {
            for j in 0..u.positions() {
                let a = u.at(c, j);
                let b = u_shift.at(c, j + 1);
                assert!((a - b).abs() < 1e-6, "({c},{j}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn pooling_monotone_row_picks_last_window_index() {
        // Channel [0,1,...,78] with (3,3,3): window t reads {3t, 3t+3, 3t+6},
        // so the max sits at 3t+6 and equals it.
        let t_len = 79;
        let row: Vec<f32> = (0..t_len).map(|v| v as f32).collect();
        let u = Tensor::from_vec(&[1, t_len], row).unwrap();
        let (pooled, argmax) = pool_fwd(&u, &PoolConfig::default()).unwrap();
        assert_eq!(pooled.shape(), &[1, 25]);
        for t in 0..25 {
            assert_eq!(pooled.at2(0, t), (3 * t + 6) as f32);
            assert_eq!(argmax[t] as usize, 3 * t + 6);
        }
    }

    #[test]
    fn pooling_constant_row_and_tie_break() {
        let u = Tensor::from_vec(&[1, 9], vec![2.5f32; 9]).unwrap();
        let cfg = PoolConfig::new(3, 3, 3);
        let (pooled, argmax) = pool_fwd(&u, &cfg).unwrap();
        assert_eq!(pooled.shape(), &[1, 1]);
        assert_eq!(pooled.at2(0, 0), 2.5);
        // All candidates tie; the smallest index wins.
        assert_eq!(argmax[0], 0);
    }

    #[test]
    fn pooling_rejects_short_input() {
        let u = Tensor::from_vec(&[1, 6], vec![0.0f32; 6]).unwrap();
        assert!(matches!(
            pool_fwd(&u, &PoolConfig::default()),
            Err(Error::SequenceTooShort(_))
        ));
    }

    #[test]
    fn pool_backward_routes_to_argmax_only() {
        let u =
            Tensor::from_vec(&[1, 9], vec![0.0, 5.0, 1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0]).unwrap();
        let cfg = PoolConfig::new(3, 1, 1);
        let (pooled, argmax) = pool_fwd(&u, &cfg).unwrap();
        assert_eq!(pooled.cols(), 7);
        let grad_pooled = Tensor::from_vec(&[1, 7], vec![1.0f32; 7]).unwrap();
        let mut grad_u = vec![0.0f32; 9];
        pool_bwd(&grad_pooled, &argmax, 9, &mut grad_u);
        // Exactly one input position per window received gradient.
        assert_eq!(grad_u.iter().map(|&g| g as usize).sum::<usize>(), 7);
        // Index 1 wins windows 0 and 1; index 6 wins windows 4, 5, 6.
        assert_eq!(grad_u[1], 2.0);
        assert_eq!(grad_u[6], 3.0);
    }

    #[test]
    fn relu_commutes_with_max_pooling() {
        let mut rng = Rng::new(8);
        let u = random_tensor(&[3, 17], &mut rng);
        let cfg = PoolConfig::new(3, 2, 2);
        let (pooled, _) = pool_fwd(&u, &cfg).unwrap();
        let relu_then = pooled_relu(&pooled);
        let (then_relu, _) = pool_fwd(&u.map(|v| v.max(0.0)), &cfg).unwrap();
        assert_eq!(relu_then, then_relu);
        // All-negative map pools to all-zero after the activation.
        let neg = u.map(|v| -v.abs() - 0.1);
        let (pooled_neg, _) = pool_fwd(&neg, &cfg).unwrap();
        assert!(pooled_relu(&pooled_neg).data().iter().all(|&v| v == 0.0));
    }
}
