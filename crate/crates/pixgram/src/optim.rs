//! Adam optimizer with bias correction.

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Per-parameter Adam state. Moments start at zero; `step` counts completed
/// updates.
#[derive(Debug, Clone)]
pub struct AdamState<R: Real> {
    pub lr: R,
    pub beta1: R,
    pub beta2: R,
    pub eps: R,
    pub step: u64,
    pub m: Tensor<R>,
    pub v: Tensor<R>,
}

impl<R: Real> AdamState<R> {
    pub fn new(lr: f64, shape: &[usize]) -> Self {
        AdamState {
            lr: R::from_f64(lr),
            beta1: R::from_f64(0.9),
            beta2: R::from_f64(0.999),
            eps: R::from_f64(1e-8),
            step: 0,
            m: Tensor::zeros(shape),
            v: Tensor::zeros(shape),
        }
    }
}

/// One Adam update:
///   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
///   param -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
pub fn adam_step<R: Real>(
    param: &mut Tensor<R>,
    grad: &Tensor<R>,
    state: &mut AdamState<R>,
) -> Result<()> {
    if param.shape() != grad.shape() || param.shape() != state.m.shape() {
        return Err(Error::shape(format!(
            "adam: param {:?}, grad {:?}, state {:?}",
            param.shape(),
            grad.shape(),
            state.m.shape()
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = R::ONE - state.beta1.powi(t);
    let bc2 = R::ONE - state.beta2.powi(t);
    let one = R::ONE;
    for i in 0..param.numel() {
        let g = grad.data()[i];
        let m = state.beta1 * state.m.data()[i] + (one - state.beta1) * g;
        let v = state.beta2 * state.v.data()[i] + (one - state.beta2) * g * g;
        state.m.data_mut()[i] = m;
        state.v.data_mut()[i] = v;
        let m_hat = m / bc1;
        let v_hat = v / bc2;
        param.data_mut()[i] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}
