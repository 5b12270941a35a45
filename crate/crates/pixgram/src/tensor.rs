//! Dense row-major tensors over f32 or f64.
//!
//! f32 is the training width; f64 exists so gradient checks can run with
//! 64-bit accumulation. There is no broadcasting: every op checks shapes and
//! rejects mismatches.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Scalar type the numeric stack is generic over.
pub trait Real:
    Copy
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Send
    + Sync
    + 'static
{
    const ZERO: Self;
    const ONE: Self;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn maximum(self, other: Self) -> Self;
    fn is_finite(self) -> bool;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            const ZERO: Self = 0.0;
            const ONE: Self = 1.0;

            fn from_f64(v: f64) -> Self {
                v as $t
            }
            fn to_f64(self) -> f64 {
                self as f64
            }
            fn abs(self) -> Self {
                <$t>::abs(self)
            }
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }
            fn exp(self) -> Self {
                <$t>::exp(self)
            }
            fn ln(self) -> Self {
                <$t>::ln(self)
            }
            fn powi(self, n: i32) -> Self {
                <$t>::powi(self, n)
            }
            fn maximum(self, other: Self) -> Self {
                <$t>::max(self, other)
            }
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Dense n-dimensional array, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<R: Real> {
    shape: Vec<usize>,
    data: Vec<R>,
}

impl<R: Real> Tensor<R> {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![R::ZERO; n],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<R>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if data.len() != n {
            return Err(Error::shape(format!(
                "shape {:?} holds {} elements, got {}",
                shape,
                n,
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn scalar(v: R) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![v],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[R] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [R] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<R> {
        self.data
    }

    /// Rows of a 2-D tensor.
    pub fn rows(&self) -> usize {
        assert_eq!(self.shape.len(), 2, "rows() on non-matrix {:?}", self.shape);
        self.shape[0]
    }

    /// Columns of a 2-D tensor.
    pub fn cols(&self) -> usize {
        assert_eq!(self.shape.len(), 2, "cols() on non-matrix {:?}", self.shape);
        self.shape[1]
    }

    pub fn at2(&self, r: usize, c: usize) -> R {
        self.data[r * self.cols() + c]
    }

    /// Same data, new shape; element count must match.
    pub fn reshaped(mut self, shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(Error::shape(format!(
                "cannot reshape {:?} ({} elements) to {:?} ({})",
                self.shape,
                self.data.len(),
                shape,
                n
            )));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    pub fn fill(&mut self, v: R) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    /// self += other, shapes must agree exactly.
    pub fn add_assign_checked(&mut self, other: &Tensor<R>) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::shape(format!(
                "add: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(R) -> R) -> Tensor<R> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Widen / narrow the scalar type (used by the f64 checking mode).
    pub fn cast<S: Real>(&self) -> Tensor<S> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| S::from_f64(x.to_f64())).collect(),
        }
    }
}

// Raw matrix kernels. These are the hot loops of the whole crate; the inner
// loops run over contiguous slices so they autovectorize.

/// c += a @ b with a: [m,k], b: [k,p], c: [m,p].
pub fn matmul_acc<R: Real>(a: &[R], b: &[R], c: &mut [R], m: usize, k: usize, p: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * p);
    debug_assert_eq!(c.len(), m * p);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let c_row = &mut c[i * p..(i + 1) * p];
        for (kk, &a_ik) in a_row.iter().enumerate() {
            let b_row = &b[kk * p..(kk + 1) * p];
            for (cv, &bv) in c_row.iter_mut().zip(b_row) {
                *cv += a_ik * bv;
            }
        }
    }
}

/// c += a @ b^T with a: [m,k], b: [p,k], c: [m,p]. Row-by-row dot products.
pub fn matmul_bt_acc<R: Real>(a: &[R], b: &[R], c: &mut [R], m: usize, k: usize, p: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), p * k);
    debug_assert_eq!(c.len(), m * p);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let c_row = &mut c[i * p..(i + 1) * p];
        for (j, cv) in c_row.iter_mut().enumerate() {
            let b_row = &b[j * k..(j + 1) * k];
            *cv += dot(a_row, b_row);
        }
    }
}

/// c += a^T @ b with a: [k,m], b: [k,p], c: [m,p].
pub fn matmul_at_acc<R: Real>(a: &[R], b: &[R], c: &mut [R], m: usize, k: usize, p: usize) {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * p);
    debug_assert_eq!(c.len(), m * p);
    for kk in 0..k {
        let a_row = &a[kk * m..(kk + 1) * m];
        let b_row = &b[kk * p..(kk + 1) * p];
        for (i, &a_ki) in a_row.iter().enumerate() {
            let c_row = &mut c[i * p..(i + 1) * p];
            for (cv, &bv) in c_row.iter_mut().zip(b_row) {
                *cv += a_ki * bv;
            }
        }
    }
}

/// Dot product over sixteen fixed accumulator lanes: lane l sums elements
/// l, l+16, l+32, ... and the lanes collapse left to right at the end. The
/// reassociation order is pinned by the code, so results are reproducible
/// bit for bit, while the fixed-size chunks let the compiler keep the lane
/// block in vector registers instead of falling back to scalar loads with
/// per-element bounds checks.
#[inline(always)]
pub fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    debug_assert_eq!(a.len(), b.len());
    const LANES: usize = 16;
    let mut acc = [R::ZERO; LANES];
    for (sa, sb) in a.chunks_exact(LANES).zip(b.chunks_exact(LANES)) {
        let sa: &[R; LANES] = sa.try_into().unwrap();
        let sb: &[R; LANES] = sb.try_into().unwrap();
        for lane in 0..LANES {
            acc[lane] += sa[lane] * sb[lane];
        }
    }
    let mut s = R::ZERO;
    for lane in 0..LANES {
        s += acc[lane];
    }
    let done = a.len() / LANES * LANES;
    for j in done..a.len() {
        s += a[j] * b[j];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_rejects_wrong_length() {
        assert!(Tensor::from_vec(&[2, 3], vec![1.0f32; 5]).is_err());
        assert!(Tensor::from_vec(&[2, 3], vec![1.0f32; 6]).is_ok());
    }

    #[test]
    fn matmul_identity() {
        // I3 @ B == B
        let mut eye = vec![0.0f32; 9];
        for i in 0..3 {
            eye[i * 3 + i] = 1.0;
        }
        let b: Vec<f32> = (0..12).map(|x| x as f32).collect();
        let mut c = vec![0.0f32; 12];
        matmul_acc(&eye, &b, &mut c, 3, 3, 4);
        assert_eq!(c, b);
    }

    #[test]
    fn matmul_hand_case() {
        // [[1,2],[3,4]] @ [[1],[1]] == [[3],[7]]
        let a = vec![1.0f32, 2.0, 3.0, 4.0];
        let b = vec![1.0f32, 1.0];
        let mut c = vec![0.0f32; 2];
        matmul_acc(&a, &b, &mut c, 2, 2, 1);
        assert_eq!(c, vec![3.0, 7.0]);
    }

    #[test]
    fn transposed_variants_agree_with_plain() {
        let mut rng = crate::rng::Rng::new(11);
        let (m, k, p) = (4, 5, 6);
        let a: Vec<f64> = (0..m * k).map(|_| rng.uniform_symmetric(1.0)).collect();
        let b: Vec<f64> = (0..k * p).map(|_| rng.uniform_symmetric(1.0)).collect();

        let mut c_plain = vec![0.0f64; m * p];
        matmul_acc(&a, &b, &mut c_plain, m, k, p);

        // b^T stored as [p,k]
        let mut bt = vec![0.0f64; p * k];
        for r in 0..k {
            for c in 0..p {
                bt[c * k + r] = b[r * p + c];
            }
        }
        let mut c_bt = vec![0.0f64; m * p];
        matmul_bt_acc(&a, &bt, &mut c_bt, m, k, p);

        // a^T stored as [k,m]
        let mut at = vec![0.0f64; k * m];
        for r in 0..m {
            for c in 0..k {
                at[c * m + r] = a[r * k + c];
            }
        }
        let mut c_at = vec![0.0f64; m * p];
        matmul_at_acc(&at, &b, &mut c_at, m, k, p);

        for i in 0..m * p {
            assert!((c_plain[i] - c_bt[i]).abs() < 1e-12);
            assert!((c_plain[i] - c_at[i]).abs() < 1e-12);
        }
    }
}
