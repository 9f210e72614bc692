//! Dense row-major matrices and the handful of neural-net primitives the
//! pixel transformer needs. Generic over f32/f64: f32 is the working
//! precision, f64 exists for gradient verification.

use std::fmt::Debug;
use std::ops::{AddAssign, MulAssign, SubAssign};

pub trait Real:
    num_traits::Float + AddAssign + SubAssign + MulAssign + Debug + Send + Sync + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f32 {
    fn from_f64(v: f64) -> f32 {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> f64 {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// C = self (m,k) * b (k,n).
    pub fn matmul(&self, b: &Mat<T>) -> Mat<T> {
        debug_assert_eq!(self.cols, b.rows);
        let (m, k, n) = (self.rows, self.cols, b.cols);
        let mut c = Mat::zeros(m, n);
        for i in 0..m {
            let a_row = self.row(i);
            let c_row = c.row_mut(i);
            for (p, &a_ip) in a_row.iter().enumerate().take(k) {
                let b_row = b.row(p);
                for j in 0..n {
                    c_row[j] += a_ip * b_row[j];
                }
            }
        }
        c
    }

    /// C = self (m,k) * b^T, with b stored (n,k). Row-dot-row, cache friendly.
    pub fn matmul_nt(&self, b: &Mat<T>) -> Mat<T> {
        debug_assert_eq!(self.cols, b.cols);
        let (m, n) = (self.rows, b.rows);
        let mut c = Mat::zeros(m, n);
        for i in 0..m {
            let a_row = self.row(i);
            let c_row = c.row_mut(i);
            for j in 0..n {
                let b_row = b.row(j);
                let mut acc = T::zero();
                for p in 0..self.cols {
                    acc += a_row[p] * b_row[p];
                }
                c_row[j] = acc;
            }
        }
        c
    }

    /// C = self^T * b, with self stored (k,m) and b (k,n).
    pub fn matmul_tn(&self, b: &Mat<T>) -> Mat<T> {
        debug_assert_eq!(self.rows, b.rows);
        let (k, m, n) = (self.rows, self.cols, b.cols);
        let mut c = Mat::zeros(m, n);
        for p in 0..k {
            let a_row = self.row(p);
            let b_row = b.row(p);
            for (i, &a_pi) in a_row.iter().enumerate().take(m) {
                let c_row = c.row_mut(i);
                for j in 0..n {
                    c_row[j] += a_pi * b_row[j];
                }
            }
        }
        c
    }

    pub fn add_assign(&mut self, other: &Mat<T>) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Columns [c0, c1) as a new matrix.
    pub fn col_block(&self, c0: usize, c1: usize) -> Mat<T> {
        debug_assert!(c0 < c1 && c1 <= self.cols);
        let mut out = Mat::zeros(self.rows, c1 - c0);
        for i in 0..self.rows {
            out.row_mut(i).copy_from_slice(&self.row(i)[c0..c1]);
        }
        out
    }

    /// Add `block` into columns starting at c0.
    pub fn add_col_block(&mut self, c0: usize, block: &Mat<T>) {
        debug_assert_eq!(self.rows, block.rows);
        debug_assert!(c0 + block.cols <= self.cols);
        for i in 0..self.rows {
            let dst = &mut self.row_mut(i)[c0..c0 + block.cols];
            for (d, &s) in dst.iter_mut().zip(block.row(i)) {
                *d += s;
            }
        }
    }

    /// [self | right] column concatenation.
    pub fn concat_cols(&self, right: &Mat<T>) -> Mat<T> {
        debug_assert_eq!(self.rows, right.rows);
        let mut out = Mat::zeros(self.rows, self.cols + right.cols);
        for i in 0..self.rows {
            out.row_mut(i)[..self.cols].copy_from_slice(self.row(i));
            out.row_mut(i)[self.cols..].copy_from_slice(right.row(i));
        }
        out
    }
}

/// y = x * W^T + b for W stored (out, in).
pub fn linear_forward<T: Real>(x: &Mat<T>, w: &Mat<T>, b: &[T]) -> Mat<T> {
    let mut y = x.matmul_nt(w);
    for i in 0..y.rows {
        for (v, &bj) in y.row_mut(i).iter_mut().zip(b) {
            *v += bj;
        }
    }
    y
}

/// Gradients of [`linear_forward`]: returns dx, accumulates dw/db.
pub fn linear_backward<T: Real>(
    x: &Mat<T>,
    w: &Mat<T>,
    dy: &Mat<T>,
    dw: &mut Mat<T>,
    db: &mut [T],
) -> Mat<T> {
    dw.add_assign(&dy.matmul_tn(x));
    for i in 0..dy.rows {
        for (g, &d) in db.iter_mut().zip(dy.row(i)) {
            *g += d;
        }
    }
    dy.matmul(w)
}

pub const LN_EPS: f64 = 1e-5;

pub struct NormCache<T> {
    pub xhat: Mat<T>,
    pub inv_std: Vec<T>,
}

/// Per-row layer normalization with learned gain and bias.
pub fn layer_norm<T: Real>(x: &Mat<T>, gain: &[T], bias: &[T]) -> (Mat<T>, NormCache<T>) {
    let d = x.cols;
    let inv_d = T::from_f64(1.0 / d as f64);
    let eps = T::from_f64(LN_EPS);
    let mut y = Mat::zeros(x.rows, d);
    let mut xhat = Mat::zeros(x.rows, d);
    let mut inv_std = vec![T::zero(); x.rows];
    for i in 0..x.rows {
        let row = x.row(i);
        let mut mean = T::zero();
        for &v in row {
            mean += v;
        }
        mean = mean * inv_d;
        let mut var = T::zero();
        for &v in row {
            let c = v - mean;
            var += c * c;
        }
        var = var * inv_d;
        let istd = (var + eps).sqrt().recip();
        inv_std[i] = istd;
        let xh = xhat.row_mut(i);
        let yr = y.row_mut(i);
        for j in 0..d {
            let h = (row[j] - mean) * istd;
            xh[j] = h;
            yr[j] = gain[j] * h + bias[j];
        }
    }
    (
        y,
        NormCache { xhat, inv_std },
    )
}

/// Returns dx, accumulates dgain/dbias.
pub fn layer_norm_backward<T: Real>(
    dy: &Mat<T>,
    cache: &NormCache<T>,
    gain: &[T],
    dgain: &mut [T],
    dbias: &mut [T],
) -> Mat<T> {
    let d = dy.cols;
    let inv_d = T::from_f64(1.0 / d as f64);
    let mut dx = Mat::zeros(dy.rows, d);
    for i in 0..dy.rows {
        let dyr = dy.row(i);
        let xh = cache.xhat.row(i);
        let istd = cache.inv_std[i];
        let mut mean_dxhat = T::zero();
        let mut mean_dxhat_xhat = T::zero();
        for j in 0..d {
            let dxh = dyr[j] * gain[j];
            mean_dxhat += dxh;
            mean_dxhat_xhat += dxh * xh[j];
            dgain[j] += dyr[j] * xh[j];
            dbias[j] += dyr[j];
        }
        mean_dxhat = mean_dxhat * inv_d;
        mean_dxhat_xhat = mean_dxhat_xhat * inv_d;
        let dxr = dx.row_mut(i);
        for j in 0..d {
            let dxh = dyr[j] * gain[j];
            dxr[j] = istd * (dxh - mean_dxhat - xh[j] * mean_dxhat_xhat);
        }
    }
    dx
}

const GELU_C: f64 = 0.7978845608028654; // sqrt(2/pi)
const GELU_A: f64 = 0.044715;

/// tanh-approximated GELU, elementwise; caches tanh(u) for the backward pass.
pub fn gelu<T: Real>(x: &Mat<T>) -> (Mat<T>, Mat<T>) {
    let c = T::from_f64(GELU_C);
    let a = T::from_f64(GELU_A);
    let half = T::from_f64(0.5);
    let mut y = Mat::zeros(x.rows, x.cols);
    let mut tanh_u = Mat::zeros(x.rows, x.cols);
    for (i, &v) in x.data.iter().enumerate() {
        let u = c * (v + a * v * v * v);
        let t = u.tanh();
        tanh_u.data[i] = t;
        y.data[i] = half * v * (T::one() + t);
    }
    (y, tanh_u)
}

pub fn gelu_backward<T: Real>(x: &Mat<T>, tanh_u: &Mat<T>, dy: &Mat<T>) -> Mat<T> {
    let c = T::from_f64(GELU_C);
    let a3 = T::from_f64(3.0 * GELU_A);
    let half = T::from_f64(0.5);
    let mut dx = Mat::zeros(x.rows, x.cols);
    for i in 0..x.data.len() {
        let v = x.data[i];
        let t = tanh_u.data[i];
        let sech2 = T::one() - t * t;
        let du = c * (T::one() + a3 * v * v);
        let grad = half * (T::one() + t) + half * v * sech2 * du;
        dx.data[i] = dy.data[i] * grad;
    }
    dx
}

/// Row-wise softmax in place.
pub fn softmax_rows<T: Real>(scores: &mut Mat<T>) {
    for i in 0..scores.rows {
        let row = scores.row_mut(i);
        let mut max = row[0];
        for &v in row.iter() {
            if v > max {
                max = v;
            }
        }
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        let inv = sum.recip();
        for v in row.iter_mut() {
            *v *= inv;
        }
    }
}

/// dS given probabilities P and dP: ds = p .* (dp - sum(dp .* p)).
pub fn softmax_backward<T: Real>(probs: &Mat<T>, dprobs: &Mat<T>) -> Mat<T> {
    let mut ds = Mat::zeros(probs.rows, probs.cols);
    for i in 0..probs.rows {
        let p = probs.row(i);
        let dp = dprobs.row(i);
        let mut dot = T::zero();
        for j in 0..probs.cols {
            dot += p[j] * dp[j];
        }
        let dsr = ds.row_mut(i);
        for j in 0..probs.cols {
            dsr[j] = p[j] * (dp[j] - dot);
        }
    }
    ds
}
