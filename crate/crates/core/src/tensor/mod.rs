//! Dense real and complex tensors plus the numeric pieces of a Fourier
//! neural operator: radix-2 FFTs, spectral and pointwise layers with
//! hand-written backward passes, and Adam.
//!
//! Multi-channel fields are stored channel-major, `[channels, m, n]`, so
//! each channel is a contiguous `m×n` row-major plane.

mod adam;
mod fft;
mod layers;

pub use adam::{adam_step, AdamState, LrSchedule};
pub use fft::{fft2, ifft2, kept_indices, Radix2, SpectralPlan};
pub use layers::{
    grad_check, pointwise_affine, pointwise_affine_backward, relu, relu_backward, spectral_conv,
    spectral_conv_backward, spectral_conv_forward, Differentiable, GradCheckReport, LayerGrads, PointwiseAffine, Relu, SpectralConv,
};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major `f64` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(dims: &[usize]) -> Self {
        Self {
            dims: dims.to_vec(),
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub fn from_vec(dims: &[usize], data: Vec<f64>) -> Result<Self> {
        let count: usize = dims.iter().product();
        if count != data.len() {
            return Err(Error::shape(format!(
                "dims {dims:?} need {count} values, got {}",
                data.len()
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            data,
        })
    }

    pub fn full(dims: &[usize], value: f64) -> Self {
        Self {
            dims: dims.to_vec(),
            data: vec![value; dims.iter().product()],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
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

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `(channels, m, n)` of a channel-major field.
    pub fn field_dims(&self) -> Result<(usize, usize, usize)> {
        match self.dims.as_slice() {
            &[c, m, n] => Ok((c, m, n)),
            other => Err(Error::shape(format!("expected [channels, m, n], got {other:?}"))),
        }
    }
}

/// Row-major complex tensor; `Complex64` is `repr(C)`, so the buffer is
/// interleaved `(re, im)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor {
    dims: Vec<usize>,
    data: Vec<Complex64>,
}

impl ComplexTensor {
    pub fn zeros(dims: &[usize]) -> Self {
        Self {
            dims: dims.to_vec(),
            data: vec![Complex64::new(0.0, 0.0); dims.iter().product()],
        }
    }

    pub fn from_vec(dims: &[usize], data: Vec<Complex64>) -> Result<Self> {
        let count: usize = dims.iter().product();
        if count != data.len() {
            return Err(Error::shape(format!(
                "dims {dims:?} need {count} values, got {}",
                data.len()
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            data,
        })
    }

    /// From interleaved `(re, im)` pairs.
    pub fn from_interleaved(dims: &[usize], pairs: &[f64]) -> Result<Self> {
        if pairs.len() % 2 != 0 {
            return Err(Error::shape("interleaved buffer has odd length"));
        }
        let data = pairs.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        Self::from_vec(dims, data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// View as `2·len` interleaved reals.
    pub fn as_reals(&self) -> &[f64] {
        complex_as_reals(&self.data)
    }

    pub fn as_reals_mut(&mut self) -> &mut [f64] {
        complex_as_reals_mut(&mut self.data)
    }
}

pub(crate) fn complex_as_reals(data: &[Complex64]) -> &[f64] {
    // SAFETY: Complex<f64> is repr(C) { re, im } with no padding.
    unsafe { std::slice::from_raw_parts(data.as_ptr() as *const f64, data.len() * 2) }
}

pub(crate) fn complex_as_reals_mut(data: &mut [Complex64]) -> &mut [f64] {
    // SAFETY: as above; the borrow is unique.
    unsafe { std::slice::from_raw_parts_mut(data.as_mut_ptr() as *mut f64, data.len() * 2) }
}

/// Dot product with eight independent accumulators (fixed summation order).
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}
