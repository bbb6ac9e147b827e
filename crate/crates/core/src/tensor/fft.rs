use std::f64::consts::PI;

use num_complex::Complex64;

use super::{ComplexTensor, Tensor};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Iterative radix-2 decimation-in-time FFT of one length.
#[derive(Debug, Clone)]
pub struct Radix2 {
    len: usize,
    /// Per-stage twiddles `exp(−2πik/size)`, `k < size/2`, for sizes 8, 16, …, len,
    /// stored back to back.
    forward: Vec<Complex64>,
    inverse: Vec<Complex64>,
    swaps: Vec<(u32, u32)>,
}

impl Radix2 {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "FFT length must be a power of two, got {len}"
            )));
        }
        let bits = len.trailing_zeros();
        let mut forward = Vec::new();
        let mut size = 8;
        while size <= len {
            for k in 0..size / 2 {
                let theta = -2.0 * PI * k as f64 / size as f64;
                forward.push(Complex64::new(theta.cos(), theta.sin()));
            }
            size *= 2;
        }
        let inverse = forward.iter().map(|w| w.conj()).collect();
        let swaps = (0..len)
            .filter_map(|i| {
                let j = if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) };
                (j > i).then_some((i as u32, j as u32))
            })
            .collect();
        Ok(Self { len, forward, inverse, swaps })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unnormalised transform in place; `inverse` flips the exponent sign.
    pub fn process(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.len;
        assert_eq!(buf.len(), n);
        for &(i, j) in &self.swaps {
            buf.swap(i as usize, j as usize);
        }
        if n >= 2 {
            for pair in buf.chunks_exact_mut(2) {
                let (a, b) = (pair[0], pair[1]);
                pair[0] = a + b;
                pair[1] = a - b;
            }
        }
        if n >= 4 {
            // Size-4 butterflies: twiddles 1 and ∓i.
            for quad in buf.chunks_exact_mut(4) {
                let (a0, a1, b0, b1) = (quad[0], quad[1], quad[2], quad[3]);
                let t1 = if inverse { Complex64::new(-b1.im, b1.re) } else { Complex64::new(b1.im, -b1.re) };
                quad[0] = a0 + b0;
                quad[2] = a0 - b0;
                quad[1] = a1 + t1;
                quad[3] = a1 - t1;
            }
        }
        let table = if inverse { &self.inverse } else { &self.forward };
        let mut offset = 0;
        let mut size = 8;
        while size <= n {
            let half = size / 2;
            let tw = &table[offset..offset + half];
            for block in buf.chunks_exact_mut(size) {
                let (lo, hi) = block.split_at_mut(half);
                for ((a, b), w) in lo.iter_mut().zip(hi.iter_mut()).zip(tw) {
                    let t = Complex64::new(b.re * w.re - b.im * w.im, b.re * w.im + b.im * w.re);
                    let u = *a;
                    *a = u + t;
                    *b = u - t;
                }
            }
            offset += half;
            size *= 2;
        }
    }
}

fn plane_fft(plane: &mut [Complex64], m: usize, n: usize, rows: &Radix2, cols: &Radix2, inverse: bool) {
    for row in plane.chunks_exact_mut(n) {
        rows.process(row, inverse);
    }
    let mut col = vec![ZERO; m];
    for j in 0..n {
        for i in 0..m {
            col[i] = plane[i * n + j];
        }
        cols.process(&mut col, inverse);
        for i in 0..m {
            plane[i * n + j] = col[i];
        }
    }
}

/// Unnormalised 2-D DFT of every channel of a `[c, m, n]` real tensor.
pub fn fft2(x: &Tensor) -> Result<ComplexTensor> {
    let (c, m, n) = x.field_dims()?;
    let rows = Radix2::new(n)?;
    let cols = Radix2::new(m)?;
    let mut data: Vec<Complex64> = x.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for plane in data.chunks_exact_mut(m * n) {
        plane_fft(plane, m, n, &rows, &cols, false);
    }
    debug_assert_eq!(data.len(), c * m * n);
    ComplexTensor::from_vec(&[c, m, n], data)
}

/// Real part of the normalised (`1/(mn)`) inverse 2-D DFT, per channel.
pub fn ifft2(spectrum: &ComplexTensor) -> Result<Tensor> {
    let (c, m, n) = match spectrum.dims() {
        &[c, m, n] => (c, m, n),
        other => return Err(Error::shape(format!("expected [channels, m, n], got {other:?}"))),
    };
    let rows = Radix2::new(n)?;
    let cols = Radix2::new(m)?;
    let mut data = spectrum.data().to_vec();
    for plane in data.chunks_exact_mut(m * n) {
        plane_fft(plane, m, n, &rows, &cols, true);
    }
    let scale = 1.0 / (m * n) as f64;
    Tensor::from_vec(&[c, m, n], data.iter().map(|z| z.re * scale).collect())
}

/// Indices of the retained low frequencies: the first and last `kept/2`.
pub fn kept_indices(len: usize, kept: usize) -> Vec<usize> {
    let half = kept / 2;
    (0..half).chain(len - half..len).collect()
}

/// Truncated 2-D transforms for one `(m, n, m_k, n_k)` configuration.
///
/// Only the `m_k × n_k` retained modes are ever produced or consumed, and
/// real-valued planes are transformed two rows at a time.
#[derive(Debug, Clone)]
pub struct SpectralPlan {
    pub m: usize,
    pub n: usize,
    pub mk: usize,
    pub nk: usize,
    rows: Radix2,
    cols: Radix2,
    kept_rows: Vec<usize>,
    kept_cols: Vec<usize>,
}

impl SpectralPlan {
    pub fn new(m: usize, n: usize, mk: usize, nk: usize) -> Result<Self> {
        if mk == 0 || nk == 0 || mk % 2 != 0 || nk % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "retained modes must be positive and even, got {mk}×{nk}"
            )));
        }
        if mk > m || nk > n {
            return Err(Error::shape(format!(
                "cannot retain {mk}×{nk} modes on a {m}×{n} grid"
            )));
        }
        Ok(Self {
            m,
            n,
            mk,
            nk,
            rows: Radix2::new(n)?,
            cols: Radix2::new(m)?,
            kept_rows: kept_indices(m, mk),
            kept_cols: kept_indices(n, nk),
        })
    }

    pub fn modes(&self) -> usize {
        self.mk * self.nk
    }

    pub fn kept_rows(&self) -> &[usize] {
        &self.kept_rows
    }

    pub fn kept_cols(&self) -> &[usize] {
        &self.kept_cols
    }

    /// Unnormalised DFT of a real `m×n` plane at the retained modes, `mk×nk`.
    pub fn forward_modes(&self, x: &[f64], out: &mut [Complex64]) {
        let (m, n, nk) = (self.m, self.n, self.nk);
        debug_assert_eq!(x.len(), m * n);
        debug_assert_eq!(out.len(), self.mk * nk);
        let mut partial = vec![ZERO; m * nk];
        let mut buf = vec![ZERO; n];
        for r in (0..m).step_by(2) {
            let (a, b) = (&x[r * n..(r + 1) * n], &x[(r + 1) * n..(r + 2) * n]);
            for t in 0..n {
                buf[t] = Complex64::new(a[t], b[t]);
            }
            self.rows.process(&mut buf, false);
            for (kb, &col) in self.kept_cols.iter().enumerate() {
                let z = buf[col];
                let zc = buf[(n - col) % n].conj();
                partial[r * nk + kb] = (z + zc) * 0.5;
                // (z − zc) / 2i
                let d = (z - zc) * 0.5;
                partial[(r + 1) * nk + kb] = Complex64::new(d.im, -d.re);
            }
        }
        let mut col = vec![ZERO; m];
        for kb in 0..nk {
            for i in 0..m {
                col[i] = partial[i * nk + kb];
            }
            self.cols.process(&mut col, false);
            for (ka, &row) in self.kept_rows.iter().enumerate() {
                out[ka * nk + kb] = col[row];
            }
        }
    }

    /// Real part of the normalised inverse DFT of a spectrum that is zero
    /// outside the retained modes.
    pub fn inverse_modes(&self, modes: &[Complex64], out: &mut [f64]) {
        let (m, n, nk) = (self.m, self.n, self.nk);
        debug_assert_eq!(modes.len(), self.mk * nk);
        debug_assert_eq!(out.len(), m * n);
        let mut partial = vec![ZERO; m * nk];
        let mut col = vec![ZERO; m];
        for kb in 0..nk {
            col.iter_mut().for_each(|z| *z = ZERO);
            for (ka, &row) in self.kept_rows.iter().enumerate() {
                col[row] = modes[ka * nk + kb];
            }
            self.cols.process(&mut col, true);
            for i in 0..m {
                partial[i * nk + kb] = col[i];
            }
        }
        // Re(ifft(A)) = ifft((A[k] + conj(A[−k]))/2); two Hermitian rows share
        // one transform as real and imaginary parts.
        let scale = 1.0 / (m * n) as f64;
        let mut buf = vec![ZERO; n];
        for r in (0..m).step_by(2) {
            buf.iter_mut().for_each(|z| *z = ZERO);
            for (kb, &c) in self.kept_cols.iter().enumerate() {
                let a = partial[r * nk + kb] * 0.5;
                let b = partial[(r + 1) * nk + kb] * 0.5;
                let mirror = (n - c) % n;
                // a + i·b at c, conj(a) + i·conj(b) at −c
                buf[c] += Complex64::new(a.re - b.im, a.im + b.re);
                buf[mirror] += Complex64::new(a.re + b.im, -a.im + b.re);
            }
            self.rows.process(&mut buf, true);
            for t in 0..n {
                out[r * n + t] = buf[t].re * scale;
                out[(r + 1) * n + t] = buf[t].im * scale;
            }
        }
    }
}
