use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fft::SpectralPlan;
use super::{complex_as_reals, complex_as_reals_mut, dot, ComplexTensor, Tensor};
use crate::error::{Error, Result};

fn check_weights(z: &Tensor, w: &Tensor, b: &Tensor) -> Result<(usize, usize, usize, usize)> {
    let (c, m, n) = z.field_dims()?;
    let (din, dout) = match w.dims() {
        &[din, dout] => (din, dout),
        other => return Err(Error::shape(format!("weight must be [d_in, d_out], got {other:?}"))),
    };
    if din != c {
        return Err(Error::shape(format!("input has {c} channels, weight expects {din}")));
    }
    if b.dims() != [dout] {
        return Err(Error::shape(format!("bias must be [{dout}], got {:?}", b.dims())));
    }
    Ok((din, dout, m, n))
}

/// `C = A·B + β·C` over row-major buffers with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    rows: usize,
    inner: usize,
    cols: usize,
    a: (&[f64], isize, isize),
    b: (&[f64], isize, isize),
    beta: f64,
    c: &mut [f64],
) {
    debug_assert!(c.len() >= rows * cols);
    // SAFETY: callers pass buffers of at least rows·inner, inner·cols and
    // rows·cols elements laid out with the given strides.
    unsafe {
        matrixmultiply::dgemm(
            rows,
            inner,
            cols,
            1.0,
            a.0.as_ptr(),
            a.1,
            a.2,
            b.0.as_ptr(),
            b.1,
            b.2,
            beta,
            c.as_mut_ptr(),
            cols as isize,
            1,
        );
    }
}

/// `out[j, x, t] = Σ_i W[i, j]·z[i, x, t] + b[j]`.
pub fn pointwise_affine(z: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (din, dout, m, n) = check_weights(z, w, b)?;
    let px = m * n;
    let mut out = Tensor::zeros(&[dout, m, n]);
    for (j, plane) in out.data_mut().chunks_exact_mut(px).enumerate() {
        plane.fill(b.data()[j]);
    }
    // out[dout×px] = Wᵀ[dout×din] · z[din×px] + out
    gemm(
        dout,
        din,
        px,
        (w.data(), 1, dout as isize),
        (z.data(), px as isize, 1),
        1.0,
        out.data_mut(),
    );
    Ok(out)
}

/// Returns `(dz, dW, db)` for upstream gradient `g`.
pub fn pointwise_affine_backward(z: &Tensor, w: &Tensor, g: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
    let (_, m, n) = z.field_dims()?;
    let b = Tensor::zeros(&[w.dims().get(1).copied().unwrap_or(0)]);
    let (din, dout, ..) = check_weights(z, w, &b)?;
    if g.dims() != [dout, m, n] {
        return Err(Error::shape(format!("upstream gradient {:?} vs output [{dout}, {m}, {n}]", g.dims())));
    }
    let px = m * n;
    let mut dw = Tensor::zeros(&[din, dout]);
    // dW[din×dout] = z[din×px] · gᵀ[px×dout]
    gemm(din, px, dout, (z.data(), px as isize, 1), (g.data(), 1, px as isize), 0.0, dw.data_mut());
    let db = Tensor::from_vec(&[dout], g.data().chunks_exact(px).map(|p| p.iter().sum()).collect())?;
    let mut dz = Tensor::zeros(&[din, m, n]);
    // dz[din×px] = W[din×dout] · g[dout×px]
    gemm(din, dout, px, (w.data(), dout as isize, 1), (g.data(), px as isize, 1), 0.0, dz.data_mut());
    Ok((dz, dw, db))
}

pub fn relu(z: &Tensor) -> Tensor {
    let data = z.data().iter().map(|&v| v.max(0.0)).collect();
    Tensor::from_vec(z.dims(), data).expect("same shape")
}

/// Gradient through ReLU given its input `z`; the subgradient at 0 is 0.
pub fn relu_backward(z: &Tensor, g: &Tensor) -> Result<Tensor> {
    if z.dims() != g.dims() {
        return Err(Error::shape(format!("relu gradient {:?} vs input {:?}", g.dims(), z.dims())));
    }
    let data = z.data().iter().zip(g.data()).map(|(&v, &d)| if v > 0.0 { d } else { 0.0 }).collect();
    Tensor::from_vec(z.dims(), data)
}

fn check_spectral(z: &Tensor, r: &ComplexTensor, plan: &SpectralPlan) -> Result<(usize, usize)> {
    let (c, m, n) = z.field_dims()?;
    if (m, n) != (plan.m, plan.n) {
        return Err(Error::shape(format!("input grid {m}×{n}, plan built for {}×{}", plan.m, plan.n)));
    }
    match r.dims() {
        &[mk, nk, din, dout] if mk == plan.mk && nk == plan.nk && din == c => Ok((din, dout)),
        other => Err(Error::shape(format!(
            "spectral weights {other:?} incompatible with [{}, {}, {c}, d_out]",
            plan.mk, plan.nk
        ))),
    }
}

/// Spectral convolution that also returns the retained input modes
/// `[d_in, m_k, n_k]` needed by the backward pass.
pub fn spectral_conv_forward(z: &Tensor, r: &ComplexTensor, plan: &SpectralPlan) -> Result<(Tensor, ComplexTensor)> {
    let (din, dout) = check_spectral(z, r, plan)?;
    let (m, n, k) = (plan.m, plan.n, plan.modes());
    let px = m * n;
    let mut y = ComplexTensor::zeros(&[din, plan.mk, plan.nk]);
    for i in 0..din {
        plan.forward_modes(&z.data()[i * px..(i + 1) * px], &mut y.data_mut()[i * k..(i + 1) * k]);
    }
    let s = transpose(&mix_modes(&transpose(y.data(), din, k), r.data(), din, dout, k, false), k, dout);
    let mut out = Tensor::zeros(&[dout, m, n]);
    for j in 0..dout {
        plan.inverse_modes(&s[j * k..(j + 1) * k], &mut out.data_mut()[j * px..(j + 1) * px]);
    }
    Ok((out, y))
}

pub fn spectral_conv(z: &Tensor, r: &ComplexTensor, plan: &SpectralPlan) -> Result<Tensor> {
    spectral_conv_forward(z, r, plan).map(|(out, _)| out)
}

/// Per-mode channel mixing of mode-major buffers.
/// Forward: `S[mode, j] = Σ_i Y[mode, i]·R[mode, i, j]`.
/// Adjoint: `S[mode, i] = Σ_j conj(R[mode, i, j])·Y[mode, j]`.
fn mix_modes(y: &[Complex64], r: &[Complex64], din: usize, dout: usize, k: usize, adjoint: bool) -> Vec<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    if adjoint {
        let mut s = vec![zero; k * din];
        for mode in 0..k {
            let rm = &r[mode * din * dout..(mode + 1) * din * dout];
            let ym = &y[mode * dout..(mode + 1) * dout];
            for (i, out) in s[mode * din..(mode + 1) * din].iter_mut().enumerate() {
                let (mut re, mut im) = (0.0, 0.0);
                for (w, v) in rm[i * dout..(i + 1) * dout].iter().zip(ym) {
                    re += w.re * v.re + w.im * v.im;
                    im += w.re * v.im - w.im * v.re;
                }
                *out = Complex64::new(re, im);
            }
        }
        s
    } else {
        let mut s = vec![zero; k * dout];
        for mode in 0..k {
            let rm = &r[mode * din * dout..(mode + 1) * din * dout];
            let acc = &mut s[mode * dout..(mode + 1) * dout];
            for (i, v) in y[mode * din..(mode + 1) * din].iter().enumerate() {
                for (a, w) in acc.iter_mut().zip(&rm[i * dout..(i + 1) * dout]) {
                    a.re += w.re * v.re - w.im * v.im;
                    a.im += w.re * v.im + w.im * v.re;
                }
            }
        }
        s
    }
}

/// Channel-major `[c, k]` to mode-major `[k, c]` and back.
fn transpose(x: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = x[r * cols + c];
        }
    }
    out
}

/// Returns `(dz, dR)`; `dR` holds `∂L/∂Re + i·∂L/∂Im` per weight.
pub fn spectral_conv_backward(
    y: &ComplexTensor,
    r: &ComplexTensor,
    plan: &SpectralPlan,
    g: &Tensor,
) -> Result<(Tensor, ComplexTensor)> {
    let (dout, m, n) = g.field_dims()?;
    let (din, k) = match y.dims() {
        &[din, mk, nk] if mk == plan.mk && nk == plan.nk => (din, mk * nk),
        other => return Err(Error::shape(format!("cached modes {other:?} do not match plan"))),
    };
    if r.dims() != [plan.mk, plan.nk, din, dout] || (m, n) != (plan.m, plan.n) {
        return Err(Error::shape(format!(
            "spectral gradient {:?} / weights {:?} inconsistent",
            g.dims(),
            r.dims()
        )));
    }
    let px = m * n;
    let mut gt = vec![Complex64::new(0.0, 0.0); dout * k];
    for j in 0..dout {
        plan.forward_modes(&g.data()[j * px..(j + 1) * px], &mut gt[j * k..(j + 1) * k]);
    }
    let scale = 1.0 / px as f64;
    let mut dr = ComplexTensor::zeros(r.dims());
    {
        let drd = dr.data_mut();
        for mode in 0..k {
            for i in 0..din {
                let yc = y.data()[i * k + mode].conj() * scale;
                for j in 0..dout {
                    drd[(mode * din + i) * dout + j] = gt[j * k + mode] * yc;
                }
            }
        }
    }
    let back = transpose(&mix_modes(&transpose(&gt, dout, k), r.data(), din, dout, k, true), k, din);
    let mut dz = Tensor::zeros(&[din, m, n]);
    for i in 0..din {
        // inverse_modes carries 1/(mn); the forward-mode gradient needs none.
        let dst = &mut dz.data_mut()[i * px..(i + 1) * px];
        plan.inverse_modes(&back[i * k..(i + 1) * k], dst);
        dst.iter_mut().for_each(|v| *v *= px as f64 * scale);
    }
    Ok((dz, dr))
}

/// Gradients produced by one backward pass of a layer.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub input: Tensor,
    /// One flat buffer per entry of [`Differentiable::params`], same order.
    pub params: Vec<Vec<f64>>,
}

/// A layer with a recorded forward pass and a hand-written backward pass.
pub trait Differentiable {
    fn forward(&mut self, x: &Tensor) -> Result<Tensor>;
    /// Errors if called before `forward`.
    fn backward(&mut self, grad_out: &Tensor) -> Result<LayerGrads>;
    fn params(&self) -> Vec<&[f64]>;
    fn params_mut(&mut self) -> Vec<&mut [f64]>;
}

fn no_forward(layer: &str) -> Error {
    Error::InvalidArgument(format!("{layer}: backward called before forward"))
}

#[derive(Debug, Clone)]
pub struct PointwiseAffine {
    pub weight: Tensor,
    pub bias: Tensor,
    input: Option<Tensor>,
}

impl PointwiseAffine {
    pub fn new(weight: Tensor, bias: Tensor) -> Self {
        Self { weight, bias, input: None }
    }
}

impl Differentiable for PointwiseAffine {
    fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let out = pointwise_affine(x, &self.weight, &self.bias)?;
        self.input = Some(x.clone());
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<LayerGrads> {
        let z = self.input.as_ref().ok_or_else(|| no_forward("pointwise_affine"))?;
        let (dz, dw, db) = pointwise_affine_backward(z, &self.weight, grad_out)?;
        Ok(LayerGrads { input: dz, params: vec![dw.into_data(), db.into_data()] })
    }

    fn params(&self) -> Vec<&[f64]> {
        vec![self.weight.data(), self.bias.data()]
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.weight.data_mut(), self.bias.data_mut()]
    }
}

#[derive(Debug, Clone, Default)]
pub struct Relu {
    input: Option<Tensor>,
}

impl Relu {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Differentiable for Relu {
    fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        self.input = Some(x.clone());
        Ok(relu(x))
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<LayerGrads> {
        let z = self.input.as_ref().ok_or_else(|| no_forward("relu"))?;
        Ok(LayerGrads { input: relu_backward(z, grad_out)?, params: Vec::new() })
    }

    fn params(&self) -> Vec<&[f64]> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        Vec::new()
    }
}

#[derive(Debug, Clone)]
pub struct SpectralConv {
    pub weights: ComplexTensor,
    plan: SpectralPlan,
    modes: Option<ComplexTensor>,
}

impl SpectralConv {
    /// `weights` is `[m_k, n_k, d_in, d_out]` over the retained modes.
    pub fn new(weights: ComplexTensor, m: usize, n: usize) -> Result<Self> {
        let (mk, nk) = match weights.dims() {
            &[mk, nk, _, _] => (mk, nk),
            other => return Err(Error::shape(format!("spectral weights must be rank 4, got {other:?}"))),
        };
        Ok(Self { weights, plan: SpectralPlan::new(m, n, mk, nk)?, modes: None })
    }

    pub fn plan(&self) -> &SpectralPlan {
        &self.plan
    }
}

impl Differentiable for SpectralConv {
    fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let (out, y) = spectral_conv_forward(x, &self.weights, &self.plan)?;
        self.modes = Some(y);
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<LayerGrads> {
        let y = self.modes.as_ref().ok_or_else(|| no_forward("spectral_conv"))?;
        let (dz, dr) = spectral_conv_backward(y, &self.weights, &self.plan, grad_out)?;
        Ok(LayerGrads { input: dz, params: vec![complex_as_reals(dr.data()).to_vec()] })
    }

    fn params(&self) -> Vec<&[f64]> {
        vec![complex_as_reals(self.weights.data())]
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        vec![complex_as_reals_mut(self.weights.data_mut())]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    /// Max relative error over input gradients.
    pub input: f64,
    /// Max relative error over parameter gradients (0 for parameter-free layers).
    pub params: f64,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn max(&self) -> f64 {
        self.input.max(self.params)
    }
}

const FD_STEP: f64 = 1e-6;

fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = numeric.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-12);
    analytic.iter().zip(numeric).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
}

/// Compares analytic gradients of `L = Σ w ⊙ layer(x)` (random fixed `w`)
/// against central differences with step 1e−6. Errors are relative to the
/// largest numeric gradient magnitude.
pub fn grad_check<D: Differentiable + ?Sized>(layer: &mut D, input: &Tensor, seed: u64) -> Result<GradCheckReport> {
    let out = layer.forward(input)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..out.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let upstream = Tensor::from_vec(out.dims(), w.clone())?;
    let grads = layer.backward(&upstream)?;
    let loss = |layer: &mut D, x: &Tensor| -> Result<f64> { Ok(dot(layer.forward(x)?.data(), &w)) };

    let mut x = input.clone();
    let mut numeric = vec![0.0; x.len()];
    for k in 0..x.len() {
        let orig = x.data()[k];
        x.data_mut()[k] = orig + FD_STEP;
        let plus = loss(layer, &x)?;
        x.data_mut()[k] = orig - FD_STEP;
        let minus = loss(layer, &x)?;
        x.data_mut()[k] = orig;
        numeric[k] = (plus - minus) / (2.0 * FD_STEP);
    }
    let input_err = rel_err(grads.input.data(), &numeric);
    let mut checked = numeric.len();

    let mut param_err: f64 = 0.0;
    let count = layer.params().len();
    for p in 0..count {
        let len = layer.params()[p].len();
        let mut numeric = vec![0.0; len];
        for k in 0..len {
            let orig = layer.params()[p][k];
            layer.params_mut()[p][k] = orig + FD_STEP;
            let plus = loss(layer, input)?;
            layer.params_mut()[p][k] = orig - FD_STEP;
            let minus = loss(layer, input)?;
            layer.params_mut()[p][k] = orig;
            numeric[k] = (plus - minus) / (2.0 * FD_STEP);
        }
        param_err = param_err.max(rel_err(&grads.params[p], &numeric));
        checked += len;
    }
    Ok(GradCheckReport { input: input_err, params: param_err, checked })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::fft::{fft2, ifft2};

    fn random(dims: &[usize], seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = dims.iter().product();
        Tensor::from_vec(dims, (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    fn random_complex(dims: &[usize], seed: u64) -> ComplexTensor {
        let len: usize = dims.iter().product();
        ComplexTensor::from_interleaved(dims, random(&[2 * len], seed).data()).unwrap()
    }

    fn identity_weights(mk: usize, nk: usize, d: usize) -> ComplexTensor {
        let mut r = ComplexTensor::zeros(&[mk, nk, d, d]);
        for mode in 0..mk * nk {
            for i in 0..d {
                r.data_mut()[(mode * d + i) * d + i] = Complex64::new(1.0, 0.0);
            }
        }
        r
    }

    #[test]
    fn affine_identity_and_sum() {
        let z = random(&[3, 4, 8], 1);
        let mut eye = Tensor::zeros(&[3, 3]);
        for i in 0..3 {
            eye.data_mut()[i * 3 + i] = 1.0;
        }
        let out = pointwise_affine(&z, &eye, &Tensor::zeros(&[3])).unwrap();
        assert_eq!(out, z);

        let z = random(&[2, 4, 4], 2);
        let out = pointwise_affine(&z, &Tensor::full(&[2, 1], 1.0), &Tensor::zeros(&[1])).unwrap();
        for p in 0..16 {
            assert_eq!(out.data()[p], z.data()[p] + z.data()[16 + p]);
        }
    }

    #[test]
    fn affine_matches_loop_oracle() {
        let (din, dout, m, n) = (3, 5, 4, 8);
        let z = random(&[din, m, n], 3);
        let w = random(&[din, dout], 4);
        let b = random(&[dout], 5);
        let out = pointwise_affine(&z, &w, &b).unwrap();
        for j in 0..dout {
            for p in 0..m * n {
                let mut acc = b.data()[j];
                for i in 0..din {
                    acc += w.data()[i * dout + j] * z.data()[i * m * n + p];
                }
                assert!((out.data()[j * m * n + p] - acc).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn affine_shape_errors() {
        let z = random(&[2, 4, 4], 1);
        assert!(pointwise_affine(&z, &Tensor::zeros(&[3, 1]), &Tensor::zeros(&[1])).is_err());
        assert!(pointwise_affine(&z, &Tensor::zeros(&[2, 1]), &Tensor::zeros(&[2])).is_err());
    }

    #[test]
    fn sum_loss_gradient_is_ones() {
        let mut eye = Tensor::zeros(&[2, 2]);
        eye.data_mut()[0] = 1.0;
        eye.data_mut()[3] = 1.0;
        let mut layer = PointwiseAffine::new(eye, Tensor::zeros(&[2]));
        let z = random(&[2, 4, 4], 7);
        let out = layer.forward(&z).unwrap();
        let g = layer.backward(&Tensor::full(out.dims(), 1.0)).unwrap();
        assert!(g.input.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn relu_values() {
        let z = Tensor::from_vec(&[2], vec![-1.0, 2.0]).unwrap();
        assert_eq!(relu(&z).data(), &[0.0, 2.0]);
        let g = relu_backward(&z, &Tensor::full(&[2], 3.0)).unwrap();
        assert_eq!(g.data(), &[0.0, 3.0]);
    }

    #[test]
    fn spectral_full_identity() {
        let (m, n, d) = (8, 8, 2);
        let z = random(&[d, m, n], 8);
        let plan = SpectralPlan::new(m, n, m, n).unwrap();
        let out = spectral_conv(&z, &identity_weights(m, n, d), &plan).unwrap();
        assert!(out.max_abs_diff(&z) <= 1e-10);
    }

    #[test]
    fn spectral_identity_is_low_pass() {
        let (m, n, d, mk, nk) = (8, 16, 2, 4, 6);
        let z = random(&[d, m, n], 9);
        let plan = SpectralPlan::new(m, n, mk, nk).unwrap();
        let out = spectral_conv(&z, &identity_weights(mk, nk, d), &plan).unwrap();
        // Oracle: full spectrum with dropped modes zeroed.
        let mut spec = fft2(&z).unwrap();
        for c in 0..d {
            for a in 0..m {
                for b in 0..n {
                    if !plan.kept_rows().contains(&a) || !plan.kept_cols().contains(&b) {
                        spec.data_mut()[(c * m + a) * n + b] = Complex64::new(0.0, 0.0);
                    }
                }
            }
        }
        let reference = ifft2(&spec).unwrap();
        assert!(out.max_abs_diff(&reference) <= 1e-12);
    }

    #[test]
    fn spectral_constant_input() {
        let z = Tensor::full(&[2, 8, 8], 0.7);
        let plan = SpectralPlan::new(8, 8, 4, 4).unwrap();
        let out = spectral_conv(&z, &random_complex(&[4, 4, 2, 3], 10), &plan).unwrap();
        for j in 0..3 {
            let plane = &out.data()[j * 64..(j + 1) * 64];
            assert!(plane.iter().all(|v| (v - plane[0]).abs() < 1e-12));
        }
    }

    #[test]
    fn spectral_is_linear() {
        let plan = SpectralPlan::new(8, 8, 4, 4).unwrap();
        let (z1, z2) = (random(&[2, 8, 8], 11), random(&[2, 8, 8], 12));
        let r = random_complex(&[4, 4, 2, 2], 13);
        let sum = Tensor::from_vec(&[2, 8, 8], z1.data().iter().zip(z2.data()).map(|(a, b)| a + 2.0 * b).collect())
            .unwrap();
        let lhs = spectral_conv(&sum, &r, &plan).unwrap();
        let (o1, o2) = (spectral_conv(&z1, &r, &plan).unwrap(), spectral_conv(&z2, &r, &plan).unwrap());
        for k in 0..lhs.len() {
            assert!((lhs.data()[k] - o1.data()[k] - 2.0 * o2.data()[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_shape_errors() {
        let plan = SpectralPlan::new(8, 8, 4, 4).unwrap();
        let z = random(&[2, 8, 8], 1);
        assert!(spectral_conv(&z, &ComplexTensor::zeros(&[4, 4, 3, 2]), &plan).is_err());
        assert!(spectral_conv(&random(&[2, 8, 16], 1), &ComplexTensor::zeros(&[4, 4, 2, 2]), &plan).is_err());
    }

    #[test]
    fn backward_before_forward_errors() {
        let mut layer = SpectralConv::new(ComplexTensor::zeros(&[4, 4, 2, 2]), 8, 8).unwrap();
        assert!(layer.backward(&Tensor::zeros(&[2, 8, 8])).is_err());
        assert!(Relu::new().backward(&Tensor::zeros(&[1])).is_err());
        let mut affine = PointwiseAffine::new(Tensor::zeros(&[1, 1]), Tensor::zeros(&[1]));
        assert!(affine.backward(&Tensor::zeros(&[1, 2, 2])).is_err());
    }

    #[test]
    fn grad_check_spectral() {
        let mut layer = SpectralConv::new(random_complex(&[4, 4, 2, 2], 20), 8, 8).unwrap();
        let report = grad_check(&mut layer, &random(&[2, 8, 8], 21), 22).unwrap();
        assert!(report.max() <= 1e-5, "{report:?}");
    }

    #[test]
    fn grad_check_affine() {
        let mut layer = PointwiseAffine::new(random(&[2, 3], 30), random(&[3], 31));
        let report = grad_check(&mut layer, &random(&[2, 8, 8], 32), 33).unwrap();
        assert!(report.max() <= 1e-7, "{report:?}");
    }

    #[test]
    fn grad_check_relu_away_from_kink() {
        let mut x = random(&[2, 8, 8], 40);
        for v in x.data_mut() {
            *v += 0.1f64.copysign(*v);
        }
        let report = grad_check(&mut Relu::new(), &x, 41).unwrap();
        assert!(report.max() <= 1e-7, "{report:?}");
    }

    #[test]
    fn two_layer_chain_by_hand() {
        // Two points, one channel: y = relu(w1·z + b1), L = Σ w2·y.
        let z = Tensor::from_vec(&[1, 1, 2], vec![1.0, -2.0]).unwrap();
        let mut a = PointwiseAffine::new(Tensor::full(&[1, 1], 3.0), Tensor::full(&[1], 1.0));
        let mut r = Relu::new();
        let h = a.forward(&z).unwrap();
        assert_eq!(h.data(), &[4.0, -5.0]);
        let y = r.forward(&h).unwrap();
        assert_eq!(y.data(), &[4.0, 0.0]);
        let up = Tensor::from_vec(&[1, 1, 2], vec![0.5, 0.5]).unwrap();
        let g = a.backward(&r.backward(&up).unwrap().input).unwrap();
        // dL/dz = 0.5·3 at the active point, 0 at the clipped one.
        assert_eq!(g.input.data(), &[1.5, 0.0]);
        assert_eq!(g.params[0], vec![0.5]);
        assert_eq!(g.params[1], vec![0.5]);
    }
}
