use super::params::{Activation, FnoArch, FnoParams};
use crate::error::{Error, Result};
use crate::tensor::{
    pointwise_affine, pointwise_affine_backward, spectral_conv_backward, spectral_conv_forward, ComplexTensor,
    SpectralPlan, Tensor,
};

/// Activations recorded by [`forward_with_cache`] for [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Tensor,
    /// Input of every Fourier layer followed by the last layer's output.
    zs: Vec<Tensor>,
    modes: Vec<ComplexTensor>,
    /// Activated hidden layer of the projection.
    hidden: Tensor,
    plan: SpectralPlan,
}

fn activate(t: &mut Tensor, act: Activation) {
    if act == Activation::Relu {
        t.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    }
}

/// Gradient through an activation, given its output.
fn activate_backward(out: &Tensor, g: &mut Tensor, act: Activation) {
    if act == Activation::Relu {
        for (d, &o) in g.data_mut().iter_mut().zip(out.data()) {
            if o <= 0.0 {
                *d = 0.0;
            }
        }
    }
}

fn layer_activation(arch: &FnoArch, l: usize) -> Option<Activation> {
    if l + 1 == arch.layers && !arch.final_layer_activation {
        None
    } else {
        Some(arch.activation)
    }
}

fn with_coords(input: &Tensor, arch: &FnoArch) -> Result<Tensor> {
    let (c, m, n) = input.field_dims()?;
    if c != 1 {
        return Err(Error::shape(format!("operator input must have one channel, got {c}")));
    }
    if !arch.coord_channels {
        return Ok(input.clone());
    }
    let mut data = input.data().to_vec();
    data.extend((0..m * n).map(|k| ((k / n) as f64 + 0.5) / m as f64));
    data.extend((0..m * n).map(|k| (k % n) as f64 / n as f64));
    Tensor::from_vec(&[3, m, n], data)
}

/// `Q(F_L(…F_1(P(a))))` on a `[1, m, n]` input; no clamping.
pub fn forward(params: &FnoParams, arch: &FnoArch, input: &Tensor) -> Result<Tensor> {
    forward_with_cache(params, arch, input).map(|(out, _)| out)
}

pub fn forward_with_cache(params: &FnoParams, arch: &FnoArch, input: &Tensor) -> Result<(Tensor, ForwardCache)> {
    arch.validate()?;
    params.check_arch(arch)?;
    let (_, m, n) = input.field_dims()?;
    arch.check_grid(m, n)?;
    let plan = SpectralPlan::new(m, n, arch.modes_x, arch.modes_t)?;
    let a = with_coords(input, arch)?;

    let mut z = pointwise_affine(&a, &params.lift_weight, &params.lift_bias)?;
    let mut zs = Vec::with_capacity(arch.layers + 1);
    let mut modes = Vec::with_capacity(arch.layers);
    for (l, layer) in params.layers.iter().enumerate() {
        let (spec, y) = spectral_conv_forward(&z, &layer.spectral, &plan)?;
        let mut h = pointwise_affine(&z, &layer.weight, &layer.bias)?;
        h.data_mut().iter_mut().zip(spec.data()).for_each(|(a, b)| *a += b);
        if let Some(act) = layer_activation(arch, l) {
            activate(&mut h, act);
        }
        zs.push(std::mem::replace(&mut z, h));
        modes.push(y);
    }
    let mut hidden = pointwise_affine(&z, &params.proj1_weight, &params.proj1_bias)?;
    activate(&mut hidden, arch.activation);
    let out = pointwise_affine(&hidden, &params.proj2_weight, &params.proj2_bias)?;
    zs.push(z);
    Ok((out, ForwardCache { input: a, zs, modes, hidden, plan }))
}

/// Parameter gradients of a scalar loss whose gradient w.r.t. the output is `grad_out`.
pub fn backward(params: &FnoParams, arch: &FnoArch, cache: &ForwardCache, grad_out: &Tensor) -> Result<FnoParams> {
    if cache.zs.len() != arch.layers + 1 {
        return Err(Error::shape("forward cache does not match the architecture"));
    }
    let mut grads = FnoParams::zeros(arch);
    let (mut gh, dw, db) = pointwise_affine_backward(&cache.hidden, &params.proj2_weight, grad_out)?;
    grads.proj2_weight = dw;
    grads.proj2_bias = db;
    activate_backward(&cache.hidden, &mut gh, arch.activation);
    let (mut gz, dw, db) = pointwise_affine_backward(&cache.zs[arch.layers], &params.proj1_weight, &gh)?;
    grads.proj1_weight = dw;
    grads.proj1_bias = db;

    for l in (0..arch.layers).rev() {
        let layer = &params.layers[l];
        if let Some(act) = layer_activation(arch, l) {
            activate_backward(&cache.zs[l + 1], &mut gz, act);
        }
        let (mut dz, dw, db) = pointwise_affine_backward(&cache.zs[l], &layer.weight, &gz)?;
        let (dz_spec, dr) = spectral_conv_backward(&cache.modes[l], &layer.spectral, &cache.plan, &gz)?;
        dz.data_mut().iter_mut().zip(dz_spec.data()).for_each(|(a, b)| *a += b);
        grads.layers[l].weight = dw;
        grads.layers[l].bias = db;
        grads.layers[l].spectral = dr;
        gz = dz;
    }
    let (_, dw, db) = pointwise_affine_backward(&cache.input, &params.lift_weight, &gz)?;
    grads.lift_weight = dw;
    grads.lift_bias = db;
    Ok(grads)
}

fn fft_flops(len: usize) -> u64 {
    5 * len as u64 * len.trailing_zeros() as u64
}

/// Floating-point operation count of one forward pass (FFTs at `5N log₂N`).
pub fn forward_flops(arch: &FnoArch, m: usize, n: usize) -> u64 {
    let px = (m * n) as u64;
    let (a, d, q) = (arch.input_channels() as u64, arch.width as u64, arch.q_hidden as u64);
    let modes = (arch.modes_x * arch.modes_t) as u64;
    let affine = |din: u64, dout: u64| 2 * din * dout * px;
    // Truncated transform of one real plane: half as many row FFTs, kept columns only.
    let plane = (m as u64 / 2) * fft_flops(n) + arch.modes_t as u64 * fft_flops(m);
    let spectral = 2 * d * plane + 8 * d * d * modes;
    affine(a, d) + arch.layers as u64 * (affine(d, d) + spectral + 2 * d * px) + affine(d, q) + affine(q, 1)
}
