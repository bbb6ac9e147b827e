use rayon::prelude::*;

use super::losses::{data_loss_grad, physics_penalty_grad};
use crate::datagen::ProblemSample;
use crate::error::{Error, Result};
use crate::model::{backward, forward_with_cache, FnoArch, FnoParams};
use crate::pde::{FluxParams, Grid};
use crate::tensor::Tensor;

/// Discretisation the physics residual is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsContext {
    pub grid: Grid,
    pub flux: FluxParams,
}

#[derive(Debug, Clone)]
pub struct SampleLoss {
    pub data: f64,
    pub physics: f64,
    /// `L² + λ·P²`
    pub objective: f64,
    pub grads: FnoParams,
}

#[derive(Debug, Clone)]
pub struct BatchLoss {
    /// Mean objective over the batch.
    pub objective: f64,
    pub data: f64,
    pub physics: f64,
    /// Gradient of the mean objective.
    pub grads: FnoParams,
}

pub fn sample_tensor(values: &[f64], m: usize, n: usize) -> Result<Tensor> {
    Tensor::from_vec(&[1, m, n], values.to_vec())
}

/// Objective and parameter gradients for one sample.
pub fn sample_loss(
    params: &FnoParams,
    arch: &FnoArch,
    sample: &ProblemSample,
    ctx: &PhysicsContext,
    lambda: f64,
) -> Result<SampleLoss> {
    if (sample.m, sample.n) != (ctx.grid.m, ctx.grid.n) {
        return Err(Error::shape(format!(
            "sample is {}×{}, physics grid {}×{}",
            sample.m, sample.n, ctx.grid.m, ctx.grid.n
        )));
    }
    let input = sample_tensor(&sample.input, sample.m, sample.n)?;
    let (pred, cache) = forward_with_cache(params, arch, &input)?;
    let (data, physics, upstream) = output_gradient(pred.data(), sample, ctx, lambda)?;
    let grads = backward(params, arch, &cache, &Tensor::from_vec(pred.dims(), upstream)?)?;
    Ok(SampleLoss { data, physics, objective: data * data + lambda * physics * physics, grads })
}

/// `(L, P, ∂(L² + λP²)/∂pred)` for one prediction.
pub fn output_gradient(
    pred: &[f64],
    sample: &ProblemSample,
    ctx: &PhysicsContext,
    lambda: f64,
) -> Result<(f64, f64, Vec<f64>)> {
    let (data, dl) = data_loss_grad(pred, &sample.target)?;
    let (physics, dp) = physics_penalty_grad(pred, sample.kind, &ctx.grid, &ctx.flux)?;
    let mut upstream: Vec<f64> = dl.iter().map(|g| 2.0 * data * g).collect();
    if lambda != 0.0 {
        for (u, g) in upstream.iter_mut().zip(&dp) {
            *u += 2.0 * lambda * physics * g;
        }
    }
    Ok((data, physics, upstream))
}

/// `mean_i [L_i² + λ·P_i²]` and its gradient. Samples fan out over the rayon
/// pool in groups; per-sample gradients are summed in batch order, so the
/// result does not depend on the thread count.
pub fn objective(
    params: &FnoParams,
    arch: &FnoArch,
    batch: &[&ProblemSample],
    ctx: &PhysicsContext,
    lambda: f64,
) -> Result<BatchLoss> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let group = rayon::current_num_threads().max(1);
    let mut total = BatchLoss { objective: 0.0, data: 0.0, physics: 0.0, grads: FnoParams::zeros(arch) };
    for chunk in batch.chunks(group) {
        let losses: Vec<SampleLoss> = if chunk.len() == 1 {
            vec![sample_loss(params, arch, chunk[0], ctx, lambda)?]
        } else {
            chunk.par_iter().map(|s| sample_loss(params, arch, s, ctx, lambda)).collect::<Result<_>>()?
        };
        for l in losses {
            total.objective += l.objective;
            total.data += l.data;
            total.physics += l.physics;
            total.grads.add_scaled(&l.grads, 1.0);
        }
    }
    let scale = 1.0 / batch.len() as f64;
    total.objective *= scale;
    total.data *= scale;
    total.physics *= scale;
    total.grads.scale(scale);
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_sample, ComplexityClass, ProblemKind, SamplingParams};
    use crate::model::init_params;

    fn toy() -> (FnoArch, PhysicsContext, Vec<ProblemSample>) {
        let arch = FnoArch { layers: 2, width: 4, modes_x: 4, modes_t: 4, q_hidden: 6, ..FnoArch::desk() };
        let flux = FluxParams::default();
        let grid = Grid::with_cfl_safety(16, 16, 1.0, &flux, 0.9).unwrap();
        let samples = (0..3)
            .map(|k| {
                let class = ComplexityClass { alpha: 2, beta: 1 };
                generate_sample(ProblemKind::Bvp, class, 40 + k, &grid, &flux, &SamplingParams::default())
                    .unwrap()
                    .0
            })
            .collect();
        (arch, PhysicsContext { grid, flux }, samples)
    }

    #[test]
    fn lambda_zero_is_data_only() {
        let (arch, ctx, samples) = toy();
        let p = init_params(&arch, 1).unwrap();
        let batch: Vec<&ProblemSample> = samples.iter().collect();
        let a = objective(&p, &arch, &batch, &ctx, 0.0).unwrap();
        let expect: f64 = samples
            .iter()
            .map(|s| {
                let y = crate::model::forward(&p, &arch, &sample_tensor(&s.input, 16, 16).unwrap()).unwrap();
                super::super::losses::data_loss(y.data(), &s.target).unwrap().powi(2)
            })
            .sum::<f64>()
            / 3.0;
        assert!((a.objective - expect).abs() < 1e-14);
        assert!(a.physics > 0.0);
    }

    #[test]
    fn objective_gradient_matches_finite_differences() {
        let (arch, ctx, samples) = toy();
        let p = init_params(&arch, 2).unwrap();
        let batch: Vec<&ProblemSample> = samples.iter().collect();
        let g = objective(&p, &arch, &batch, &ctx, 2.5).unwrap().grads;
        let analytic: Vec<Vec<f64>> = g.tensors().iter().map(|(_, _, v)| v.to_vec()).collect();
        let h = 1e-6;
        for (t, values) in analytic.iter().enumerate() {
            let k = values.len() / 2;
            let mut q = p.clone();
            q.tensors_mut()[t][k] += h;
            let plus = objective(&q, &arch, &batch, &ctx, 2.5).unwrap().objective;
            q.tensors_mut()[t][k] -= 2.0 * h;
            let minus = objective(&q, &arch, &batch, &ctx, 2.5).unwrap().objective;
            let numeric = (plus - minus) / (2.0 * h);
            let rel = (numeric - values[k]).abs() / numeric.abs().max(values[k].abs()).max(1e-8);
            assert!(rel <= 1e-4, "tensor {t}: analytic {} numeric {numeric}", values[k]);
        }
    }

    #[test]
    fn perfect_prediction_is_critical_point() {
        let (_, ctx, samples) = toy();
        let s = &samples[0];
        let (l, pen, g) = output_gradient(&s.target, s, &ctx, 2.5).unwrap();
        assert_eq!(l, 0.0);
        assert!(pen <= 1e-10);
        // 2λP·∂P is bounded by 2λ·P·(Δt/Δx-scaled slopes), i.e. rounding level.
        assert!(g.iter().all(|v| v.abs() <= 1e-8), "{}", g.iter().map(|v| v.abs()).fold(0.0, f64::max));
    }
}
