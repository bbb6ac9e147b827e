use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::sample_initial_condition;
use crate::error::Result;
use crate::model::{forward, forward_flops, FnoArch, FnoParams};
use crate::pde::{solve_ivp, FluxParams, Grid};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub m: usize,
    pub n: usize,
    pub repetitions: usize,
    pub operator_mean_s: f64,
    pub operator_sd_s: f64,
    pub solver_mean_s: f64,
    pub solver_sd_s: f64,
    /// Counted, not timed.
    pub operator_flops: u64,
    /// Solver time over operator time.
    pub solver_to_operator: f64,
}

fn mean_sd(t: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let mean = t.iter().sum::<f64>() / n;
    if t.len() < 2 {
        return (mean, 0.0);
    }
    let var = t.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Times operator forward passes against Godunov solves of the same grids.
/// Each grid spans `length` km with a 0.9 CFL safety factor.
pub fn bench_inference(
    params: &FnoParams,
    arch: &FnoArch,
    grids: &[(usize, usize)],
    repetitions: usize,
    flux: &FluxParams,
    length: f64,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    let reps = repetitions.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(grids.len());
    for &(m, n) in grids {
        arch.check_grid(m, n)?;
        let grid = Grid::with_cfl_safety(m, n, length, flux, 0.9)?;
        let u0 = sample_initial_condition(4, m, 0.0, flux.u_max, 30.0, &mut rng);
        let mut input = vec![-1.0; m * n];
        for (i, &u) in u0.iter().enumerate() {
            input[i * n] = u / flux.u_max;
        }
        let input = Tensor::from_vec(&[1, m, n], input)?;
        let (mut op, mut sv) = (Vec::with_capacity(reps), Vec::with_capacity(reps));
        for _ in 0..reps {
            let t = Instant::now();
            std::hint::black_box(forward(params, arch, &input)?);
            op.push(t.elapsed().as_secs_f64());
            let t = Instant::now();
            std::hint::black_box(solve_ivp(&u0, &grid, flux)?);
            sv.push(t.elapsed().as_secs_f64());
        }
        let ((om, osd), (sm, ssd)) = (mean_sd(&op), mean_sd(&sv));
        rows.push(BenchRow {
            m,
            n,
            repetitions: reps,
            operator_mean_s: om,
            operator_sd_s: osd,
            solver_mean_s: sm,
            solver_sd_s: ssd,
            operator_flops: forward_flops(arch, m, n),
            solver_to_operator: sm / om,
        });
    }
    Ok(rows)
}
