use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Random multi-step initial density.
///
/// Starts from a constant drawn from `[u_min, u_max]`, then places
/// `n_steps` steps left to right. Step `k` lands at most `⌊m/n_steps⌋` cells
/// after the previous one and shifts the value from there onwards by
/// `Uniform(−step_height, step_height)`, clamped to `[u_min, u_max]`.
/// The result has at most `n_steps + 1` constant segments.
pub fn sample_initial_condition<R: Rng + ?Sized>(
    n_steps: usize,
    m: usize,
    u_min: f64,
    u_max: f64,
    step_height: f64,
    rng: &mut R,
) -> Vec<f64> {
    assert!(u_min < u_max, "u_min must be below u_max");
    assert!(m >= 1);
    let c = rng.random_range(u_min..=u_max);
    let mut path = vec![c; m];
    // A single cell has nowhere to put a step.
    if n_steps == 0 || m == 1 {
        return path;
    }
    let max_width = (m / n_steps).max(1);
    let mut i = 0usize;
    for _ in 0..n_steps {
        // Offset ≥ 1 so the step never lands on (or before) the previous one.
        let j = (i + rng.random_range(1..=max_width)).min(m - 1);
        let jump = if step_height > 0.0 {
            rng.random_range(-step_height..=step_height)
        } else {
            0.0
        };
        let value = (path[j - 1] + jump).clamp(u_min, u_max);
        path[j..].iter_mut().for_each(|v| *v = value);
        i = j;
    }
    path
}

/// Random multi-wavelet boundary density.
///
/// A noisy constant `base + N(0, noise_sd²)` clamped to `[0, u_max/2]`, with
/// one block of `u_max` ("red light") placed inside each of `n_wavelets`
/// equal partitions of the time axis. Blocks never touch, so the trace has
/// exactly `n_wavelets` maximal runs at `u_max`.
pub fn sample_boundary_condition<R: Rng + ?Sized>(
    n_wavelets: usize,
    n: usize,
    u_max: f64,
    base: f64,
    noise_sd: f64,
    rng: &mut R,
) -> Vec<f64> {
    let ceiling = 0.5 * u_max;
    let noise = Normal::new(0.0, noise_sd.max(0.0)).expect("finite noise level");
    let mut path: Vec<f64> = (0..n)
        .map(|_| (base + noise.sample(rng)).clamp(0.0, ceiling))
        .collect();
    if n_wavelets == 0 {
        return path;
    }
    let width = n / n_wavelets;
    assert!(width >= 4, "need at least 4 steps per wavelet partition, got {width}");
    for k in 0..n_wavelets {
        let start = rng.random_range(0..width / 2);
        let end = rng.random_range(start + 1..width);
        path[k * width + start..k * width + end]
            .iter_mut()
            .for_each(|v| *v = u_max);
    }
    path
}

/// Number of maximal constant runs.
pub fn count_segments(path: &[f64]) -> usize {
    if path.is_empty() {
        return 0;
    }
    1 + path.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Number of maximal runs whose value equals `level`.
pub fn count_max_runs(path: &[f64], level: f64) -> usize {
    let mut runs = 0;
    let mut inside = false;
    for &v in path {
        let hit = v == level;
        if hit && !inside {
            runs += 1;
        }
        inside = hit;
    }
    runs
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_steps_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = sample_initial_condition(0, 64, 0.0, 120.0, 30.0, &mut rng);
        assert_eq!(count_segments(&u), 1);
    }

    #[test]
    fn two_steps_fixed_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let u = sample_initial_condition(2, 64, 0.0, 120.0, 30.0, &mut rng);
        assert_eq!(u.len(), 64);
        assert!(count_segments(&u) <= 3);
        assert!(u.iter().all(|&v| (0.0..=120.0).contains(&v)));
    }

    #[test]
    fn more_steps_than_cells_still_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = sample_initial_condition(40, 16, 0.0, 120.0, 30.0, &mut rng);
        assert!(count_segments(&u) <= 41);
    }

    #[test]
    fn no_wavelets_is_noisy_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = sample_boundary_condition(0, 600, 120.0, 20.0, 3.0, &mut rng);
        assert!(b.iter().all(|&v| v < 120.0 && v >= 0.0));
        let mean = b.iter().sum::<f64>() / b.len() as f64;
        assert!((mean - 20.0).abs() < 1.0);
    }

    #[test]
    fn two_wavelets_fixed_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = sample_boundary_condition(2, 600, 120.0, 20.0, 3.0, &mut rng);
        assert_eq!(count_max_runs(&b, 120.0), 2);
        assert!(b.iter().all(|&v| (0.0..=120.0).contains(&v)));
    }

    #[test]
    fn minimum_partition_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let b = sample_boundary_condition(8, 32, 120.0, 20.0, 3.0, &mut rng);
            assert_eq!(count_max_runs(&b, 120.0), 8);
        }
    }

    #[test]
    fn run_counter() {
        assert_eq!(count_max_runs(&[1.0, 5.0, 5.0, 1.0, 5.0], 5.0), 2);
        assert_eq!(count_max_runs(&[], 5.0), 0);
        assert_eq!(count_segments(&[1.0, 1.0, 2.0, 1.0]), 3);
    }
}
