use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DensityField, FluxParams, Grid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbePoint {
    pub cell: usize,
    pub step: usize,
    /// veh/km, read from the field at `(cell, step)`.
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeTrajectory {
    pub entry_step: usize,
    pub points: Vec<ProbePoint>,
}

/// Probe-vehicle observations and the `m×n` mask of cells they cover.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    pub trajectories: Vec<ProbeTrajectory>,
    pub mask: Vec<bool>,
    m: usize,
    n: usize,
}

impl ProbeSet {
    pub fn empty(m: usize, n: usize) -> Self {
        Self {
            trajectories: Vec::new(),
            mask: vec![false; m * n],
            m,
            n,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn covers(&self, cell: usize, step: usize) -> bool {
        self.mask[cell * self.n + step]
    }

    pub fn covered_cells(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }
}

/// Drives `n_probes` vehicles through `field`.
///
/// Each vehicle enters at `x = 0` at a time drawn uniformly from the first
/// half of the horizon and moves with the equilibrium speed of the cell it
/// occupies, held constant over one time step, until it leaves the road or
/// the horizon ends.
pub fn extract_probes(field: &DensityField, n_probes: usize, g: &Grid, p: &FluxParams, seed: u64) -> ProbeSet {
    let (m, n) = (g.m, g.n);
    debug_assert_eq!((field.m(), field.n()), (m, n));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = ProbeSet::empty(m, n);
    for _ in 0..n_probes {
        let entry_time: f64 = rng.random_range(0.0..=0.5 * g.horizon);
        let entry_step = ((entry_time / g.dt) as usize).min(n - 1);
        let mut points = Vec::new();
        let mut x = 0.0;
        let mut step = entry_step;
        while step < n && x < g.length {
            let cell = ((x / g.dx) as usize).min(m - 1);
            let density = field.get(cell, step);
            points.push(ProbePoint { cell, step, density });
            set.mask[cell * n + step] = true;
            x += p.speed(density.clamp(0.0, p.u_max)) * g.dt;
            step += 1;
        }
        set.trajectories.push(ProbeTrajectory { entry_step, points });
    }
    set
}
