use super::{FluxParams, Grid};
use crate::error::{Error, Result};

/// Space-time density matrix: row `i` is cell `i`, column `j` is step `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    m: usize,
    n: usize,
    values: Vec<f64>,
}

impl DensityField {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            values: vec![0.0; m * n],
        }
    }

    pub fn from_values(m: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != m * n {
            return Err(Error::shape(format!(
                "density field {m}×{n} needs {} values, got {}",
                m * n,
                values.len()
            )));
        }
        Ok(Self { m, n, values })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n + j] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.m).map(|i| self.get(i, j)).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Total vehicles `Σ_i u_i^j·dx` at step `j`.
    pub fn vehicles(&self, j: usize, dx: f64) -> f64 {
        (0..self.m).map(|i| self.get(i, j)).sum::<f64>() * dx
    }

    /// Checks every entry lies in `[0, u_max]`.
    pub fn validate(&self, u_max: f64) -> Result<()> {
        for &v in self.values.iter() {
            if !(0.0..=u_max).contains(&v) {
                return Err(Error::Domain {
                    what: "field entry",
                    value: v,
                    lo: 0.0,
                    hi: u_max,
                });
            }
        }
        Ok(())
    }

    /// Copy scaled by `1/u_max`.
    pub fn normalized(&self, u_max: f64) -> Vec<f64> {
        self.values.iter().map(|v| v / u_max).collect()
    }
}

/// Ghost densities imposed at both road ends, one value per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub upstream: Vec<f64>,
    pub downstream: Vec<f64>,
}

impl BoundaryTrace {
    pub fn constant(n: usize, upstream: f64, downstream: f64) -> Self {
        Self {
            upstream: vec![upstream; n],
            downstream: vec![downstream; n],
        }
    }

    pub fn validate(&self, n: usize, p: &FluxParams) -> Result<()> {
        if self.upstream.len() != n || self.downstream.len() != n {
            return Err(Error::shape(format!(
                "boundary traces must have length {n}, got {} and {}",
                self.upstream.len(),
                self.downstream.len()
            )));
        }
        for &u in self.upstream.iter() {
            p.check_density("upstream boundary density", u)?;
        }
        for &u in self.downstream.iter() {
            p.check_density("downstream boundary density", u)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Ends {
    Periodic,
    Dirichlet { upstream: f64, downstream: f64 },
}

/// Fills `out[k]` with the flux through interface `k − ½`, `k = 0..=m`.
pub(crate) fn interface_fluxes(col: &[f64], ends: Ends, p: &FluxParams, out: &mut [f64]) {
    let m = col.len();
    debug_assert_eq!(out.len(), m + 1);
    for k in 1..m {
        out[k] = p.godunov(col[k - 1], col[k]);
    }
    match ends {
        Ends::Periodic => {
            let wrap = p.godunov(col[m - 1], col[0]);
            out[0] = wrap;
            out[m] = wrap;
        }
        Ends::Dirichlet {
            upstream,
            downstream,
        } => {
            out[0] = p.godunov(upstream, col[0]);
            out[m] = p.godunov(col[m - 1], downstream);
        }
    }
}

fn check_initial(u0: &[f64], g: &Grid, p: &FluxParams) -> Result<()> {
    if u0.len() != g.m {
        return Err(Error::shape(format!(
            "initial condition has length {}, grid has {} cells",
            u0.len(),
            g.m
        )));
    }
    for &u in u0 {
        p.check_density("initial density", u)?;
    }
    Ok(())
}

fn march(u0: &[f64], g: &Grid, p: &FluxParams, ends: impl Fn(usize) -> Ends) -> DensityField {
    let (m, n) = (g.m, g.n);
    let ratio = g.dt / g.dx;
    let mut field = DensityField::zeros(m, n);
    let mut col = u0.to_vec();
    let mut next = vec![0.0; m];
    let mut fluxes = vec![0.0; m + 1];
    for (i, &u) in col.iter().enumerate() {
        field.set(i, 0, u);
    }
    for j in 0..n - 1 {
        interface_fluxes(&col, ends(j), p, &mut fluxes);
        for i in 0..m {
            let u = col[i] - ratio * (fluxes[i + 1] - fluxes[i]);
            // Monotone scheme: anything beyond the range is rounding.
            debug_assert!(u > -1e-9 * p.u_max && u < p.u_max * (1.0 + 1e-9), "u={u}");
            next[i] = u.clamp(0.0, p.u_max);
        }
        std::mem::swap(&mut col, &mut next);
        for (i, &u) in col.iter().enumerate() {
            field.set(i, j + 1, u);
        }
    }
    field
}

/// Ring-road (periodic) Godunov solve from the initial density `u0`.
pub fn solve_ivp(u0: &[f64], g: &Grid, p: &FluxParams) -> Result<DensityField> {
    g.require_cfl(p)?;
    check_initial(u0, g, p)?;
    Ok(march(u0, g, p, |_| Ends::Periodic))
}

/// Godunov solve with Dirichlet ghost cells at both road ends.
pub fn solve_bvp(u0: &[f64], b: &BoundaryTrace, g: &Grid, p: &FluxParams) -> Result<DensityField> {
    g.require_cfl(p)?;
    check_initial(u0, g, p)?;
    b.validate(g.n, p)?;
    Ok(march(u0, g, p, |j| Ends::Dirichlet {
        upstream: b.upstream[j],
        downstream: b.downstream[j],
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::rankine_hugoniot_speed;

    fn setup(m: usize, n: usize) -> (Grid, FluxParams) {
        let p = FluxParams::default();
        (Grid::with_cfl_safety(m, n, 1.0, &p, 0.9).unwrap(), p)
    }

    #[test]
    fn constant_ivp_stays_constant() {
        let (g, p) = setup(32, 64);
        let f = solve_ivp(&vec![42.0; 32], &g, &p).unwrap();
        assert!(f.values().iter().all(|&v| (v - 42.0).abs() < 1e-12));
    }

    #[test]
    fn column_zero_is_initial_condition() {
        let (g, p) = setup(16, 8);
        let u0: Vec<f64> = (0..16).map(|i| (i * 7 % 120) as f64).collect();
        let f = solve_ivp(&u0, &g, &p).unwrap();
        assert_eq!(f.column(0), u0);
    }

    #[test]
    fn periodic_conservation() {
        let (g, p) = setup(64, 400);
        let u0: Vec<f64> = (0..64).map(|i| if i % 9 < 4 { 100.0 } else { 10.0 + i as f64 }).collect();
        let f = solve_ivp(&u0, &g, &p).unwrap();
        let total0 = f.vehicles(0, g.dx);
        for j in 0..g.n {
            assert!((f.vehicles(j, g.dx) - total0).abs() <= 1e-10 * total0);
        }
        f.validate(p.u_max).unwrap();
    }

    #[test]
    fn stationary_shock() {
        let (g, p) = setup(64, 256);
        assert_eq!(rankine_hugoniot_speed(30.0, 90.0, &p).unwrap(), 0.0);
        let u0: Vec<f64> = (0..64)
            .map(|i| if (i as f64 + 0.5) * g.dx < 0.5 { 30.0 } else { 90.0 })
            .collect();
        let f = solve_ivp(&u0, &g, &p).unwrap();
        // The jump sits between cells 31 and 32 for the whole horizon.
        let last = f.column(g.n - 1);
        let mid = 0.5 * (30.0 + 90.0);
        let crossing = (1..40).find(|&i| last[i - 1] < mid && last[i] >= mid).unwrap();
        assert!((crossing as i64 - 32).abs() <= 1, "crossing at {crossing}");
    }

    #[test]
    fn bvp_constant_field() {
        let (g, p) = setup(16, 32);
        let b = BoundaryTrace::constant(32, 50.0, 50.0);
        let f = solve_bvp(&vec![50.0; 16], &b, &g, &p).unwrap();
        assert!(f.values().iter().all(|&v| (v - 50.0).abs() < 1e-12));
    }

    #[test]
    fn bvp_forward_front() {
        // Empty road fed at density 30: the front moves at f(30)/30 = 45 km/h.
        let (g, p) = setup(64, 256);
        let b = BoundaryTrace::constant(g.n, 30.0, 0.0);
        let f = solve_bvp(&vec![0.0; g.m], &b, &g, &p).unwrap();
        // Step at which the analytic front is mid-road.
        let j = (0.5 * g.length / (45.0 * g.dt)).round() as usize;
        let t = j as f64 * g.dt;
        let front = 45.0 * t;
        let col = f.column(j);
        let half = (0..g.m).find(|&i| col[i] < 15.0).unwrap();
        let pos = half as f64 * g.dx;
        assert!((pos - front).abs() <= g.dx, "front {front} numerical {pos}");
    }

    #[test]
    fn bvp_queue_grows_upstream() {
        let (g, p) = setup(64, 256);
        let mut b = BoundaryTrace::constant(g.n, 20.0, 0.0);
        for j in 0..g.n {
            b.downstream[j] = p.u_max;
        }
        let u0 = vec![20.0; g.m];
        let f = solve_bvp(&u0, &b, &g, &p).unwrap();
        let queue_len = |j: usize| (0..g.m).rev().take_while(|&i| f.get(i, j) > 100.0).count();
        assert!(queue_len(g.n - 1) > queue_len(g.n / 2));
        assert!(queue_len(g.n / 2) > queue_len(10));
        // Backward shock: (f(20) - f(120)) / (20 - 120) < 0.
        assert!(rankine_hugoniot_speed(20.0, 120.0, &p).unwrap() < 0.0);
    }

    #[test]
    fn cfl_violation_is_error() {
        let p = FluxParams::default();
        let g = Grid::new(16, 8, 1.0, 2.0 / 16.0 / 60.0).unwrap();
        assert!(matches!(solve_ivp(&[0.0; 16], &g, &p), Err(Error::Cfl { .. })));
    }

    #[test]
    fn length_mismatches() {
        let (g, p) = setup(16, 8);
        assert!(solve_ivp(&[0.0; 15], &g, &p).is_err());
        let b = BoundaryTrace::constant(7, 0.0, 0.0);
        assert!(matches!(solve_bvp(&[0.0; 16], &b, &g, &p), Err(Error::Shape(_))));
        assert!(solve_ivp(&[130.0; 16], &g, &p).is_err());
    }
}
