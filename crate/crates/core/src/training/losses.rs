use std::ops::Range;

use crate::datagen::ProblemKind;
use crate::error::{Error, Result};
use crate::pde::{interface_fluxes, Ends, FluxParams, Grid};

fn l2(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖pred − target‖₂ / ‖target‖₂`.
pub fn data_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    data_loss_grad(pred, target).map(|(l, _)| l)
}

/// Data loss and its gradient w.r.t. `pred` (zero where the loss is zero).
pub fn data_loss_grad(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() {
        return Err(Error::shape(format!("prediction has {} cells, target {}", pred.len(), target.len())));
    }
    let norm = l2(target.iter().copied());
    if norm == 0.0 {
        return Err(Error::InvalidArgument("data loss undefined for an all-zero target".into()));
    }
    let diff = l2(pred.iter().zip(target).map(|(a, b)| a - b));
    let loss = diff / norm;
    let grad = if diff == 0.0 {
        vec![0.0; pred.len()]
    } else {
        let s = 1.0 / (diff * norm);
        pred.iter().zip(target).map(|(a, b)| (a - b) * s).collect()
    };
    Ok((loss, grad))
}

/// Conservation residuals of a normalised field, `m × (n−1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualField {
    pub m: usize,
    /// Residual columns (`n − 1`).
    pub steps: usize,
    /// Row-major `m × steps`; rows outside `rows` are zero.
    pub values: Vec<f64>,
    /// Cells whose residual counts.
    pub rows: Range<usize>,
}

impl ResidualField {
    pub fn included(&self) -> usize {
        self.rows.len() * self.steps
    }

    /// Mean `|r|` over the included cells.
    pub fn mean_abs(&self) -> f64 {
        let sum: f64 = self.rows.clone().map(|i| self.row(i).iter().map(|r| r.abs()).sum::<f64>()).sum();
        sum / self.included() as f64
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.steps..(i + 1) * self.steps]
    }
}

fn included_rows(kind: ProblemKind, m: usize) -> Range<usize> {
    match kind {
        ProblemKind::Ivp => 0..m,
        // Ghost states are unknown to the operator; skip the end cells.
        ProblemKind::Bvp | ProblemKind::Ip => 1..m - 1,
    }
}

fn check_field(pred: &[f64], kind: ProblemKind, g: &Grid) -> Result<()> {
    if pred.len() != g.m * g.n {
        return Err(Error::shape(format!("field has {} entries, grid is {}×{}", pred.len(), g.m, g.n)));
    }
    if kind != ProblemKind::Ivp && g.m < 3 {
        return Err(Error::shape("boundary-excluded residual needs at least three cells"));
    }
    Ok(())
}

/// Denormalised, `[0, u_max]`-clamped column `j`.
fn physical_column(pred: &[f64], g: &Grid, p: &FluxParams, j: usize, out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = pred[i * g.n + j].clamp(0.0, 1.0) * p.u_max;
    }
}

/// `r_{i,j} = û_{i,j+1} − û_{i,j} + (Δt/Δx)(F_{i+½,j} − F_{i−½,j})/u_max`, with Godunov
/// interface fluxes of the clamped, denormalised prediction. Zero on solver output.
pub fn physics_residual_field(pred: &[f64], kind: ProblemKind, g: &Grid, p: &FluxParams) -> Result<ResidualField> {
    check_field(pred, kind, g)?;
    let (m, n) = (g.m, g.n);
    let c = g.dt / g.dx / p.u_max;
    let rows = included_rows(kind, m);
    let ends = ends_for(kind);
    let mut values = vec![0.0; m * (n - 1)];
    let mut col = vec![0.0; m];
    let mut flux = vec![0.0; m + 1];
    for j in 0..n - 1 {
        physical_column(pred, g, p, j, &mut col);
        interface_fluxes(&col, ends, p, &mut flux);
        for i in rows.clone() {
            values[i * (n - 1) + j] = pred[i * n + j + 1] - pred[i * n + j] + c * (flux[i + 1] - flux[i]);
        }
    }
    Ok(ResidualField { m, steps: n - 1, values, rows })
}

fn ends_for(kind: ProblemKind) -> Ends {
    match kind {
        ProblemKind::Ivp => Ends::Periodic,
        // End interfaces are never read for these kinds.
        _ => Ends::Dirichlet { upstream: 0.0, downstream: 0.0 },
    }
}

/// Mean absolute residual over the included cells.
pub fn physics_penalty(pred: &[f64], kind: ProblemKind, g: &Grid, p: &FluxParams) -> Result<f64> {
    Ok(physics_residual_field(pred, kind, g, p)?.mean_abs())
}

/// `∂G/∂u_l, ∂G/∂u_r` of the demand/supply flux (demand wins ties).
fn godunov_partials(ul: f64, ur: f64, p: &FluxParams) -> (f64, f64) {
    let u_cr = p.u_cr();
    let demand = p.flux(ul.min(u_cr));
    let supply = p.flux(ur.max(u_cr));
    if demand <= supply {
        (if ul < u_cr { p.flux_slope(ul) } else { 0.0 }, 0.0)
    } else {
        (0.0, if ur > u_cr { p.flux_slope(ur) } else { 0.0 })
    }
}

/// Penalty and its gradient w.r.t. the normalised prediction.
pub fn physics_penalty_grad(pred: &[f64], kind: ProblemKind, g: &Grid, p: &FluxParams) -> Result<(f64, Vec<f64>)> {
    let field = physics_residual_field(pred, kind, g, p)?;
    let (m, n) = (g.m, g.n);
    let ratio = g.dt / g.dx;
    let weight = 1.0 / field.included() as f64;
    let clamp_slope = |v: f64| if (0.0..=1.0).contains(&v) { 1.0 } else { 0.0 };
    let mut grad = vec![0.0; m * n];
    let mut col = vec![0.0; m];
    let mut dflux = vec![0.0; m + 1];
    for j in 0..n - 1 {
        dflux.iter_mut().for_each(|d| *d = 0.0);
        for i in field.rows.clone() {
            let r = field.values[i * (n - 1) + j];
            let s = if r > 0.0 { weight } else if r < 0.0 { -weight } else { 0.0 };
            grad[i * n + j + 1] += s;
            grad[i * n + j] -= s;
            // c·u_max = Δt/Δx carries the flux back to normalised units.
            dflux[i + 1] += s * ratio / p.u_max;
            dflux[i] -= s * ratio / p.u_max;
        }
        physical_column(pred, g, p, j, &mut col);
        for k in 0..=m {
            if dflux[k] == 0.0 {
                continue;
            }
            let (left, right) = if k == 0 || k == m { (m - 1, 0) } else { (k - 1, k) };
            let (dl, dr) = godunov_partials(col[left], col[right], p);
            grad[left * n + j] += dflux[k] * dl * p.u_max * clamp_slope(pred[left * n + j]);
            grad[right * n + j] += dflux[k] * dr * p.u_max * clamp_slope(pred[right * n + j]);
        }
    }
    Ok((field.mean_abs(), grad))
}
