use serde::{Deserialize, Serialize};

use super::FluxParams;
use crate::error::{Error, Result};

/// Uniform space-time discretisation shared by the solver and the operator.
///
/// Cell `i` is centred at `(i + ½)·dx`; column `j` sits at `t = j·dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Cells in x.
    pub m: usize,
    /// Steps in t.
    pub n: usize,
    /// km
    pub dx: f64,
    /// hours
    pub dt: f64,
    /// km
    pub length: f64,
    /// hours (`n·dt`)
    pub horizon: f64,
}

impl Grid {
    /// Grid over a road of `length` km with time step `dt` hours.
    pub fn new(m: usize, n: usize, length: f64, dt: f64) -> Result<Self> {
        let g = Self {
            m,
            n,
            dx: length / m as f64,
            dt,
            length,
            horizon: n as f64 * dt,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid whose time step is `safety·dx/v_max`.
    pub fn with_cfl_safety(m: usize, n: usize, length: f64, flux: &FluxParams, safety: f64) -> Result<Self> {
        if !(safety > 0.0 && safety <= 1.0) {
            return Err(Error::Config(format!("CFL safety factor must be in (0, 1], got {safety}")));
        }
        let dx = length / m as f64;
        Self::new(m, n, length, safety * dx / flux.v_max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 || self.n < 2 {
            return Err(Error::Config(format!(
                "grid needs m ≥ 2 and n ≥ 2, got {}×{}",
                self.m, self.n
            )));
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) || !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!(
                "grid spacings must be positive, got dx={} dt={}",
                self.dx, self.dt
            )));
        }
        Ok(())
    }

    /// Returns `Err(Error::Cfl)` unless `dt·v_max ≤ dx`.
    pub fn require_cfl(&self, flux: &FluxParams) -> Result<()> {
        let report = check_cfl(self, flux);
        if report.ok {
            Ok(())
        } else {
            Err(Error::Cfl {
                lhs: report.lhs,
                rhs: report.rhs,
            })
        }
    }

    /// Number of grid points `m·n`.
    pub fn len(&self) -> usize {
        self.m * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Courant number `v_max·dt/dx`.
    pub fn courant(&self, flux: &FluxParams) -> f64 {
        flux.v_max * self.dt / self.dx
    }
}

/// Both sides of `Δt·sup|f'(u)| ≤ Δx`, in km.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflReport {
    pub lhs: f64,
    pub rhs: f64,
    /// Largest admissible time step, hours.
    pub dt_bound: f64,
    pub ok: bool,
}

/// Checks the CFL condition. For Greenshields `sup|f'| = v_max`.
pub fn check_cfl(g: &Grid, p: &FluxParams) -> CflReport {
    let dt_bound = g.dx / p.v_max;
    CflReport {
        lhs: g.dt * p.v_max,
        rhs: g.dx,
        dt_bound,
        ok: g.dt <= dt_bound,
    }
}
