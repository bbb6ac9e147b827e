use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Greenshields fundamental diagram `f(u) = u·v_max·(1 − u/u_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluxParams {
    /// Free-flow speed, km/h.
    pub v_max: f64,
    /// Jam density, veh/km.
    pub u_max: f64,
}

impl Default for FluxParams {
    fn default() -> Self {
        Self {
            v_max: 60.0,
            u_max: 120.0,
        }
    }
}

impl FluxParams {
    pub fn new(v_max: f64, u_max: f64) -> Result<Self> {
        let p = Self { v_max, u_max };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return Err(Error::Config(format!("v_max must be > 0, got {}", self.v_max)));
        }
        if !(self.u_max > 0.0 && self.u_max.is_finite()) {
            return Err(Error::Config(format!("u_max must be > 0, got {}", self.u_max)));
        }
        Ok(())
    }

    /// Critical density (argmax of the flux).
    #[inline]
    pub fn u_cr(&self) -> f64 {
        0.5 * self.u_max
    }

    /// Capacity flow `v_max·u_max/4`.
    #[inline]
    pub fn q_max(&self) -> f64 {
        0.25 * self.v_max * self.u_max
    }

    #[inline]
    pub(crate) fn flux(&self, u: f64) -> f64 {
        u * self.v_max * (1.0 - u / self.u_max)
    }

    /// `f'(u)`.
    #[inline]
    pub(crate) fn flux_slope(&self, u: f64) -> f64 {
        self.v_max * (1.0 - 2.0 * u / self.u_max)
    }

    #[inline]
    pub(crate) fn speed(&self, u: f64) -> f64 {
        self.v_max * (1.0 - u / self.u_max)
    }

    /// Demand/supply Godunov flux, no range checks.
    #[inline]
    pub(crate) fn godunov(&self, u_left: f64, u_right: f64) -> f64 {
        let u_cr = self.u_cr();
        let demand = self.flux(u_left.min(u_cr));
        let supply = self.flux(u_right.max(u_cr));
        demand.min(supply)
    }

    pub(crate) fn check_density(&self, what: &'static str, u: f64) -> Result<()> {
        if (0.0..=self.u_max).contains(&u) {
            Ok(())
        } else {
            Err(Error::Domain {
                what,
                value: u,
                lo: 0.0,
                hi: self.u_max,
            })
        }
    }
}

/// Traffic flow in veh/h at density `u`.
pub fn greenshields_flux(u: f64, p: &FluxParams) -> Result<f64> {
    p.check_density("density", u)?;
    Ok(p.flux(u))
}

/// Equilibrium speed `v_max·(1 − u/u_max)` in km/h.
pub fn greenshields_speed(u: f64, p: &FluxParams) -> Result<f64> {
    p.check_density("density", u)?;
    Ok(p.speed(u))
}

/// Godunov interface flux between a left and a right cell.
///
/// For a concave flux this is `min(demand(u_left), supply(u_right))`, which
/// equals the flux of the exact Riemann solution evaluated at the interface.
pub fn godunov_flux(u_left: f64, u_right: f64, p: &FluxParams) -> Result<f64> {
    p.check_density("left density", u_left)?;
    p.check_density("right density", u_right)?;
    Ok(p.godunov(u_left, u_right))
}

/// Jump speed `(f(u_l) − f(u_r)) / (u_l − u_r)` of a discontinuity, km/h.
pub fn rankine_hugoniot_speed(u_l: f64, u_r: f64, p: &FluxParams) -> Result<f64> {
    p.check_density("left density", u_l)?;
    p.check_density("right density", u_r)?;
    if u_l == u_r {
        return Err(Error::InvalidArgument(
            "equal states have no jump".to_string(),
        ));
    }
    Ok((p.flux(u_l) - p.flux(u_r)) / (u_l - u_r))
}
