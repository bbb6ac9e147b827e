//! LWR physics: Greenshields flux, Godunov finite volumes, probe vehicles.
//!
//! Units are km, hours, veh/km and veh/h throughout. Conversions from
//! metres and seconds happen at the configuration boundary.

mod flux;
mod grid;
mod probes;
mod solver;

pub use flux::{godunov_flux, greenshields_flux, greenshields_speed, rankine_hugoniot_speed, FluxParams};
pub use grid::{check_cfl, CflReport, Grid};
pub use probes::{extract_probes, ProbePoint, ProbeSet, ProbeTrajectory};
pub use solver::{solve_bvp, solve_ivp, BoundaryTrace, DensityField};
pub(crate) use solver::{interface_fluxes, Ends};
