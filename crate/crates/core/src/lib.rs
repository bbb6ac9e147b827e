//! Learning solution operators for the LWR traffic-flow model.
//!
//! The crate is organised bottom-up:
//!
//! * [`pde`]: Greenshields flux, Godunov finite-volume solver, probe trajectories.
//! * [`datagen`]: random multi-step initial and multi-wavelet boundary data,
//!   encoded operator samples and on-disk datasets.
//! * [`tensor`]: dense tensors, radix-2 FFT, the layers of a Fourier operator
//!   with hand-derived backward passes, and Adam.
//! * [`model`]: the Fourier neural operator (lift, spectral layers, projection).
//! * [`training`]: data and conservation-residual losses, objective, training loop.
//! * [`eval`]: metrics, per-complexity grouping, error-growth curve fits, benchmarks.
//! * [`config`]: the JSON run configuration shared by the command-line tool.

pub mod config;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod model;
pub mod pde;
pub mod tensor;
pub mod tns;
pub mod training;

pub use error::{Error, Result};
