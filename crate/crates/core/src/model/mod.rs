//! Fourier neural operator: lift `P`, `L` Fourier layers, projection `Q`.

mod forward;
mod io;
mod params;

pub use forward::{backward, forward, forward_flops, forward_with_cache, ForwardCache};
pub use io::{load_params, load_params_expect, save_params, ARCH_FILE};
pub use params::{init_params, param_count, Activation, FnoArch, FnoParams, FourierLayer};
