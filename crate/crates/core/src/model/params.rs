use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{ComplexTensor, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    /// All-linear network; used for discretization-consistency checks.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FnoArch {
    pub layers: usize,
    pub width: usize,
    /// Retained modes along x (rows).
    pub modes_x: usize,
    /// Retained modes along t (columns).
    pub modes_t: usize,
    pub q_hidden: usize,
    pub activation: Activation,
    /// Apply the activation after the last Fourier layer too.
    pub final_layer_activation: bool,
    /// Append normalised `(x, t)` coordinate channels to the input.
    pub coord_channels: bool,
}

impl Default for FnoArch {
    fn default() -> Self {
        Self::desk()
    }
}

impl FnoArch {
    /// CPU-sized preset: `L=4, d_z=32, m_k=16, n_k=32`.
    pub fn desk() -> Self {
        Self {
            layers: 4,
            width: 32,
            modes_x: 16,
            modes_t: 32,
            q_hidden: 128,
            activation: Activation::Relu,
            final_layer_activation: true,
            coord_channels: false,
        }
    }

    /// Widths from the original experiments (`d_z=64`); the mode counts are
    /// one reading of an ambiguous table and should be set per grid.
    pub fn full() -> Self {
        Self { width: 64, modes_x: 24, modes_t: 128, ..Self::desk() }
    }

    pub fn input_channels(&self) -> usize {
        if self.coord_channels { 3 } else { 1 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("arch: {msg}")));
        if self.layers == 0 {
            return bad("need at least one Fourier layer".into());
        }
        if self.width == 0 || self.q_hidden == 0 {
            return bad(format!("widths must be ≥ 1 (width {}, q_hidden {})", self.width, self.q_hidden));
        }
        for (name, k) in [("modes_x", self.modes_x), ("modes_t", self.modes_t)] {
            if k == 0 || k % 2 != 0 {
                return bad(format!("{name} must be positive and even, got {k}"));
            }
        }
        Ok(())
    }

    /// Grids must be powers of two and at least twice the retained modes.
    pub fn check_grid(&self, m: usize, n: usize) -> Result<()> {
        if !m.is_power_of_two() || !n.is_power_of_two() {
            return Err(Error::shape(format!("grid {m}×{n} must have power-of-two sides")));
        }
        if m < 2 * self.modes_x || n < 2 * self.modes_t {
            return Err(Error::shape(format!(
                "grid {m}×{n} too small for {}×{} modes (need ≥ twice the modes)",
                self.modes_x, self.modes_t
            )));
        }
        Ok(())
    }
}

/// Weights of one Fourier layer: local path `W, b` and spectral weights `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierLayer {
    /// `[d_z, d_z]`
    pub weight: Tensor,
    /// `[d_z]`
    pub bias: Tensor,
    /// `[m_k, n_k, d_z, d_z]`
    pub spectral: ComplexTensor,
}

/// All trainable tensors. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct FnoParams {
    pub lift_weight: Tensor,
    pub lift_bias: Tensor,
    pub layers: Vec<FourierLayer>,
    pub proj1_weight: Tensor,
    pub proj1_bias: Tensor,
    pub proj2_weight: Tensor,
    pub proj2_bias: Tensor,
}

impl FnoParams {
    pub fn zeros(arch: &FnoArch) -> Self {
        let (d, q) = (arch.width, arch.q_hidden);
        Self {
            lift_weight: Tensor::zeros(&[arch.input_channels(), d]),
            lift_bias: Tensor::zeros(&[d]),
            layers: (0..arch.layers)
                .map(|_| FourierLayer {
                    weight: Tensor::zeros(&[d, d]),
                    bias: Tensor::zeros(&[d]),
                    spectral: ComplexTensor::zeros(&[arch.modes_x, arch.modes_t, d, d]),
                })
                .collect(),
            proj1_weight: Tensor::zeros(&[d, q]),
            proj1_bias: Tensor::zeros(&[q]),
            proj2_weight: Tensor::zeros(&[q, 1]),
            proj2_bias: Tensor::zeros(&[1]),
        }
    }

    /// `(name, dims, values)` for every tensor, in a fixed order. Spectral
    /// weights appear as interleaved reals with a trailing dim of 2.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = vec![
            ("lift.weight".to_string(), self.lift_weight.dims().to_vec(), self.lift_weight.data()),
            ("lift.bias".to_string(), self.lift_bias.dims().to_vec(), self.lift_bias.data()),
        ];
        for (l, layer) in self.layers.iter().enumerate() {
            let mut sdims = layer.spectral.dims().to_vec();
            sdims.push(2);
            out.push((format!("layer{l}.weight"), layer.weight.dims().to_vec(), layer.weight.data()));
            out.push((format!("layer{l}.bias"), layer.bias.dims().to_vec(), layer.bias.data()));
            out.push((format!("layer{l}.spectral"), sdims, layer.spectral.as_reals()));
        }
        for (name, t) in [
            ("proj1.weight", &self.proj1_weight),
            ("proj1.bias", &self.proj1_bias),
            ("proj2.weight", &self.proj2_weight),
            ("proj2.bias", &self.proj2_bias),
        ] {
            out.push((name.to_string(), t.dims().to_vec(), t.data()));
        }
        out
    }

    /// Mutable views in the same order as [`FnoParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![self.lift_weight.data_mut(), self.lift_bias.data_mut()];
        for layer in &mut self.layers {
            out.push(layer.weight.data_mut());
            out.push(layer.bias.data_mut());
            out.push(layer.spectral.as_reals_mut());
        }
        out.push(self.proj1_weight.data_mut());
        out.push(self.proj1_bias.data_mut());
        out.push(self.proj2_weight.data_mut());
        out.push(self.proj2_bias.data_mut());
        out
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.tensors().iter().map(|(_, _, v)| v.len()).collect()
    }

    pub fn scalar_count(&self) -> usize {
        self.lengths().iter().sum()
    }

    /// `self += scale · other`
    pub fn add_scaled(&mut self, other: &FnoParams, scale: f64) {
        for (dst, (_, _, s)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, v) in dst.iter_mut().zip(s) {
                *d += scale * v;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, _, v)| v.iter().all(|x| x.is_finite()))
    }

    /// Checks every tensor against the shapes implied by `arch`.
    pub fn check_arch(&self, arch: &FnoArch) -> Result<()> {
        let expect = FnoParams::zeros(arch);
        let (got, want) = (self.tensors(), expect.tensors());
        if got.len() != want.len() {
            return Err(Error::shape(format!(
                "parameters hold {} layers, arch expects {}",
                self.layers.len(),
                arch.layers
            )));
        }
        for ((name, dims, _), (_, wdims, _)) in got.iter().zip(&want) {
            if dims != wdims {
                return Err(Error::shape(format!("{name}: dims {dims:?}, arch expects {wdims:?}")));
            }
        }
        Ok(())
    }
}

fn uniform(dims: &[usize], bound: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let len = dims.iter().product();
    Tensor::from_vec(dims, (0..len).map(|_| rng.random_range(-bound..bound)).collect()).expect("dims match")
}

/// Real weights `U(±1/√fan_in)`, spectral components `U(±1/√(d_z·m_k·n_k))`,
/// zero biases.
pub fn init_params(arch: &FnoArch, seed: u64) -> Result<FnoParams> {
    arch.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = FnoParams::zeros(arch);
    let (d, q) = (arch.width, arch.q_hidden);
    p.lift_weight = uniform(&[arch.input_channels(), d], 1.0 / (arch.input_channels() as f64).sqrt(), &mut rng);
    let spectral_bound = 1.0 / ((d * arch.modes_x * arch.modes_t) as f64).sqrt();
    for layer in &mut p.layers {
        layer.weight = uniform(&[d, d], 1.0 / (d as f64).sqrt(), &mut rng);
        let len = layer.spectral.len();
        let reals = uniform(&[2 * len], spectral_bound, &mut rng);
        layer.spectral = ComplexTensor::from_interleaved(layer.spectral.dims(), reals.data())?;
    }
    p.proj1_weight = uniform(&[d, q], 1.0 / (d as f64).sqrt(), &mut rng);
    p.proj2_weight = uniform(&[q, 1], 1.0 / (q as f64).sqrt(), &mut rng);
    Ok(p)
}

/// Trainable scalars, complex entries counted twice.
pub fn param_count(arch: &FnoArch) -> usize {
    let (a, d, q) = (arch.input_channels(), arch.width, arch.q_hidden);
    let lift = a * d + d;
    let layer = d * d + d + 2 * arch.modes_x * arch.modes_t * d * d;
    let proj = d * q + q + q + 1;
    lift + arch.layers * layer + proj
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> FnoArch {
        FnoArch { layers: 1, width: 2, modes_x: 2, modes_t: 2, q_hidden: 4, ..FnoArch::desk() }
    }

    #[test]
    fn toy_count_by_hand() {
        assert_eq!(param_count(&toy()), 59);
        assert_eq!(init_params(&toy(), 0).unwrap().scalar_count(), 59);
    }

    #[test]
    fn count_scales_with_modes_only_through_r() {
        let a = FnoArch::desk();
        let doubled = FnoArch { modes_x: 2 * a.modes_x, ..a.clone() };
        let r = 2 * a.modes_x * a.modes_t * a.width * a.width * a.layers;
        assert_eq!(param_count(&doubled) - param_count(&a), r);
    }

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let a = FnoArch { layers: 2, width: 4, modes_x: 4, modes_t: 4, q_hidden: 8, ..FnoArch::desk() };
        let (p, q) = (init_params(&a, 7).unwrap(), init_params(&a, 7).unwrap());
        assert_eq!(p, q);
        assert_ne!(p, init_params(&a, 8).unwrap());
        assert!(p.lift_bias.data().iter().all(|&v| v == 0.0));
        assert!(p.layers.iter().all(|l| l.bias.data().iter().all(|&v| v == 0.0)));
        assert!(p.proj1_bias.data().iter().chain(p.proj2_bias.data()).all(|&v| v == 0.0));
        p.check_arch(&a).unwrap();
    }

    #[test]
    fn weight_magnitude_matches_uniform_law() {
        // 10 000 draws from U(±1/√100): E|w| = 0.05, sd(|w|) = 0.1/√12.
        let a = FnoArch { layers: 1, width: 100, modes_x: 2, modes_t: 2, q_hidden: 1, ..FnoArch::desk() };
        let p = init_params(&a, 3).unwrap();
        let w = p.layers[0].weight.data();
        assert_eq!(w.len(), 10_000);
        let mean = w.iter().map(|v| v.abs()).sum::<f64>() / w.len() as f64;
        let sigma = 0.1 / 12f64.sqrt() / (w.len() as f64).sqrt();
        assert!((mean - 0.05).abs() <= 3.0 * sigma, "{mean}");
        assert!(w.iter().all(|v| v.abs() < 0.1));
    }

    #[test]
    fn invalid_arch_rejected() {
        assert!(FnoArch { layers: 0, ..toy() }.validate().is_err());
        assert!(FnoArch { modes_x: 3, ..toy() }.validate().is_err());
        assert!(FnoArch { width: 0, ..toy() }.validate().is_err());
        assert!(toy().check_grid(4, 4).is_ok());
        assert!(toy().check_grid(2, 4).is_err());
        assert!(toy().check_grid(6, 8).is_err());
    }

    #[test]
    fn arch_json_rejects_unknown_keys() {
        assert!(serde_json::from_str::<FnoArch>(r#"{"layers": 2, "depth": 3}"#).is_err());
        let a: FnoArch = serde_json::from_str(r#"{"layers": 2}"#).unwrap();
        assert_eq!(a.width, 32);
    }
}
