use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::{BoundaryTrace, DensityField, FluxParams, ProbeSet};

/// Marker for unobserved cells in an encoded input.
pub const NULL_VALUE: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    /// Ring road, initial data only.
    Ivp,
    /// Initial data plus both road-end densities.
    Bvp,
    /// Initial data plus probe-vehicle observations.
    Ip,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Ivp => "ivp",
            ProblemKind::Bvp => "bvp",
            ProblemKind::Ip => "ip",
        })
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ivp" => Ok(ProblemKind::Ivp),
            "bvp" => Ok(ProblemKind::Bvp),
            "ip" => Ok(ProblemKind::Ip),
            other => Err(Error::Config(format!("unknown problem kind '{other}'"))),
        }
    }
}

/// Input complexity: `alpha` initial steps, `beta` downstream wavelets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ComplexityClass {
    pub alpha: usize,
    pub beta: usize,
}

impl fmt::Display for ComplexityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "i{}b{}", self.alpha, self.beta)
    }
}

/// One operator training pair, normalised by `u_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSample {
    pub kind: ProblemKind,
    pub m: usize,
    pub n: usize,
    /// `m×n`, `u/u_max` on observed cells and [`NULL_VALUE`] elsewhere.
    pub input: Vec<f64>,
    /// `m×n` normalised solution.
    pub target: Vec<f64>,
    pub mask: Vec<bool>,
    pub class: ComplexityClass,
    pub seed: u64,
}

impl ProblemSample {
    pub fn with_meta(mut self, class: ComplexityClass, seed: u64) -> Self {
        self.class = class;
        self.seed = seed;
        self
    }

    /// Rebuilds a sample from stored matrices; the mask is every non-null cell.
    pub fn from_parts(
        kind: ProblemKind,
        m: usize,
        n: usize,
        input: Vec<f64>,
        target: Vec<f64>,
        class: ComplexityClass,
        seed: u64,
    ) -> Result<Self> {
        if input.len() != m * n || target.len() != m * n {
            return Err(Error::shape(format!(
                "sample matrices must be {m}×{n}, got {} and {}",
                input.len(),
                target.len()
            )));
        }
        let mask = input.iter().map(|&v| v != NULL_VALUE).collect();
        Ok(Self {
            kind,
            m,
            n,
            input,
            target,
            mask,
            class,
            seed,
        })
    }

    pub fn masked_cells(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Checks the encoding contract: observed cells carry the target, the rest
    /// carry the null marker, values are normalised, and the mask layout fits
    /// the problem kind.
    pub fn check_invariants(&self) -> Result<()> {
        let (m, n) = (self.m, self.n);
        if self.input.len() != m * n || self.target.len() != m * n || self.mask.len() != m * n {
            return Err(Error::shape("sample buffers disagree with m×n"));
        }
        for k in 0..m * n {
            let t = self.target[k];
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidArgument(format!("target entry {k} = {t} outside [0, 1]")));
            }
            let v = self.input[k];
            if self.mask[k] {
                if v != t {
                    return Err(Error::InvalidArgument(format!(
                        "observed cell {k} carries {v}, target is {t}"
                    )));
                }
            } else if v != NULL_VALUE {
                return Err(Error::InvalidArgument(format!("unobserved cell {k} carries {v}")));
            }
        }
        for i in 0..m {
            for j in 0..n {
                let required = j == 0 || (self.kind == ProblemKind::Bvp && (i == 0 || i == m - 1));
                if required && !self.mask[i * n + j] {
                    return Err(Error::InvalidArgument(format!(
                        "{} sample must observe cell ({i}, {j})",
                        self.kind
                    )));
                }
                if self.kind == ProblemKind::Ivp && j != 0 && self.mask[i * n + j] {
                    return Err(Error::InvalidArgument(format!("ivp sample observes ({i}, {j})")));
                }
            }
        }
        Ok(())
    }
}

/// Encodes solver output as an operator sample.
///
/// Masks: IVP observes column 0; BVP adds rows 0 and `m−1`; IP adds the
/// cells covered by probes. `boundary` must be given exactly for BVP and
/// `probes` exactly for IP.
pub fn encode_sample(
    kind: ProblemKind,
    u0: &[f64],
    boundary: Option<&BoundaryTrace>,
    probes: Option<&ProbeSet>,
    target: &DensityField,
    p: &FluxParams,
) -> Result<ProblemSample> {
    let (m, n) = (target.m(), target.n());
    if u0.len() != m {
        return Err(Error::shape(format!("initial condition length {} vs {m} cells", u0.len())));
    }
    match (kind, boundary.is_some(), probes.is_some()) {
        (ProblemKind::Ivp, false, false) | (ProblemKind::Bvp, true, false) | (ProblemKind::Ip, false, true) => {}
        _ => {
            return Err(Error::InvalidArgument(format!(
                "{kind} sample: boundary given = {}, probes given = {}",
                boundary.is_some(),
                probes.is_some()
            )))
        }
    }
    if let Some(b) = boundary {
        if b.upstream.len() != n || b.downstream.len() != n {
            return Err(Error::shape(format!("boundary traces must have length {n}")));
        }
    }
    let mut mask = vec![false; m * n];
    for i in 0..m {
        mask[i * n] = true;
    }
    if kind == ProblemKind::Bvp {
        for j in 0..n {
            mask[j] = true;
            mask[(m - 1) * n + j] = true;
        }
    }
    if let Some(probes) = probes {
        if probes.dims() != (m, n) {
            return Err(Error::shape(format!(
                "probe mask {:?} vs field {m}×{n}",
                probes.dims()
            )));
        }
        for (dst, &src) in mask.iter_mut().zip(&probes.mask) {
            *dst |= src;
        }
    }
    let target_norm = target.normalized(p.u_max);
    let input = mask
        .iter()
        .zip(&target_norm)
        .map(|(&seen, &t)| if seen { t } else { NULL_VALUE })
        .collect();
    Ok(ProblemSample {
        kind,
        m,
        n,
        input,
        target: target_norm,
        mask,
        class: ComplexityClass { alpha: 0, beta: 0 },
        seed: 0,
    })
}
