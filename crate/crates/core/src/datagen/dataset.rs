use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conditions::{sample_boundary_condition, sample_initial_condition};
use super::sample::{encode_sample, ComplexityClass, ProblemKind, ProblemSample};
use crate::error::{Error, Result};
use crate::pde::{extract_probes, solve_bvp, solve_ivp, BoundaryTrace, FluxParams, Grid};
use crate::tns;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

/// Knobs of the random input generators. Densities in veh/km.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingParams {
    pub step_height: f64,
    pub ic_min: f64,
    /// Defaults to the jam density.
    pub ic_max: Option<f64>,
    pub base_min: f64,
    pub base_max: f64,
    pub noise_sd: f64,
    pub probes_min: usize,
    pub probes_max: usize,
    /// Targets whose normalized RMS falls below this are redrawn. The
    /// relative data loss blows up on near-empty roads.
    pub min_target_rms: f64,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            step_height: 30.0,
            ic_min: 0.0,
            ic_max: None,
            base_min: 5.0,
            base_max: 40.0,
            noise_sd: 3.0,
            probes_min: 2,
            probes_max: 6,
            min_target_rms: 0.02,
        }
    }
}

impl SamplingParams {
    pub fn validate(&self, flux: &FluxParams) -> Result<()> {
        let ic_max = self.ic_max.unwrap_or(flux.u_max);
        if !(0.0 <= self.ic_min && self.ic_min < ic_max && ic_max <= flux.u_max) {
            return Err(Error::Config(format!(
                "initial-condition range [{}, {ic_max}] must sit inside [0, u_max]",
                self.ic_min
            )));
        }
        if !(0.0..0.5).contains(&self.min_target_rms) {
            return Err(Error::Config(format!("min_target_rms {} must sit in [0, 0.5)", self.min_target_rms)));
        }
        if !(0.0 <= self.base_min && self.base_min <= self.base_max && self.base_max <= 0.5 * flux.u_max) {
            return Err(Error::Config(format!(
                "boundary base range [{}, {}] must sit inside [0, u_max/2]",
                self.base_min, self.base_max
            )));
        }
        if self.step_height < 0.0 || self.noise_sd < 0.0 {
            return Err(Error::Config("step height and noise level must be non-negative".into()));
        }
        if self.probes_min > self.probes_max {
            return Err(Error::Config("probes_min exceeds probes_max".into()));
        }
        Ok(())
    }
}

/// One block of samples sharing a split label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub name: String,
    pub alphas: Vec<usize>,
    /// Ignored for IVP.
    #[serde(default)]
    pub betas: Vec<usize>,
    pub per_class: usize,
}

impl SplitSpec {
    pub fn classes(&self, kind: ProblemKind) -> Vec<ComplexityClass> {
        let betas: Vec<usize> = if kind == ProblemKind::Ivp || self.betas.is_empty() {
            vec![0]
        } else {
            self.betas.clone()
        };
        self.alphas
            .iter()
            .flat_map(|&alpha| betas.iter().map(move |&beta| ComplexityClass { alpha, beta }))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub kind: ProblemKind,
    pub grid: Grid,
    pub flux: FluxParams,
    pub splits: Vec<SplitSpec>,
    pub master_seed: u64,
    pub sampling: SamplingParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub split: String,
    pub kind: ProblemKind,
    pub alpha: usize,
    pub beta: usize,
    pub seed: u64,
    pub input: String,
    pub target: String,
    /// `2×n` ghost densities (upstream, downstream) in veh/km.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub boundary: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub probes: Option<usize>,
}

impl ManifestEntry {
    pub fn class(&self) -> ComplexityClass {
        ComplexityClass {
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub kind: ProblemKind,
    pub grid: Grid,
    pub flux: FluxParams,
    pub master_seed: u64,
    pub samples: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Self = serde_json::from_str(&text)?;
        if manifest.version != MANIFEST_VERSION {
            return Err(Error::Format {
                path,
                reason: format!("unsupported manifest version {}", manifest.version),
            });
        }
        Ok(manifest)
    }

    pub fn entries<'a>(&'a self, split: &'a str) -> impl Iterator<Item = &'a ManifestEntry> + 'a {
        self.samples.iter().filter(move |e| e.split == split)
    }

    pub fn load_sample(&self, dir: &Path, entry: &ManifestEntry) -> Result<ProblemSample> {
        let (m, n) = (self.grid.m, self.grid.n);
        let input = tns::read_expect(&dir.join(&entry.input), &[m, n])?;
        let target = tns::read_expect(&dir.join(&entry.target), &[m, n])?;
        ProblemSample::from_parts(entry.kind, m, n, input, target, entry.class(), entry.seed)
    }

    pub fn load_boundary(&self, dir: &Path, entry: &ManifestEntry) -> Result<Option<BoundaryTrace>> {
        let Some(file) = &entry.boundary else {
            return Ok(None);
        };
        let n = self.grid.n;
        let data = tns::read_expect(&dir.join(file), &[2, n])?;
        Ok(Some(BoundaryTrace {
            upstream: data[..n].to_vec(),
            downstream: data[n..].to_vec(),
        }))
    }

    /// Checks that every referenced file exists with the declared shape.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for entry in &self.samples {
            self.load_sample(dir, entry)?;
            self.load_boundary(dir, entry)?;
        }
        Ok(())
    }
}

/// Loads all samples of one split, in manifest order.
pub fn load_split(dir: &Path, split: &str) -> Result<(DatasetManifest, Vec<ProblemSample>)> {
    let manifest = DatasetManifest::load(dir)?;
    let samples = manifest
        .entries(split)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|e| manifest.load_sample(dir, e))
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, samples))
}

/// Draws inputs for one sample from its seed, solves, and encodes.
///
/// Returns the boundary trace used for BVP and IP samples.
pub fn generate_sample(
    kind: ProblemKind,
    class: ComplexityClass,
    seed: u64,
    grid: &Grid,
    flux: &FluxParams,
    sampling: &SamplingParams,
) -> Result<(ProblemSample, Option<BoundaryTrace>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ic_max = sampling.ic_max.unwrap_or(flux.u_max);
    loop {
        let u0 = sample_initial_condition(class.alpha, grid.m, sampling.ic_min, ic_max, sampling.step_height, &mut rng);
        let (sample, boundary) = match kind {
            ProblemKind::Ivp => {
                let field = solve_ivp(&u0, grid, flux)?;
                (encode_sample(kind, &u0, None, None, &field, flux)?, None)
            }
            ProblemKind::Bvp | ProblemKind::Ip => {
                let up_base = rng.random_range(sampling.base_min..=sampling.base_max);
                let upstream = sample_boundary_condition(0, grid.n, flux.u_max, up_base, sampling.noise_sd, &mut rng);
                let down_base = rng.random_range(sampling.base_min..=sampling.base_max);
                let downstream =
                    sample_boundary_condition(class.beta, grid.n, flux.u_max, down_base, sampling.noise_sd, &mut rng);
                let trace = BoundaryTrace { upstream, downstream };
                let field = solve_bvp(&u0, &trace, grid, flux)?;
                let sample = if kind == ProblemKind::Bvp {
                    encode_sample(kind, &u0, Some(&trace), None, &field, flux)?
                } else {
                    let count = rng.random_range(sampling.probes_min..=sampling.probes_max);
                    let probes = extract_probes(&field, count, grid, flux, rng.next_u64());
                    encode_sample(kind, &u0, None, Some(&probes), &field, flux)?
                };
                (sample, Some(trace))
            }
        };
        let rms = (sample.target.iter().map(|v| v * v).sum::<f64>() / sample.target.len() as f64).sqrt();
        if rms > 0.0 && rms >= sampling.min_target_rms {
            return Ok((sample.with_meta(class, seed), boundary));
        }
    }
}

struct Job {
    split: String,
    class: ComplexityClass,
    index: usize,
    seed: u64,
}

/// Generates every sample of `spec` under `out_dir` and writes the manifest.
///
/// Output bytes depend only on `spec`; thread count does not matter.
pub fn generate_dataset(spec: &DatasetSpec, out_dir: &Path) -> Result<DatasetManifest> {
    spec.flux.validate()?;
    spec.grid.validate()?;
    spec.grid.require_cfl(&spec.flux)?;
    spec.sampling.validate(&spec.flux)?;
    if spec.kind != ProblemKind::Ivp {
        for split in &spec.splits {
            if let Some(&beta) = split.betas.iter().max() {
                if beta > 0 && spec.grid.n / beta < 4 {
                    return Err(Error::Config(format!(
                        "{beta} wavelets need n ≥ {} time steps",
                        4 * beta
                    )));
                }
            }
        }
    }

    let mut seeder = ChaCha8Rng::seed_from_u64(spec.master_seed);
    let mut jobs = Vec::new();
    for split in &spec.splits {
        for class in split.classes(spec.kind) {
            for index in 0..split.per_class {
                jobs.push(Job {
                    split: split.name.clone(),
                    class,
                    index,
                    seed: seeder.next_u64(),
                });
            }
        }
    }

    let sample_dir = out_dir.join("samples");
    fs::create_dir_all(&sample_dir).map_err(|e| Error::io(&sample_dir, e))?;
    let (m, n) = (spec.grid.m, spec.grid.n);

    let samples = jobs
        .par_iter()
        .map(|job| -> Result<ManifestEntry> {
            let (sample, trace) =
                generate_sample(spec.kind, job.class, job.seed, &spec.grid, &spec.flux, &spec.sampling)?;
            sample.check_invariants()?;
            let id = format!("{}-{}-{}-{:04}", job.split, spec.kind, job.class, job.index);
            let input = format!("samples/{id}.input.tns");
            let target = format!("samples/{id}.target.tns");
            tns::write(&out_dir.join(&input), &[m, n], &sample.input)?;
            tns::write(&out_dir.join(&target), &[m, n], &sample.target)?;
            let boundary = match &trace {
                Some(t) => {
                    let file = format!("samples/{id}.boundary.tns");
                    let data: Vec<f64> = t.upstream.iter().chain(&t.downstream).copied().collect();
                    tns::write(&out_dir.join(&file), &[2, n], &data)?;
                    Some(file)
                }
                None => None,
            };
            let probes = (spec.kind == ProblemKind::Ip).then(|| {
                sample.masked_cells() - m
            });
            Ok(ManifestEntry {
                id,
                split: job.split.clone(),
                kind: spec.kind,
                alpha: job.class.alpha,
                beta: job.class.beta,
                seed: job.seed,
                input,
                target,
                boundary,
                probes,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        kind: spec.kind,
        grid: spec.grid,
        flux: spec.flux,
        master_seed: spec.master_seed,
        samples,
    };
    let path = out_dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Directory of the dataset a manifest path points into.
pub fn dataset_dir(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.to_path_buf()
    } else {
        path.parent().map(Path::to_path_buf).unwrap_or_default()
    }
}
