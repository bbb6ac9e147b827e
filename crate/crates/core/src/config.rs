//! JSON run configuration. Every field is optional; missing ones take the
//! defaults below and unknown keys are rejected.
//!
//! Lengths and times are given in metres and seconds here and converted to
//! km and hours on resolution.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datagen::{DatasetSpec, ProblemKind, SamplingParams, SplitSpec};
use crate::error::{Error, Result};
use crate::eval::DEFAULT_THRESHOLD;
use crate::model::FnoArch;
use crate::pde::{FluxParams, Grid};
use crate::training::TrainConfig;

/// File name of the resolved configuration echoed into output directories.
pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Cells in x.
    pub m: usize,
    /// Time steps.
    pub n: usize,
    pub length_m: f64,
    /// Explicit time step; when absent it is `cfl_safety·dx/v_max`.
    pub dt_s: Option<f64>,
    pub cfl_safety: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { m: 64, n: 256, length_m: 1000.0, dt_s: None, cfl_safety: 0.9 }
    }
}

impl GridConfig {
    /// Grid in km/hours; errors if the CFL bound fails.
    pub fn resolve(&self, flux: &FluxParams) -> Result<Grid> {
        if !(self.length_m > 0.0 && self.length_m.is_finite()) {
            return Err(Error::Config(format!("grid.length_m must be positive, got {}", self.length_m)));
        }
        let length = self.length_m / 1000.0;
        let grid = match self.dt_s {
            Some(dt) => Grid::new(self.m, self.n, length, dt / 3600.0)?,
            None => Grid::with_cfl_safety(self.m, self.n, length, flux, self.cfl_safety)?,
        };
        grid.require_cfl(flux)?;
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatagenConfig {
    pub kind: ProblemKind,
    pub splits: Vec<SplitSpec>,
    pub sampling: SamplingParams,
}

impl Default for DatagenConfig {
    fn default() -> Self {
        let split = |name: &str, alphas: std::ops::RangeInclusive<usize>, per_class| SplitSpec {
            name: name.into(),
            alphas: alphas.collect(),
            betas: vec![0, 1, 2],
            per_class,
        };
        Self {
            kind: ProblemKind::Ivp,
            splits: vec![split("train", 0..=3, 128), split("val", 0..=3, 16), split("test", 4..=12, 10)],
            sampling: SamplingParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub split: String,
    /// Cap on evaluated samples per complexity class.
    pub per_class: Option<usize>,
    /// Prediction/target heatmaps written per evaluation.
    pub heatmaps: usize,
    pub fit_threshold: f64,
    pub bench_grids: Vec<[usize; 2]>,
    pub bench_repetitions: usize,
    pub lambdas: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            split: "test".into(),
            per_class: Some(50),
            heatmaps: 3,
            fit_threshold: DEFAULT_THRESHOLD,
            bench_grids: vec![[64, 256], [128, 512]],
            bench_repetitions: 5,
            lambdas: vec![0.0, 0.5, 1.0, 2.0, 2.5, 3.0, 5.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed for data generation and training; `train.seed` follows it.
    pub seed: u64,
    pub grid: GridConfig,
    pub flux: FluxParams,
    pub datagen: DatagenConfig,
    pub arch: FnoArch,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text)?;
        cfg.train.seed = cfg.seed;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.train.seed = seed;
        self
    }

    /// Revalidates every section.
    pub fn validate(&self) -> Result<()> {
        self.flux.validate()?;
        let grid = self.grid.resolve(&self.flux)?;
        self.datagen.sampling.validate(&self.flux)?;
        if self.datagen.splits.is_empty() {
            return Err(Error::Config("datagen.splits is empty".into()));
        }
        for s in &self.datagen.splits {
            if s.alphas.is_empty() {
                return Err(Error::Config(format!("split '{}' lists no alphas", s.name)));
            }
        }
        self.arch.validate()?;
        self.arch.check_grid(grid.m, grid.n)?;
        self.train.validate()?;
        if !(self.eval.fit_threshold.is_finite()) {
            return Err(Error::Config("eval.fit_threshold must be finite".into()));
        }
        if self.eval.lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Config("eval.lambdas must be finite and ≥ 0".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        self.grid.resolve(&self.flux)
    }

    pub fn dataset_spec(&self) -> Result<DatasetSpec> {
        Ok(DatasetSpec {
            kind: self.datagen.kind,
            grid: self.grid()?,
            flux: self.flux,
            splits: self.datagen.splits.clone(),
            master_seed: self.seed,
            sampling: self.datagen.sampling.clone(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes the resolved configuration into `dir`.
    pub fn echo(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(RESOLVED_CONFIG_FILE);
        fs::write(&path, self.to_json()?).map_err(|e| Error::io(&path, e))
    }
}
