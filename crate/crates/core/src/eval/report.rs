use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{mae, rel_l2};
use crate::datagen::{ComplexityClass, DatasetManifest, ProblemKind, ProblemSample};
use crate::error::{Error, Result};
use crate::model::{forward, FnoArch, FnoParams};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetric {
    pub id: String,
    pub kind: ProblemKind,
    pub alpha: usize,
    pub beta: usize,
    /// veh/km
    pub mae: f64,
    pub rel_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetric {
    pub kind: ProblemKind,
    pub alpha: usize,
    pub beta: usize,
    pub count: usize,
    pub mean_mae: f64,
    pub mean_rel_l2: f64,
}

/// Complexity axis used as the abscissa of an error-growth curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Alpha,
    Beta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub samples: Vec<SampleMetric>,
    pub classes: Vec<ClassMetric>,
}

impl MetricReport {
    /// Aggregates per `(kind, α, β)` in sorted order.
    pub fn from_samples(samples: Vec<SampleMetric>) -> Self {
        let mut groups: BTreeMap<(ProblemKind, usize, usize), Vec<&SampleMetric>> = BTreeMap::new();
        for s in &samples {
            groups.entry((s.kind, s.alpha, s.beta)).or_default().push(s);
        }
        let classes = groups
            .into_iter()
            .map(|((kind, alpha, beta), group)| {
                let count = group.len();
                ClassMetric {
                    kind,
                    alpha,
                    beta,
                    count,
                    mean_mae: group.iter().map(|s| s.mae).sum::<f64>() / count as f64,
                    mean_rel_l2: group.iter().map(|s| s.rel_l2).sum::<f64>() / count as f64,
                }
            })
            .collect();
        Self { samples, classes }
    }

    pub fn mean_mae(&self) -> f64 {
        self.samples.iter().map(|s| s.mae).sum::<f64>() / self.samples.len() as f64
    }

    /// `(complexity, mean MAE)` per class along `axis`.
    pub fn curve_points(&self, axis: Axis) -> Vec<(f64, f64)> {
        self.classes
            .iter()
            .map(|c| {
                let x = match axis {
                    Axis::Alpha => c.alpha,
                    Axis::Beta => c.beta,
                };
                (x as f64, c.mean_mae)
            })
            .collect()
    }

    pub fn write_csv(&self, per_sample: &Path, per_class: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(per_sample)?;
        for s in &self.samples {
            w.serialize(s)?;
        }
        w.flush().map_err(|e| Error::io(per_sample, e))?;
        let mut w = csv::Writer::from_path(per_class)?;
        for c in &self.classes {
            w.serialize(c)?;
        }
        w.flush().map_err(|e| Error::io(per_class, e))
    }

    pub fn read_samples_csv(path: &Path) -> Result<Vec<SampleMetric>> {
        let mut rd = csv::Reader::from_path(path)?;
        rd.deserialize().map(|r| r.map_err(Error::from)).collect()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Metrics for already-loaded samples; `ids` label them in the report.
pub fn evaluate_samples(
    params: &FnoParams,
    arch: &FnoArch,
    samples: &[(String, ProblemSample)],
    u_max: f64,
) -> Result<MetricReport> {
    let metrics = samples
        .par_iter()
        .map(|(id, s)| {
            let y = forward(params, arch, &Tensor::from_vec(&[1, s.m, s.n], s.input.clone())?)?;
            Ok(SampleMetric {
                id: id.clone(),
                kind: s.kind,
                alpha: s.class.alpha,
                beta: s.class.beta,
                mae: mae(y.data(), &s.target, u_max)?,
                rel_l2: rel_l2(y.data(), &s.target)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport::from_samples(metrics))
}

/// Evaluates one split of a dataset, grouped by complexity class.
///
/// `per_class` caps the samples used per class (manifest order). Requested
/// `classes` without samples are omitted with a warning.
pub fn evaluate_by_complexity(
    params: &FnoParams,
    arch: &FnoArch,
    dataset: &Path,
    split: &str,
    per_class: Option<usize>,
    classes: Option<&[ComplexityClass]>,
) -> Result<MetricReport> {
    let manifest = DatasetManifest::load(dataset)?;
    arch.check_grid(manifest.grid.m, manifest.grid.n)?;
    let mut taken: BTreeMap<ComplexityClass, usize> = BTreeMap::new();
    let mut chosen = Vec::new();
    for entry in manifest.entries(split) {
        let class = entry.class();
        if classes.is_some_and(|cs| !cs.contains(&class)) {
            continue;
        }
        let count = taken.entry(class).or_default();
        if per_class.is_some_and(|cap| *count >= cap) {
            continue;
        }
        *count += 1;
        chosen.push(entry);
    }
    if let Some(cs) = classes {
        for c in cs.iter().filter(|c| !taken.contains_key(c)) {
            log::warn!("class {c} has no samples in split '{split}'; omitted");
        }
    }
    if chosen.is_empty() {
        return Err(Error::Config(format!("split '{split}' has no samples to evaluate")));
    }
    let samples = chosen
        .par_iter()
        .map(|e| Ok((e.id.clone(), manifest.load_sample(dataset, e)?)))
        .collect::<Result<Vec<_>>>()?;
    evaluate_samples(params, arch, &samples, manifest.flux.u_max)
}
