use std::path::Path;

use serde::{Deserialize, Serialize};

use super::train::{train, ModelKind, Start, TrainConfig, TrainData};
use crate::error::{Error, Result};
use crate::model::FnoArch;

/// Final-epoch numbers of one run of a λ sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub val_mae: f64,
    pub data_loss: f64,
    pub physics_loss: f64,
    pub epochs: usize,
}

/// Trains one physics-informed model per λ from the same initial
/// parameters and records the final validation error of each.
///
/// With `out_dir`, run `k` checkpoints into `out_dir/lambda_k`.
pub fn lambda_sweep(
    cfg: &TrainConfig,
    arch: &FnoArch,
    data: &TrainData,
    lambdas: &[f64],
    out_dir: Option<&Path>,
) -> Result<Vec<SweepRow>> {
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument("λ sweep needs at least one value".into()));
    }
    let mut rows = Vec::with_capacity(lambdas.len());
    for (k, &lambda) in lambdas.iter().enumerate() {
        let run = TrainConfig { model: ModelKind::PiFno, lambda, ..cfg.clone() };
        let dir = out_dir.map(|d| d.join(format!("lambda_{k}")));
        let outcome = train(&run, arch, data, Start::Fresh, dir.as_deref())?;
        let last = outcome
            .history
            .last()
            .ok_or_else(|| Error::InvalidArgument("training ran no epochs".into()))?;
        log::info!("λ = {lambda}: validation MAE {:.3} veh/km", last.val_mae);
        rows.push(SweepRow {
            lambda,
            val_mae: last.val_mae,
            data_loss: last.data_loss,
            physics_loss: last.physics_loss,
            epochs: last.epoch,
        });
    }
    Ok(rows)
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Fixed-width table for logs.
pub fn format_sweep_table(rows: &[SweepRow]) -> String {
    let mut s = format!("{:>8}  {:>14}  {:>10}  {:>10}\n", "lambda", "val MAE veh/km", "data", "physics");
    for r in rows {
        s.push_str(&format!(
            "{:>8.2}  {:>14.4}  {:>10.5}  {:>10.5}\n",
            r.lambda, r.val_mae, r.data_loss, r.physics_loss
        ));
    }
    s
}
