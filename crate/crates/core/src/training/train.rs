use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::objective::{objective, sample_tensor, PhysicsContext};
use super::losses::{data_loss, physics_penalty};
use crate::datagen::{load_split, ProblemSample};
use crate::error::{Error, Result};
use crate::eval::mae;
use crate::model::{forward, load_params_expect, save_params, FnoArch, FnoParams};
use crate::pde::{FluxParams, Grid};
use crate::tensor::{adam_step, AdamState, LrSchedule};
use crate::tns;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Data loss only.
    Fno,
    /// Data loss plus weighted conservation residual.
    #[default]
    PiFno,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelKind,
    /// Physics weight; ignored for `fno`.
    pub lambda: f64,
    pub lr: f64,
    pub decay_factor: f64,
    pub decay_every: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Epochs between checkpoints; the final epoch is always saved.
    pub checkpoint_every: usize,
    pub train_split: String,
    pub val_split: String,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::PiFno,
            lambda: 2.5,
            lr: 1e-3,
            decay_factor: 0.5,
            decay_every: 100,
            epochs: 150,
            batch_size: 32,
            seed: 0,
            checkpoint_every: 10,
            train_split: "train".into(),
            val_split: "val".into(),
        }
    }
}

impl TrainConfig {
    /// Continued training at a lower rate: `lr = 1e−4`, 10 epochs.
    pub fn fine_tune() -> Self {
        Self { lr: 1e-4, epochs: 10, ..Self::default() }
    }

    pub fn effective_lambda(&self) -> f64 {
        match self.model {
            ModelKind::Fno => 0.0,
            ModelKind::PiFno => self.lambda,
        }
    }

    pub fn schedule(&self) -> LrSchedule {
        LrSchedule { base: self.lr, factor: self.decay_factor, every: self.decay_every }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("train: {msg}")));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be finite and ≥ 0, got {}", self.lambda));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) || self.decay_every == 0 {
            return bad("decay_factor must be in (0, 1] and decay_every ≥ 1".into());
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be ≥ 1".into());
        }
        Ok(())
    }

    /// True when two configs describe the same optimisation trajectory
    /// (they may differ in length and checkpoint cadence).
    fn same_trajectory(&self, other: &Self) -> bool {
        let strip = |c: &Self| Self { epochs: 0, checkpoint_every: 0, ..c.clone() };
        strip(self) == strip(other)
    }
}

/// Samples and the discretisation they were generated on.
#[derive(Debug, Clone)]
pub struct TrainData {
    pub grid: Grid,
    pub flux: FluxParams,
    pub train: Vec<ProblemSample>,
    pub val: Vec<ProblemSample>,
}

impl TrainData {
    pub fn from_dataset(dir: &Path, train_split: &str, val_split: &str) -> Result<Self> {
        let (manifest, train) = load_split(dir, train_split)?;
        let (_, val) = load_split(dir, val_split)?;
        if train.is_empty() {
            return Err(Error::Config(format!("split '{train_split}' of {} is empty", dir.display())));
        }
        Ok(Self { grid: manifest.grid, flux: manifest.flux, train, val })
    }

    pub fn context(&self) -> PhysicsContext {
        PhysicsContext { grid: self.grid, flux: self.flux }
    }
}

/// One row of the training history. Epoch 0 is the untrained model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean relative ℓ2 data loss over the epoch's batches.
    pub data_loss: f64,
    /// Mean conservation penalty over the epoch's batches.
    pub physics_loss: f64,
    pub objective: f64,
    /// Mean validation MAE in veh/km (NaN without a validation split).
    pub val_mae: f64,
    pub lr: f64,
    /// Seconds since training started.
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub initial: Option<EpochRecord>,
    /// One record per completed epoch, numbered from 1.
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn rows(&self) -> impl Iterator<Item = &EpochRecord> {
        self.initial.iter().chain(&self.epochs)
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in self.rows() {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rd = csv::Reader::from_path(path)?;
        let mut h = TrainHistory::default();
        for row in rd.deserialize() {
            let r: EpochRecord = row?;
            if r.epoch == 0 {
                h.initial = Some(r);
            } else {
                h.epochs.push(r);
            }
        }
        Ok(h)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: FnoParams,
    pub history: TrainHistory,
    pub optimizer: AdamState,
}

/// Where training starts from.
#[derive(Debug, Clone, Default)]
pub enum Start {
    /// Fresh parameters from `init_params(arch, seed)`.
    #[default]
    Fresh,
    /// Given parameters with a fresh optimiser.
    From(FnoParams),
    /// Continue a checkpoint directory written by [`train`].
    Resume(PathBuf),
}

pub const PARAMS_DIR: &str = "params";
pub const OPTIMIZER_FILE: &str = "optimizer.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const TRAIN_CONFIG_FILE: &str = "train_config.json";

#[derive(Debug, Serialize, Deserialize)]
struct OptimizerFile {
    epochs_done: usize,
    step: u64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    schedule: LrSchedule,
    /// `[first, second]` moment file names per parameter tensor.
    moments: Vec<[String; 2]>,
}

/// Mean validation MAE (veh/km) of raw predictions.
pub fn validation_mae(params: &FnoParams, arch: &FnoArch, samples: &[ProblemSample], u_max: f64) -> Result<f64> {
    use rayon::prelude::*;
    if samples.is_empty() {
        return Ok(f64::NAN);
    }
    let errs: Vec<f64> = samples
        .par_iter()
        .map(|s| {
            let y = forward(params, arch, &sample_tensor(&s.input, s.m, s.n)?)?;
            mae(y.data(), &s.target, u_max)
        })
        .collect::<Result<_>>()?;
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

fn initial_record(params: &FnoParams, arch: &FnoArch, cfg: &TrainConfig, data: &TrainData) -> Result<EpochRecord> {
    use rayon::prelude::*;
    let ctx = data.context();
    let losses: Vec<(f64, f64)> = data
        .train
        .par_iter()
        .map(|s| {
            let y = forward(params, arch, &sample_tensor(&s.input, s.m, s.n)?)?;
            Ok((data_loss(y.data(), &s.target)?, physics_penalty(y.data(), s.kind, &ctx.grid, &ctx.flux)?))
        })
        .collect::<Result<_>>()?;
    let count = losses.len() as f64;
    let lambda = cfg.effective_lambda();
    Ok(EpochRecord {
        epoch: 0,
        data_loss: losses.iter().map(|l| l.0).sum::<f64>() / count,
        physics_loss: losses.iter().map(|l| l.1).sum::<f64>() / count,
        objective: losses.iter().map(|l| l.0 * l.0 + lambda * l.1 * l.1).sum::<f64>() / count,
        val_mae: validation_mae(params, arch, &data.val, data.flux.u_max)?,
        lr: cfg.schedule().lr(0),
        wall_time_s: 0.0,
    })
}

fn replace_dir(tmp: &Path, dst: &Path) -> Result<()> {
    let old = dst.with_extension("old");
    if old.exists() {
        fs::remove_dir_all(&old).map_err(|e| Error::io(&old, e))?;
    }
    if dst.exists() {
        fs::rename(dst, &old).map_err(|e| Error::io(dst, e))?;
    }
    fs::rename(tmp, dst).map_err(|e| Error::io(tmp, e))?;
    if old.exists() {
        fs::remove_dir_all(&old).map_err(|e| Error::io(&old, e))?;
    }
    Ok(())
}

/// Writes a checkpoint into a temporary directory, then swaps it into place.
pub fn save_checkpoint(
    dir: &Path,
    arch: &FnoArch,
    cfg: &TrainConfig,
    outcome: &TrainOutcome,
    epochs_done: usize,
) -> Result<()> {
    let tmp = dir.with_extension("tmp");
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
    }
    fs::create_dir_all(tmp.join("moments")).map_err(|e| Error::io(&tmp, e))?;
    save_params(&tmp.join(PARAMS_DIR), arch, &outcome.params)?;
    let adam = &outcome.optimizer;
    let mut moments = Vec::new();
    for (k, (m, v)) in adam.m.iter().zip(&adam.v).enumerate() {
        let names = [format!("moments/m{k:03}.tns"), format!("moments/v{k:03}.tns")];
        tns::write(&tmp.join(&names[0]), &[m.len()], m)?;
        tns::write(&tmp.join(&names[1]), &[v.len()], v)?;
        moments.push(names);
    }
    let file = OptimizerFile {
        epochs_done,
        step: adam.step,
        beta1: adam.beta1,
        beta2: adam.beta2,
        eps: adam.eps,
        schedule: adam.schedule,
        moments,
    };
    let path = tmp.join(OPTIMIZER_FILE);
    fs::write(&path, serde_json::to_string_pretty(&file)?).map_err(|e| Error::io(&path, e))?;
    let path = tmp.join(TRAIN_CONFIG_FILE);
    fs::write(&path, serde_json::to_string_pretty(cfg)?).map_err(|e| Error::io(&path, e))?;
    outcome.history.write_csv(&tmp.join(HISTORY_FILE))?;
    replace_dir(&tmp, dir)
}

/// Loads a checkpoint: outcome so far, epochs completed and the config it was trained with.
pub fn load_checkpoint(dir: &Path, arch: &FnoArch) -> Result<(TrainOutcome, usize, TrainConfig)> {
    let params = load_params_expect(&dir.join(PARAMS_DIR), arch)?;
    let path = dir.join(OPTIMIZER_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let file: OptimizerFile = serde_json::from_str(&text)?;
    let lengths = params.lengths();
    if file.moments.len() != lengths.len() {
        return Err(Error::Format { path, reason: "moment count does not match parameters".into() });
    }
    let mut adam = AdamState::new(&lengths, file.schedule);
    for (k, [m, v]) in file.moments.iter().enumerate() {
        adam.m[k] = tns::read_expect(&dir.join(m), &[lengths[k]])?;
        adam.v[k] = tns::read_expect(&dir.join(v), &[lengths[k]])?;
    }
    adam.step = file.step;
    adam.beta1 = file.beta1;
    adam.beta2 = file.beta2;
    adam.eps = file.eps;
    let history = TrainHistory::read_csv(&dir.join(HISTORY_FILE))?;
    let path = dir.join(TRAIN_CONFIG_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let cfg: TrainConfig = serde_json::from_str(&text)?;
    Ok((TrainOutcome { params, history, optimizer: adam }, file.epochs_done, cfg))
}

fn check_finite(what: &str, value: f64, epoch: usize, batch: usize, ids: &[u64]) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!(
            "{what} = {value} at epoch {epoch}, batch {batch} (sample seeds {ids:?}); lower lr or check the data"
        )))
    }
}

/// Shuffled mini-batch Adam with step lr decay. Writes checkpoints to
/// `checkpoint_dir` when given. Deterministic for a fixed seed.
pub fn train(
    cfg: &TrainConfig,
    arch: &FnoArch,
    data: &TrainData,
    start: Start,
    checkpoint_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    arch.validate()?;
    arch.check_grid(data.grid.m, data.grid.n)?;
    if data.train.is_empty() {
        return Err(Error::InvalidArgument("no training samples".into()));
    }
    let ctx = data.context();
    let lambda = cfg.effective_lambda();
    let (mut outcome, done) = match start {
        Start::Resume(dir) => {
            let (outcome, done, saved) = load_checkpoint(&dir, arch)?;
            if !saved.same_trajectory(cfg) {
                return Err(Error::Config(format!(
                    "checkpoint {} was trained with a different configuration",
                    dir.display()
                )));
            }
            (outcome, done)
        }
        other => {
            let params = match other {
                Start::From(p) => {
                    p.check_arch(arch)?;
                    p
                }
                _ => crate::model::init_params(arch, cfg.seed)?,
            };
            let optimizer = AdamState::new(&params.lengths(), cfg.schedule());
            let mut history = TrainHistory::default();
            history.initial = Some(initial_record(&params, arch, cfg, data)?);
            (TrainOutcome { params, history, optimizer }, 0)
        }
    };
    let clock = Instant::now();
    let elapsed0 = outcome.history.last().map_or(0.0, |r| r.wall_time_s);
    let mut order: Vec<usize> = (0..data.train.len()).collect();

    for epoch in done..cfg.epochs {
        let lr = cfg.schedule().lr(epoch);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(epoch as u64 + 1);
        order.sort_unstable();
        order.shuffle(&mut rng);
        let (mut data_sum, mut phys_sum, mut obj_sum) = (0.0, 0.0, 0.0);
        let batches = order.chunks(cfg.batch_size).count();
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&ProblemSample> = idx.iter().map(|&i| &data.train[i]).collect();
            let loss = objective(&outcome.params, arch, &batch, &ctx, lambda)?;
            let ids: Vec<u64> = batch.iter().map(|s| s.seed).collect();
            check_finite("objective", loss.objective, epoch + 1, b, &ids)?;
            if !loss.grads.is_finite() {
                check_finite("gradient", f64::NAN, epoch + 1, b, &ids)?;
            }
            let grads: Vec<Vec<f64>> = loss.grads.tensors().into_iter().map(|(_, _, v)| v.to_vec()).collect();
            let grad_refs: Vec<&[f64]> = grads.iter().map(|g| g.as_slice()).collect();
            adam_step(&mut outcome.params.tensors_mut(), &grad_refs, &mut outcome.optimizer, lr)?;
            data_sum += loss.data;
            phys_sum += loss.physics;
            obj_sum += loss.objective;
        }
        let val_mae = validation_mae(&outcome.params, arch, &data.val, data.flux.u_max)?;
        let record = EpochRecord {
            epoch: epoch + 1,
            data_loss: data_sum / batches as f64,
            physics_loss: phys_sum / batches as f64,
            objective: obj_sum / batches as f64,
            val_mae,
            lr,
            wall_time_s: elapsed0 + clock.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {:>4}  data {:.5}  physics {:.5}  objective {:.5}  val MAE {:.3} veh/km  lr {:.2e}",
            record.epoch,
            record.data_loss,
            record.physics_loss,
            record.objective,
            record.val_mae,
            lr
        );
        outcome.history.epochs.push(record);
        let last = epoch + 1 == cfg.epochs;
        if let Some(dir) = checkpoint_dir {
            if last || (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) {
                save_checkpoint(dir, arch, cfg, &outcome, epoch + 1)?;
            }
        }
    }
    Ok(outcome)
}

/// Continues training pretrained parameters with a fresh optimiser;
/// `cfg.epochs == 0` returns them untouched.
pub fn fine_tune(
    params: FnoParams,
    cfg: &TrainConfig,
    arch: &FnoArch,
    data: &TrainData,
    checkpoint_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    if cfg.epochs == 0 {
        let optimizer = AdamState::new(&params.lengths(), cfg.schedule());
        return Ok(TrainOutcome { params, history: TrainHistory::default(), optimizer });
    }
    train(cfg, arch, data, Start::From(params), checkpoint_dir)
}
