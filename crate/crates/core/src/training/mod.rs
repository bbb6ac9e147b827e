//! Losses, the FNO / physics-informed objective, and the training loop.

mod losses;
mod objective;
mod sweep;
mod train;

pub use losses::{data_loss, data_loss_grad, physics_penalty, physics_penalty_grad, physics_residual_field, ResidualField};
pub use objective::{objective, output_gradient, sample_loss, sample_tensor, BatchLoss, PhysicsContext, SampleLoss};
pub use sweep::{format_sweep_table, lambda_sweep, write_sweep_csv, SweepRow};
pub use train::{
    fine_tune, load_checkpoint, save_checkpoint, train, validation_mae, EpochRecord, ModelKind, Start, TrainConfig,
    TrainData, TrainHistory, TrainOutcome, HISTORY_FILE, OPTIMIZER_FILE, PARAMS_DIR, TRAIN_CONFIG_FILE,
};
