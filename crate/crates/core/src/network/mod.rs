//! Stacked implicit networks: model, losses, the weight-smoothness
//! regularizer, mini-batch training, gradient checking and checkpoints.

mod checkpoint;
mod gradcheck;
mod model;
mod train;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
pub use gradcheck::{
    gradcheck, random_gradcheck_case, relative_error, set_flat, GradcheckReport, CHECK_SOLVER_TOL, FD_STEP};
pub use model::{
    accumulate_sample_grad, batch_loss_and_grad, model_forward, param_count, predict, regularizer,
    spec_param_count, Affine, BlockGrad, LossKind, Model, ModelGrads, ModelSpec, SampleGrad,
};
pub use train::{evaluate, loss_and_grad, train, EpochStats, Evaluation, TrainConfig, TrainRecord, SHUFFLE_STREAM};
