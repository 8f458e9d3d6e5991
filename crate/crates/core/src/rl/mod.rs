//! Advantages, losses, optimiser, and the training loops.

mod adam;
mod advantage;
mod insilico;
mod loss;
mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use advantage::{normalize_advantages, Rollout, ADVANTAGE_EPS};
pub use insilico::{insilico_gradient, train_insilico, InSilicoConfig, InSilicoObjective, InSilicoResult};
pub(crate) use insilico::gain_mse_grad;
pub use loss::{pg_loss, ppo_loss, LossOutput};
pub use trainer::{
    train, train_pg, train_ppo, Algorithm, Environment, Observer, QuadraticEnv, RoundRecord, TrainerConfig,
    TrainingHistory, CSV_HEADER,
};
