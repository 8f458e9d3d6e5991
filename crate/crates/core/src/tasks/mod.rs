//! Rewards, metrics, targets, datasets and environments for the four tasks.

mod classify;
mod env;
pub mod mnist;
mod rewards;
mod targets;

pub use classify::{accuracy, reward_classify, rewards_classify, EncodedSet, InputEncoder};
pub use env::{
    evaluator, mean_correct_fraction, ClassifyEnv, ClassifyObjective, FocusEnv, FocusObjective, HologramEnv,
    HologramObjective,
};
pub use mnist::{load_mnist, parse_mnist, write_idx, LabeledDigit};
pub use rewards::{
    argmax, center_contrast, class_scores, contrast, gain_fit, gain_fitted_mse, psnr, psnr_from_mse, reward_focus,
    reward_hologram, FocusReward, CLASS_SCORE_TEMPERATURE, PSNR_CAP_DB,
};
pub use targets::{make_target, TargetKind, DEFAULT_GRATING_PERIOD};
