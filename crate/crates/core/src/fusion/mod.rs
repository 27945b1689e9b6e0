//! Fusing per-specialist distributions into one diagnosis.

mod apdf;
mod baseline;
mod io;
pub mod linalg;
mod linear;
mod matrix;
mod train;

pub use apdf::{apdf_forward, apdf_gradients, apdf_init, apdf_train, param_count, ApdfGradients, ApdfModel, ApdfTrace};
pub use baseline::{fuse_majority, fuse_mean};
pub use io::{load_model, model_from_json, model_to_json, save_model};
pub use linalg::Matrix;
pub use linear::{linear_fusion_apply, linear_fusion_train, LinearFusion};
pub use matrix::{build_matrix, DistributionMatrix};
pub use train::{train, TrainConfig, TrainLog, Trainable, MAX_SAFE_LR, MIN_SAFE_LR};
