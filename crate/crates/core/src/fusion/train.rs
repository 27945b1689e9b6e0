//! Plain gradient descent on mean cross-entropy, shared by every trainable fuser.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::DistributionMatrix;
use crate::error::FusionError;

pub const MIN_SAFE_LR: f64 = 1e-3;
pub const MAX_SAFE_LR: f64 = 1e-1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    /// `None` trains full-batch.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
    /// Permits learning rates outside [1e-3, 1e-1].
    #[serde(default)]
    pub allow_unsafe_lr: bool,
}

fn default_lr() -> f64 {
    1e-1
}
fn default_epochs() -> usize {
    200
}
fn default_init_scale() -> f64 {
    1.0
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: default_lr(),
            epochs: default_epochs(),
            batch_size: None,
            seed: 0,
            init_scale: default_init_scale(),
            allow_unsafe_lr: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), FusionError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(FusionError::Config(format!("learning_rate = {}", self.learning_rate)));
        }
        if !self.allow_unsafe_lr && !(MIN_SAFE_LR..=MAX_SAFE_LR).contains(&self.learning_rate) {
            return Err(FusionError::LearningRate(self.learning_rate));
        }
        if self.init_scale.is_nan() || self.init_scale <= 0.0 {
            return Err(FusionError::Config(format!("init_scale = {}", self.init_scale)));
        }
        if self.batch_size == Some(0) {
            return Err(FusionError::Config("batch_size = 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    /// Mean cross-entropy per completed epoch, measured before that epoch's updates.
    pub losses: Vec<f64>,
    pub seconds: f64,
    pub param_count: usize,
}

/// A fuser trained by gradient descent. Gradients use the same flat
/// parameter order as [`Trainable::step`].
pub trait Trainable: Clone {
    fn shape(&self) -> (usize, usize);
    fn param_count(&self) -> usize;
    /// Cross-entropy loss for one example; adds its gradient into `grad`.
    fn accumulate(&self, input: &[f64], target: usize, grad: &mut [f64]) -> f64;
    /// params -= scale · grad
    fn step(&mut self, grad: &[f64], scale: f64);
}

pub fn train<M: Trainable>(
    model: &M,
    data: &[(DistributionMatrix, usize)],
    config: &TrainConfig,
) -> Result<(M, TrainLog), FusionError> {
    config.validate()?;
    if data.is_empty() {
        return Err(FusionError::EmptyTrainingSet);
    }
    let (n_a, n_d) = model.shape();
    let mut inputs = Vec::with_capacity(data.len());
    for (m, t) in data {
        if m.n_agents() != n_a || m.n_diseases() != n_d {
            return Err(FusionError::Shape {
                expected_agents: n_a,
                expected_diseases: n_d,
                agents: m.n_agents(),
                diseases: m.n_diseases(),
            });
        }
        if *t >= n_d {
            return Err(FusionError::Target { target: *t, n_d });
        }
        inputs.push((m.flatten(), *t));
    }

    let start = Instant::now();
    let mut model = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let batch = config.batch_size.unwrap_or(inputs.len()).min(inputs.len());
    let mut grad = vec![0.0; model.param_count()];
    let mut losses = Vec::with_capacity(config.epochs);
    let mut last_finite = f64::NAN;

    for epoch in 0..config.epochs {
        if config.batch_size.is_some() {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in chunk {
                let (x, t) = &inputs[i];
                epoch_loss += model.accumulate(x, *t, &mut grad);
            }
            model.step(&grad, config.learning_rate / chunk.len() as f64);
        }
        let mean = epoch_loss / inputs.len() as f64;
        if !mean.is_finite() {
            return Err(FusionError::Diverged {
                epoch,
                last_finite_loss: last_finite,
            });
        }
        last_finite = mean;
        losses.push(mean);
    }

    Ok((
        model.clone(),
        TrainLog {
            losses,
            seconds: start.elapsed().as_secs_f64(),
            param_count: model.param_count(),
        },
    ))
}
