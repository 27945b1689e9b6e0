//! Linear classifier over the flattened distribution matrix: `softmax(W m)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linalg::{softmax, Matrix};
use super::matrix::DistributionMatrix;
use super::train::{train, TrainConfig, TrainLog, Trainable};
use crate::backend::DiagnosticDistribution;
use crate::error::FusionError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFusion {
    pub n_d: usize,
    pub n_a: usize,
    /// n_d × (n_d·n_a)
    pub w: Matrix,
}

impl LinearFusion {
    pub fn zeros(n_d: usize, n_a: usize) -> Self {
        LinearFusion {
            n_d,
            n_a,
            w: Matrix::zeros(n_d, n_d * n_a),
        }
    }

    pub fn init(n_d: usize, n_a: usize, seed: u64, init_scale: f64) -> Self {
        let d = n_d * n_a;
        let bound = init_scale / (d as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        LinearFusion {
            n_d,
            n_a,
            w: Matrix {
                rows: n_d,
                cols: d,
                data: (0..n_d * d).map(|_| rng.gen_range(-bound..=bound)).collect(),
            },
        }
    }

    pub fn param_count(&self) -> usize {
        self.w.data.len()
    }

    fn probs(&self, m: &[f64]) -> Vec<f64> {
        softmax(&self.w.matvec(m))
    }

    /// Loss and gradient for one example.
    pub fn gradient(&self, matrix: &DistributionMatrix, target: usize) -> Result<(f64, Matrix), FusionError> {
        self.check(matrix)?;
        if target >= self.n_d {
            return Err(FusionError::Target { target, n_d: self.n_d });
        }
        let mut g = vec![0.0; self.param_count()];
        let loss = self.accumulate(&matrix.flatten(), target, &mut g);
        Ok((
            loss,
            Matrix {
                rows: self.w.rows,
                cols: self.w.cols,
                data: g,
            },
        ))
    }

    fn check(&self, matrix: &DistributionMatrix) -> Result<(), FusionError> {
        if matrix.n_agents() != self.n_a || matrix.n_diseases() != self.n_d {
            return Err(FusionError::Shape {
                expected_agents: self.n_a,
                expected_diseases: self.n_d,
                agents: matrix.n_agents(),
                diseases: matrix.n_diseases(),
            });
        }
        Ok(())
    }
}

impl Trainable for LinearFusion {
    fn shape(&self) -> (usize, usize) {
        (self.n_a, self.n_d)
    }

    fn param_count(&self) -> usize {
        LinearFusion::param_count(self)
    }

    fn accumulate(&self, input: &[f64], target: usize, grad: &mut [f64]) -> f64 {
        let mut dz = self.probs(input);
        let loss = -dz[target].ln();
        dz[target] -= 1.0;
        let d = self.w.cols;
        for (r, &dzr) in dz.iter().enumerate() {
            for (g, &x) in grad[r * d..(r + 1) * d].iter_mut().zip(input) {
                *g += dzr * x;
            }
        }
        loss
    }

    fn step(&mut self, grad: &[f64], scale: f64) {
        for (w, g) in self.w.data.iter_mut().zip(grad) {
            *w -= scale * g;
        }
    }
}

pub fn linear_fusion_train(
    data: &[(DistributionMatrix, usize)],
    config: &TrainConfig,
) -> Result<(LinearFusion, TrainLog), FusionError> {
    let (n_a, n_d) = data
        .first()
        .map(|(m, _)| (m.n_agents(), m.n_diseases()))
        .ok_or(FusionError::EmptyTrainingSet)?;
    let init = LinearFusion::init(n_d, n_a, config.seed, config.init_scale);
    train(&init, data, config)
}

pub fn linear_fusion_apply(
    model: &LinearFusion,
    matrix: &DistributionMatrix,
) -> Result<DiagnosticDistribution, FusionError> {
    model.check(matrix)?;
    Ok(DiagnosticDistribution::new(
        matrix.labels().to_vec(),
        model.probs(&matrix.flatten()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::matrix::build_matrix;

    fn m() -> DistributionMatrix {
        let labels = vec!["a".to_string(), "b".to_string()];
        build_matrix(&[
            DiagnosticDistribution::new(labels.clone(), vec![0.9, 0.1]),
            DiagnosticDistribution::new(labels, vec![0.3, 0.7]),
        ])
        .unwrap()
    }

    #[test]
    fn zero_weights_uniform_and_counts() {
        let z = LinearFusion::zeros(2, 2);
        let out = linear_fusion_apply(&z, &m()).unwrap();
        assert_eq!(out.probs, vec![0.5, 0.5]);
        assert_eq!(LinearFusion::zeros(4, 4).param_count(), 64);
    }

    #[test]
    fn gradient_at_zero_is_residual_outer_input() {
        let (loss, g) = LinearFusion::zeros(2, 2).gradient(&m(), 0).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-15);
        let x = m().flatten();
        for (j, xj) in x.iter().enumerate() {
            assert!((g.at(0, j) - (-0.5 * xj)).abs() < 1e-15);
            assert!((g.at(1, j) - 0.5 * xj).abs() < 1e-15);
        }
    }

    #[test]
    fn trains_down() {
        let data = vec![(m(), 0)];
        let cfg = TrainConfig {
            epochs: 50,
            ..TrainConfig::default()
        };
        let (_, log) = linear_fusion_train(&data, &cfg).unwrap();
        assert!(log.losses.last().unwrap() < &log.losses[0]);
        assert_eq!(log.param_count, 8);
    }
}
