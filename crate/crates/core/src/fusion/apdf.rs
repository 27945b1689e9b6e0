//! Attention-based probability distribution fusion.
//!
//! With `m` the agent-major flattening of the distribution matrix
//! (length `d = n_d·n_a`):
//!
//! ```text
//! q = W_q m,  k = W_k m,  v = W_v m          (each length d)
//! S = q kᵀ / √d                               (d × d)
//! A = row_softmax(S)
//! c = A v                                     (length d)
//! z = W_o c                                   (length n_d)
//! p = softmax(z)
//! ```
//!
//! No biases: the parameter count is exactly `3d² + d·n_d`, i.e.
//! `3n⁴ + n³` when `n_a = n_d = n`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linalg::{softmax, Matrix};
use super::matrix::DistributionMatrix;
use super::train::{train, TrainConfig, TrainLog, Trainable};
use crate::backend::DiagnosticDistribution;
use crate::error::FusionError;

pub fn param_count(n_d: usize, n_a: usize) -> usize {
    let d = n_d * n_a;
    3 * d * d + d * n_d
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApdfModel {
    pub n_d: usize,
    pub n_a: usize,
    pub w_q: Matrix,
    pub w_k: Matrix,
    pub w_v: Matrix,
    pub w_o: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApdfGradients {
    pub w_q: Matrix,
    pub w_k: Matrix,
    pub w_v: Matrix,
    pub w_o: Matrix,
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ApdfTrace {
    pub m: Vec<f64>,
    pub q: Vec<f64>,
    pub k: Vec<f64>,
    pub v: Vec<f64>,
    pub attention: Matrix,
    pub context: Vec<f64>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

pub fn apdf_init(n_d: usize, n_a: usize, seed: u64, init_scale: f64) -> ApdfModel {
    assert!(n_d >= 2 && n_a >= 1, "APDF needs n_d >= 2 and n_a >= 1");
    let d = n_d * n_a;
    let bound = init_scale / (d as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |rows: usize, cols: usize| Matrix {
        rows,
        cols,
        data: (0..rows * cols).map(|_| rng.gen_range(-bound..=bound)).collect(),
    };
    let w_q = draw(d, d);
    let w_k = draw(d, d);
    let w_v = draw(d, d);
    let w_o = draw(n_d, d);
    ApdfModel { n_d, n_a, w_q, w_k, w_v, w_o }
}

impl ApdfModel {
    pub fn zeros(n_d: usize, n_a: usize) -> Self {
        let d = n_d * n_a;
        ApdfModel {
            n_d,
            n_a,
            w_q: Matrix::zeros(d, d),
            w_k: Matrix::zeros(d, d),
            w_v: Matrix::zeros(d, d),
            w_o: Matrix::zeros(n_d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.n_d * self.n_a
    }

    pub fn param_count(&self) -> usize {
        self.w_q.data.len() + self.w_k.data.len() + self.w_v.data.len() + self.w_o.data.len()
    }

    pub fn is_finite(&self) -> bool {
        self.w_q.is_finite() && self.w_k.is_finite() && self.w_v.is_finite() && self.w_o.is_finite()
    }

    fn check_shape(&self, matrix: &DistributionMatrix) -> Result<(), FusionError> {
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

    /// Forward pass on an already flattened input.
    pub fn trace(&self, m: &[f64]) -> ApdfTrace {
        let d = self.dim();
        let q = self.w_q.matvec(m);
        let k = self.w_k.matvec(m);
        let v = self.w_v.matvec(m);
        let scale = 1.0 / (d as f64).sqrt();
        let mut attention = Matrix::zeros(d, d);
        let mut context = vec![0.0; d];
        for i in 0..d {
            let scores: Vec<f64> = k.iter().map(|kj| q[i] * kj * scale).collect();
            let row = softmax(&scores);
            context[i] = row.iter().zip(&v).map(|(a, vj)| a * vj).sum();
            attention.data[i * d..(i + 1) * d].copy_from_slice(&row);
        }
        let logits = self.w_o.matvec(&context);
        let probs = softmax(&logits);
        ApdfTrace {
            m: m.to_vec(),
            q,
            k,
            v,
            attention,
            context,
            logits,
            probs,
        }
    }

    /// Backpropagates −log p[target] through a trace; adds into `g` (flat, parameter order).
    fn backward_into(&self, t: &ApdfTrace, target: usize, g: &mut [f64]) {
        let d = self.dim();
        let dd = d * d;
        let (g_q, rest) = g.split_at_mut(dd);
        let (g_k, rest) = rest.split_at_mut(dd);
        let (g_v, g_o) = rest.split_at_mut(dd);

        let mut dz = t.probs.clone();
        dz[target] -= 1.0;
        for (r, &dzr) in dz.iter().enumerate() {
            for (x, &c) in g_o[r * d..(r + 1) * d].iter_mut().zip(&t.context) {
                *x += dzr * c;
            }
        }
        let dc = self.w_o.t_matvec(&dz);

        let scale = 1.0 / (d as f64).sqrt();
        let mut dq = vec![0.0; d];
        let mut dk = vec![0.0; d];
        let mut dv = vec![0.0; d];
        for i in 0..d {
            let a = t.attention.row(i);
            // dA_ij = dc_i · v_j ; softmax backward per row.
            let weighted: f64 = a.iter().zip(&t.v).map(|(aij, vj)| aij * dc[i] * vj).sum();
            for j in 0..d {
                dv[j] += a[j] * dc[i];
                let ds = a[j] * (dc[i] * t.v[j] - weighted);
                dq[i] += ds * t.k[j] * scale;
                dk[j] += ds * t.q[i] * scale;
            }
        }
        for (gm, dvec) in [(g_q, &dq), (g_k, &dk), (g_v, &dv)] {
            for (r, &dr) in dvec.iter().enumerate() {
                for (x, &mj) in gm[r * d..(r + 1) * d].iter_mut().zip(&t.m) {
                    *x += dr * mj;
                }
            }
        }
    }
}

pub fn apdf_forward(model: &ApdfModel, matrix: &DistributionMatrix) -> Result<DiagnosticDistribution, FusionError> {
    model.check_shape(matrix)?;
    let t = model.trace(&matrix.flatten());
    Ok(DiagnosticDistribution::new(matrix.labels().to_vec(), t.probs))
}

/// Analytic gradients of the cross-entropy loss for one example.
pub fn apdf_gradients(
    model: &ApdfModel,
    matrix: &DistributionMatrix,
    target: usize,
) -> Result<(f64, ApdfGradients), FusionError> {
    model.check_shape(matrix)?;
    if target >= model.n_d {
        return Err(FusionError::Target {
            target,
            n_d: model.n_d,
        });
    }
    let mut flat = vec![0.0; model.param_count()];
    let loss = model.accumulate(&matrix.flatten(), target, &mut flat);
    let d = model.dim();
    let dd = d * d;
    let take = |rows: usize, cols: usize, off: usize| Matrix {
        rows,
        cols,
        data: flat[off..off + rows * cols].to_vec(),
    };
    Ok((
        loss,
        ApdfGradients {
            w_q: take(d, d, 0),
            w_k: take(d, d, dd),
            w_v: take(d, d, 2 * dd),
            w_o: take(model.n_d, d, 3 * dd),
        },
    ))
}

impl Trainable for ApdfModel {
    fn shape(&self) -> (usize, usize) {
        (self.n_a, self.n_d)
    }

    fn param_count(&self) -> usize {
        ApdfModel::param_count(self)
    }

    fn accumulate(&self, input: &[f64], target: usize, grad: &mut [f64]) -> f64 {
        let t = self.trace(input);
        self.backward_into(&t, target, grad);
        -t.probs[target].ln()
    }

    fn step(&mut self, grad: &[f64], scale: f64) {
        let params = self
            .w_q
            .data
            .iter_mut()
            .chain(self.w_k.data.iter_mut())
            .chain(self.w_v.data.iter_mut())
            .chain(self.w_o.data.iter_mut());
        for (w, g) in params.zip(grad) {
            *w -= scale * g;
        }
    }
}

pub fn apdf_train(
    model: &ApdfModel,
    data: &[(DistributionMatrix, usize)],
    config: &TrainConfig,
) -> Result<(ApdfModel, TrainLog), FusionError> {
    train(model, data, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::matrix::build_matrix;

    fn matrix(rows: &[&[f64]]) -> DistributionMatrix {
        let n_d = rows[0].len();
        let labels: Vec<String> = (0..n_d).map(|i| format!("d{i}")).collect();
        let rows: Vec<_> = rows
            .iter()
            .map(|r| DiagnosticDistribution::new(labels.clone(), r.to_vec()))
            .collect();
        build_matrix(&rows).unwrap()
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(param_count(4, 4), 832);
        assert_eq!(param_count(10, 10), 31000);
        assert_eq!(param_count(1, 1), 4);
        assert_eq!(apdf_init(4, 4, 0, 1.0).param_count(), 832);
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = apdf_init(3, 2, 42, 1.0);
        assert_eq!(a, apdf_init(3, 2, 42, 1.0));
        assert_ne!(a, apdf_init(3, 2, 43, 1.0));
        let bound = 1.0 / 6f64.sqrt();
        assert!(a.w_q.data.iter().all(|w| w.abs() <= bound));
    }

    #[test]
    fn zero_weights_give_uniform() {
        let m = ApdfModel::zeros(3, 2);
        let x = matrix(&[&[0.7, 0.2, 0.1], &[0.1, 0.1, 0.8]]);
        let out = apdf_forward(&m, &x).unwrap();
        assert!(out.probs.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn identity_weights_match_straight_line_arithmetic() {
        // n_d = 2, n_a = 1, every weight matrix the identity, m = [0.7, 0.3].
        let model = ApdfModel {
            n_d: 2,
            n_a: 1,
            w_q: Matrix::identity(2),
            w_k: Matrix::identity(2),
            w_v: Matrix::identity(2),
            w_o: Matrix::identity(2),
        };
        let out = apdf_forward(&model, &matrix(&[&[0.7, 0.3]])).unwrap();
        let r2 = 2f64.sqrt();
        let (s00, s01, s10, s11) = (0.49 / r2, 0.21 / r2, 0.21 / r2, 0.09 / r2);
        let a00 = s00.exp() / (s00.exp() + s01.exp());
        let a01 = 1.0 - a00;
        let a10 = s10.exp() / (s10.exp() + s11.exp());
        let a11 = 1.0 - a10;
        let c0 = a00 * 0.7 + a01 * 0.3;
        let c1 = a10 * 0.7 + a11 * 0.3;
        let p0 = c0.exp() / (c0.exp() + c1.exp());
        assert!((out.probs[0] - p0).abs() < 1e-15);
        assert!((out.probs[1] - (1.0 - p0)).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_gradient_on_logits() {
        let m = ApdfModel::zeros(2, 1);
        let x = matrix(&[&[0.6, 0.4]]);
        let (loss, g) = apdf_gradients(&m, &x, 1).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-15);
        // dz = [0.5, -0.5]; c = 0 at zero weights, so dW_o = dz ⊗ c = 0, and every
        // upstream gradient passes through W_o = 0.
        assert!(g.w_o.data.iter().all(|x| *x == 0.0));
        assert!(g.w_q.data.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn shape_and_target_errors() {
        let m = ApdfModel::zeros(2, 2);
        let x = matrix(&[&[0.5, 0.5]]);
        assert!(matches!(apdf_forward(&m, &x), Err(FusionError::Shape { .. })));
        let x2 = matrix(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert!(matches!(apdf_gradients(&m, &x2, 2), Err(FusionError::Target { .. })));
    }

    #[test]
    fn zero_epochs_is_identity() {
        let m = apdf_init(2, 2, 1, 1.0);
        let x = matrix(&[&[0.5, 0.5], &[0.9, 0.1]]);
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let (out, log) = apdf_train(&m, &[(x, 0)], &cfg).unwrap();
        assert_eq!(out, m);
        assert!(log.losses.is_empty());
    }

    #[test]
    fn divergence_is_reported() {
        let mut m = apdf_init(2, 1, 1, 1.0);
        m.w_o.data[0] = f64::NAN;
        let x = matrix(&[&[0.5, 0.5]]);
        let err = apdf_train(&m, &[(x, 0)], &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, FusionError::Diverged { epoch: 0, .. }));
    }
}
