//! Central finite differences against the analytic gradients.

mod common;

use amsc_core::fusion::{apdf_forward, apdf_gradients, apdf_init, ApdfModel, LinearFusion, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;
const TOL: f64 = 1e-4;
const INSTANCES: usize = 100;

/// Relative error of the whole gradient vector.
fn rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
    let na: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nn: f64 = numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
    diff / na.max(nn).max(1e-12)
}

fn apdf_loss(model: &ApdfModel, m: &amsc_core::fusion::DistributionMatrix, t: usize) -> f64 {
    -apdf_forward(model, m).unwrap().probs[t].ln()
}

fn weights_mut(model: &mut ApdfModel, which: usize) -> &mut Matrix {
    match which {
        0 => &mut model.w_q,
        1 => &mut model.w_k,
        2 => &mut model.w_v,
        _ => &mut model.w_o,
    }
}

#[test]
fn apdf_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for inst in 0..INSTANCES {
        let n_d = rng.gen_range(2..=5);
        let n_a = rng.gen_range(1..=5);
        let model = apdf_init(n_d, n_a, inst as u64, rng.gen_range(0.5..3.0));
        let m = common::matrix(&common::random_rows(&mut rng, n_a, n_d));
        let target = rng.gen_range(0..n_d);
        let (loss, grads) = apdf_gradients(&model, &m, target).unwrap();
        assert!((loss - apdf_loss(&model, &m, target)).abs() < 1e-12);

        let analytic: Vec<f64> = [&grads.w_q, &grads.w_k, &grads.w_v, &grads.w_o]
            .iter()
            .flat_map(|g| g.data.iter().copied())
            .collect();
        let mut numeric = Vec::with_capacity(analytic.len());
        for which in 0..4 {
            let len = weights_mut(&mut model.clone(), which).data.len();
            for i in 0..len {
                let mut plus = model.clone();
                weights_mut(&mut plus, which).data[i] += STEP;
                let mut minus = model.clone();
                weights_mut(&mut minus, which).data[i] -= STEP;
                numeric.push((apdf_loss(&plus, &m, target) - apdf_loss(&minus, &m, target)) / (2.0 * STEP));
            }
        }
        let err = rel_error(&analytic, &numeric);
        assert!(err < TOL, "instance {inst} (n_d={n_d}, n_a={n_a}): relative error {err:e}");
        worst = worst.max(err);
    }
    eprintln!("apdf worst relative error {worst:e}");
}

#[test]
fn linear_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for inst in 0..INSTANCES {
        let n_d = rng.gen_range(2..=5);
        let n_a = rng.gen_range(1..=5);
        let model = LinearFusion::init(n_d, n_a, inst as u64, rng.gen_range(0.5..3.0));
        let m = common::matrix(&common::random_rows(&mut rng, n_a, n_d));
        let target = rng.gen_range(0..n_d);
        let (_, grad) = model.gradient(&m, target).unwrap();
        let loss = |w: &LinearFusion| w.gradient(&m, target).unwrap().0;
        let numeric: Vec<f64> = (0..grad.data.len())
            .map(|i| {
                let mut plus = model.clone();
                plus.w.data[i] += STEP;
                let mut minus = model.clone();
                minus.w.data[i] -= STEP;
                (loss(&plus) - loss(&minus)) / (2.0 * STEP)
            })
            .collect();
        let err = rel_error(&grad.data, &numeric);
        assert!(err < TOL, "instance {inst}: relative error {err:e}");
    }
}
