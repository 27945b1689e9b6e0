//! Paired t-test against an independent Student-t implementation.

use amsc_core::eval::{paired_t_test, two_sided_p};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

fn reference_p(t: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).unwrap();
    2.0 * (1.0 - dist.cdf(t.abs()))
}

#[test]
fn p_values_match_statrs() {
    for df in [1.0, 2.0, 3.0, 5.0, 10.0, 29.0, 59.0, 100.0, 500.0] {
        for t in [0.0, 0.1, 0.5, 1.0, 1.96, 2.5, 3.0, 5.0] {
            let got = two_sided_p(t, df);
            let want = reference_p(t, df);
            assert!((got - want).abs() < 1e-8, "t={t} df={df}: {got} vs {want}");
        }
    }
}

#[test]
fn random_samples_match_statrs() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..200 {
        let n = rng.gen_range(3..80);
        let shift = rng.gen_range(-0.3..0.3);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let b: Vec<f64> = a.iter().map(|x| x + shift + rng.gen_range(-0.5..0.5)).collect();
        let r = paired_t_test(&a, &b).unwrap();

        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let mean = d.iter().sum::<f64>() / n as f64;
        let sd = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let t = mean / (sd / (n as f64).sqrt());
        assert!((r.t - t).abs() < 1e-9 * t.abs().max(1.0));
        assert_eq!(r.df, n - 1);
        assert!((r.p - reference_p(t, (n - 1) as f64)).abs() < 1e-8);
    }
}

#[test]
fn swapping_arguments_negates_t() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..100 {
        let n = rng.gen_range(2..40);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0..2) as f64).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0..2) as f64).collect();
        let ab = paired_t_test(&a, &b).unwrap();
        let ba = paired_t_test(&b, &a).unwrap();
        assert_eq!(ab.t, -ba.t);
        assert_eq!(ab.p, ba.p);
    }
}

#[test]
fn identical_samples_give_no_difference() {
    let a = [1.0, 0.0, 1.0, 1.0, 0.0];
    let r = paired_t_test(&a, &a).unwrap();
    assert_eq!((r.t, r.p), (0.0, 1.0));
}
