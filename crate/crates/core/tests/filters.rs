//! Filters against independent reference implementations.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rffkaf::datagen::{Dataset, ModelConfig};
use rffkaf::filters::{AdaptiveFilter, Qklms, RffKlms, RffRls};
use rffkaf::kernel::{GaussianKernel, RandomFeatureMap};
use rffkaf::rng::{self, StreamRole};

fn example1_data(seed: u64, n: usize) -> Dataset {
    let cfg = ModelConfig::KernelExpansion {
        input_dim: 5,
        n_centers: 10,
        center_std: 1.0,
        coeff_std: 5.0,
        centers: None,
        coeffs: None,
        sigma: 5.0,
        sigma_x: 1.0,
        sigma_eta: 0.1,
    };
    Dataset::collect(&cfg.instantiate(seed, n).unwrap()).unwrap()
}

fn example2_data(seed: u64, n: usize) -> Dataset {
    let cfg = ModelConfig::Quadratic {
        input_dim: 5,
        w0: None,
        w1: None,
        sigma_eta: 0.05,
    };
    Dataset::collect(&cfg.instantiate(seed, n).unwrap()).unwrap()
}

/// Textbook LMS on explicit regressors.
fn plain_lms(zs: &[Vec<f64>], ys: &[f64], mu: f64) -> Vec<f64> {
    let mut w = vec![0.0; zs[0].len()];
    let mut errors = Vec::new();
    for (z, y) in zs.iter().zip(ys) {
        let mut yhat = 0.0;
        for i in 0..w.len() {
            yhat += w[i] * z[i];
        }
        let e = y - yhat;
        for i in 0..w.len() {
            w[i] += mu * e * z[i];
        }
        errors.push(e);
    }
    errors
}

#[test]
fn rffklms_is_lms_on_transformed_inputs() {
    let data = example1_data(3, 5000);
    let map = Arc::new(RandomFeatureMap::sample(5, 100, 5.0, 17).unwrap());
    let zs: Vec<Vec<f64>> = (0..data.len()).map(|n| map.transform(data.x(n)).unwrap()).collect();
    let reference = plain_lms(&zs, &data.ys, 1.0);
    let mut f = RffKlms::new(map, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for n in 0..data.len() {
        let e = f.step(data.x(n), data.ys[n]).unwrap().error;
        worst = worst.max((e - reference[n]).abs());
    }
    assert!(worst < 1e-12, "max deviation {worst}");
}

#[test]
fn frozen_step_size_keeps_zero_solution() {
    let data = example1_data(1, 200);
    let mut f = RffKlms::new(Arc::new(RandomFeatureMap::sample(5, 30, 5.0, 1).unwrap()), 0.0).unwrap();
    for n in 0..data.len() {
        assert_eq!(f.step(data.x(n), data.ys[n]).unwrap().prediction, 0.0);
    }
    assert!(f.theta().iter().all(|t| *t == 0.0));
}

/// Growing-sum KLMS: every sample becomes a center with weight `μ e_n`.
fn naive_klms(data: &Dataset, sigma: f64, mu: f64) -> Vec<f64> {
    let mut centers: Vec<Vec<f64>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut predictions = Vec::new();
    for n in 0..data.len() {
        let x = data.x(n);
        let mut yhat = 0.0;
        for (c, a) in centers.iter().zip(&weights) {
            let d2: f64 = c.iter().zip(x).map(|(c, x)| (c - x).powi(2)).sum();
            yhat += a * (-d2 / (2.0 * sigma * sigma)).exp();
        }
        predictions.push(yhat);
        centers.push(x.to_vec());
        weights.push(mu * (data.ys[n] - yhat));
    }
    predictions
}

#[test]
fn qklms_without_quantization_is_klms() {
    let data = example2_data(4, 500);
    let reference = naive_klms(&data, 5.0, 0.7);
    let mut f = Qklms::new(5, GaussianKernel::new(5.0).unwrap(), 0.7, 0.0).unwrap();
    for n in 0..data.len() {
        let s = f.step_qklms(data.x(n), data.ys[n]).unwrap();
        assert!((s.prediction - reference[n]).abs() < 1e-12);
        assert_eq!(s.dict_size, n + 1);
    }
}

#[test]
fn qklms_duplicate_point_updates_in_place() {
    let mut f = Qklms::new(2, GaussianKernel::new(1.0).unwrap(), 0.5, 0.1).unwrap();
    f.step_qklms(&[1.0, 2.0], 3.0).unwrap();
    f.step_qklms(&[-1.0, 0.0], 1.0).unwrap();
    let before = f.coeffs().to_vec();
    let s = f.step_qklms(&[1.0, 2.0], 0.5).unwrap();
    assert_eq!(s.dict_size, 2);
    assert_eq!(f.coeffs()[0], before[0] + 0.5 * s.error);
    assert_eq!(f.coeffs()[1], before[1]);
}

/// `(λI + Σ z zᵀ) θ = Σ y z` solved directly.
#[test]
fn rls_without_forgetting_is_regularized_least_squares() {
    let data = example2_data(6, 200);
    let map = Arc::new(RandomFeatureMap::sample(5, 20, 5.0, 2).unwrap());
    let lambda = 1e-2;
    let mut f = RffRls::new(map.clone(), lambda, 1.0).unwrap();
    let mut a = DMatrix::<f64>::identity(20, 20) * lambda;
    let mut b = DVector::<f64>::zeros(20);
    for n in 0..data.len() {
        f.step(data.x(n), data.ys[n]).unwrap();
        let z = DVector::from_vec(map.transform(data.x(n)).unwrap());
        a += &z * z.transpose();
        b += &z * data.ys[n];
    }
    let exact = a.lu().solve(&b).unwrap();
    let theta = DVector::from_column_slice(f.theta());
    let rel = (&theta - &exact).norm() / exact.norm();
    assert!(rel < 1e-6, "relative error {rel}");
}

#[test]
fn rls_stays_finite_and_symmetric_on_long_runs() {
    let data = example2_data(8, 15000);
    let map = Arc::new(RandomFeatureMap::sample(5, 300, 5.0, 8).unwrap());
    let mut f = RffRls::new(map, 1e-4, 0.9995).unwrap();
    for n in 0..data.len() {
        let s = f.step(data.x(n), data.ys[n]).unwrap();
        assert!(s.error.is_finite());
        if n % 1000 == 999 {
            assert!(f.asymmetry() <= 1e-9);
        }
    }
    assert!(f.theta().iter().all(|t| t.is_finite()));
    assert!(f.p_rows().flatten().all(|p| p.is_finite()));
}

/// RFF-KLMS tracks exact KLMS more closely as the number of features grows.
#[test]
fn rff_predictions_approach_exact_klms() {
    let n = 2000;
    let dims = [100, 500, 1000, 5000];
    let mut gaps = [0.0; 4];
    for seed in 0..3 {
        let data = example1_data(100 + seed, n);
        let exact = naive_klms(&data, 5.0, 1.0);
        for (g, &d) in gaps.iter_mut().zip(&dims) {
            let map = Arc::new(RandomFeatureMap::sample(5, d, 5.0, rng::child_seed(seed, d as u64)).unwrap());
            let mut f = RffKlms::new(map, 1.0).unwrap();
            for k in 0..n {
                let p = f.step(data.x(k), data.ys[k]).unwrap().prediction;
                *g += (p - exact[k]).abs() / (3 * n) as f64;
            }
        }
    }
    for w in gaps.windows(2) {
        assert!(w[1] < w[0], "{gaps:?}");
    }
}

/// Data drawn from the feature-space model `y = θ_oᵀ z(x) + η`, where `θ_o`
/// is exactly optimal; the run-averaged weights should settle on it.
#[test]
fn mean_weights_converge_to_optimum() {
    let map = Arc::new(RandomFeatureMap::sample(2, 16, 0.5, 5).unwrap());
    let centers = [vec![0.5, -0.5], vec![-1.0, 0.3], vec![0.2, 1.1]];
    let coeffs = [1.0, -2.0, 0.7];
    let theta_opt = rffkaf::analysis::optimal_theta(&map, &centers, &coeffs).unwrap();
    let model = rffkaf::analysis::rzz_closed_form(&map, 1.0).unwrap();
    let bound = rffkaf::analysis::step_size_bound(&model).unwrap();
    // ‖z‖² ≤ 2, so μ ≤ 0.5 also keeps every realization stable.
    let mu = (0.5 * bound.mu_max_variance).min(0.5);
    assert!(mu < bound.mu_max);

    let runs = 500;
    let steps = 5000;
    let mut sum = vec![0.0; 16];
    let mut sum_sq = vec![0.0; 16];
    for run in 0..runs {
        let seed = rng::run_seed(77, run);
        let mut input = rng::stream(seed, StreamRole::Input);
        let mut noise = rng::stream(seed, StreamRole::Noise);
        let mut f = RffKlms::new(map.clone(), mu).unwrap();
        for _ in 0..steps {
            let x = [rng::standard_normal(&mut input), rng::standard_normal(&mut input)];
            let z = map.transform(&x).unwrap();
            let y: f64 = theta_opt.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>()
                + 0.1 * rng::standard_normal(&mut noise);
            f.step(&x, y).unwrap();
        }
        for (i, t) in f.theta().iter().enumerate() {
            sum[i] += t;
            sum_sq[i] += t * t;
        }
    }
    let r = runs as f64;
    for i in 0..16 {
        let mean = sum[i] / r;
        let var = (sum_sq[i] / r - mean * mean) * r / (r - 1.0);
        let se = (var / r).sqrt();
        assert!(
            (mean - theta_opt[i]).abs() <= 3.0 * se,
            "coordinate {i}: mean {mean}, optimum {}, se {se}",
            theta_opt[i]
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rffklms_weights_are_sum_of_scaled_features(seed in 0u64..500, mu in 0.01f64..1.5, n in 1usize..60) {
        let data = example1_data(seed, n);
        let map = Arc::new(RandomFeatureMap::sample(5, 12, 5.0, seed).unwrap());
        let mut f = RffKlms::new(map.clone(), mu).unwrap();
        let mut expected = vec![0.0; 12];
        for k in 0..n {
            let e = f.step(data.x(k), data.ys[k]).unwrap().error;
            let z = map.transform(data.x(k)).unwrap();
            for (t, z) in expected.iter_mut().zip(&z) {
                *t += mu * e * z;
            }
        }
        for (a, b) in f.theta().iter().zip(&expected) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn predict_agrees_with_step(seed in 0u64..500, n in 1usize..40) {
        let data = example2_data(seed, n + 1);
        let map = Arc::new(RandomFeatureMap::sample(5, 10, 5.0, seed).unwrap());
        let mut a = RffKlms::new(map.clone(), 0.5).unwrap();
        let mut b = Qklms::new(5, GaussianKernel::new(5.0).unwrap(), 0.5, 1.0).unwrap();
        let mut c = RffRls::new(map, 1e-2, 0.99).unwrap();
        for k in 0..=n {
            let (x, y) = (data.x(k), data.ys[k]);
            prop_assert_eq!(a.predict(x).unwrap(), a.step(x, y).unwrap().prediction);
            prop_assert_eq!(b.predict(x).unwrap(), b.step(x, y).unwrap().prediction);
            prop_assert_eq!(c.predict(x).unwrap(), c.step(x, y).unwrap().prediction);
        }
    }

    #[test]
    fn rff_filters_have_fixed_size_state(seed in 0u64..100) {
        let data = example2_data(seed, 300);
        let map = Arc::new(RandomFeatureMap::sample(5, 25, 5.0, seed).unwrap());
        let mut a = RffKlms::new(map.clone(), 0.5).unwrap();
        let mut c = RffRls::new(map, 1e-3, 0.999).unwrap();
        for k in 0..data.len() {
            a.step(data.x(k), data.ys[k]).unwrap();
            c.step(data.x(k), data.ys[k]).unwrap();
            prop_assert_eq!(a.theta().len(), 25);
            prop_assert_eq!(c.theta().len(), 25);
            prop_assert_eq!(c.p_rows().count(), 25);
        }
    }
}
