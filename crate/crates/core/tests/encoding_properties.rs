//! PCA scaler and feature map.

use ndarray::{Array2, Axis};
use proptest::prelude::*;
use qktsne_core::encoding::{feature_map_circuit, ANGLE_RANGE};
use qktsne_core::simulator::{fidelity, run_circuit};
use qktsne_core::{rng, Dataset, ExecCounter, PcaScaler};
use rand::Rng;

fn correlated(n: usize, d: usize, seed: u64) -> Dataset {
    let mut r = rng::seeded(seed);
    let latent = Array2::from_shape_simple_fn((n, 3), || r.random_range(-1.0..1.0));
    let mix = Array2::from_shape_simple_fn((3, d), || r.random_range(-2.0..2.0));
    let noise = Array2::from_shape_simple_fn((n, d), || r.random_range(-0.05..0.05));
    Dataset::new(latent.dot(&mix) + noise, None).unwrap()
}

fn reconstruction_error(data: &Dataset, k: usize) -> f64 {
    let s = PcaScaler::fit(data, k).unwrap();
    let back = s.back_project(s.project(data.features()).unwrap().view());
    (&back - &data.features()).mapv(|v| v * v).sum()
}

#[test]
fn reconstruction_improves_with_more_components() {
    let data = correlated(80, 16, 3);
    let errs: Vec<f64> = [4, 8, 12].iter().map(|&k| reconstruction_error(&data, k)).collect();
    assert!(errs[0] >= errs[1] - 1e-9 && errs[1] >= errs[2] - 1e-9, "{errs:?}");
}

#[test]
fn components_diagonalize_the_sample_covariance() {
    let data = correlated(60, 8, 9);
    let s = PcaScaler::fit(&data, 5).unwrap();
    let x = data.features().to_owned() - &data.features().mean_axis(Axis(0)).unwrap();
    let cov = x.t().dot(&x) / (x.nrows() as f64 - 1.0);
    let w = s.components();
    let proj = w.t().dot(&cov).dot(&w);
    for i in 0..5 {
        for j in 0..5 {
            let expected = if i == j { s.eigenvalues()[i] } else { 0.0 };
            assert!((proj[[i, j]] - expected).abs() < 1e-9 * (1.0 + s.eigenvalues()[0]));
        }
    }
    let gram = w.t().dot(&w);
    for i in 0..5 {
        for j in 0..5 {
            assert!((gram[[i, j]] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
        }
    }
    assert!(s.eigenvalues().windows(2).all(|p| p[0] >= p[1]));
}

#[test]
fn training_angles_fill_the_range() {
    let data = correlated(50, 10, 1);
    let s = PcaScaler::fit(&data, 4).unwrap();
    let a = s.transform(&data).unwrap();
    for col in a.columns() {
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo.abs() < 1e-12 && (hi - ANGLE_RANGE).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn encoding_is_continuous(seed in 0u64..10_000, coord in 0usize..12) {
        let mut r = rng::seeded(seed);
        let x: Vec<f64> = (0..12).map(|_| r.random_range(0.0..ANGLE_RANGE)).collect();
        let mut y = x.clone();
        y[coord] += 1e-6;
        let counter = ExecCounter::new();
        let a = run_circuit(&feature_map_circuit(&x).unwrap(), &counter).unwrap();
        let b = run_circuit(&feature_map_circuit(&y).unwrap(), &counter).unwrap();
        prop_assert!(1.0 - fidelity(&a, &b, &counter).unwrap() < 1e-9);
    }

    #[test]
    fn unseen_points_are_clamped(seed in 0u64..10_000) {
        let data = correlated(30, 6, seed);
        let s = PcaScaler::fit(&data, 3).unwrap();
        let far = Dataset::new(data.features().to_owned() * 50.0, None).unwrap();
        let a = s.transform(&far).unwrap();
        prop_assert!(a.iter().all(|&v| (0.0..=ANGLE_RANGE).contains(&v)));
    }
}
