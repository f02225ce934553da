//! t-SNE similarities, cost and gradients against direct formulas and
//! finite differences.

use approx::assert_abs_diff_eq;
use ndarray::{Array2, ArrayView2};
use proptest::prelude::*;
use qktsne_core::embedder::grad_cost_wrt_alpha;
use qktsne_core::kernels::squared_distances;
use qktsne_core::rng;
use qktsne_core::tsne::{build_p, build_q, calibrate_sigma, cost_and_grad_y, grad_cost_wrt_y, kl_cost, total};
use rand::Rng;

fn random_matrix(n: usize, d: usize, scale: f64, seed: u64) -> Array2<f64> {
    let mut r = rng::seeded(seed);
    Array2::from_shape_simple_fn((n, d), || r.random_range(-scale..scale))
}

/// Direct Student-t Q and KL cost.
fn naive_cost(p: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> f64 {
    let n = y.nrows();
    let mut w = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d: f64 = (0..y.ncols()).map(|k| (y[[i, k]] - y[[j, k]]).powi(2)).sum();
                w[[i, j]] = 1.0 / (1.0 + d);
            }
        }
    }
    let z = w.sum();
    let mut c = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j && p[[i, j]] > 0.0 {
                let q = (w[[i, j]] / z).max(1e-12);
                c += p[[i, j]] * (p[[i, j]].max(1e-12) / q).ln();
            }
        }
    }
    c
}

fn p_for(x: ArrayView2<'_, f64>, perplexity: f64) -> Array2<f64> {
    build_p(squared_distances(x).view(), perplexity).unwrap().matrix().to_owned()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

#[test]
fn conditional_rows_match_direct_gaussian() {
    let x = random_matrix(12, 3, 2.0, 5);
    let d = squared_distances(x.view());
    let sim = build_p(d.view(), 4.0).unwrap();
    let n = x.nrows();
    let mut cond = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let s = sim.sigmas()[i];
        let z: f64 = (0..n).filter(|&j| j != i).map(|j| (-d[[i, j]] / (2.0 * s * s)).exp()).sum();
        for j in (0..n).filter(|&j| j != i) {
            cond[[i, j]] = (-d[[i, j]] / (2.0 * s * s)).exp() / z;
        }
        let h: f64 = -(0..n).filter(|&j| j != i).map(|j| cond[[i, j]] * cond[[i, j]].log2()).sum::<f64>();
        assert!((h - 4f64.log2()).abs() < 1e-5, "row {i} entropy {h}");
    }
    for i in 0..n {
        for j in 0..n {
            let expected = (cond[[i, j]] + cond[[j, i]]) / (2.0 * n as f64);
            assert_abs_diff_eq!(sim.matrix()[[i, j]], expected, epsilon = 1e-12);
        }
    }
}

#[test]
fn gradient_wrt_y_matches_finite_differences() {
    for seed in 0..20u64 {
        let n = 5 + (seed as usize % 6);
        let x = random_matrix(n, 4, 1.0, 100 + seed);
        let p = p_for(x.view(), (n as f64 - 1.0) / 2.0);
        let y = random_matrix(n, 2, 1.0, 200 + seed);
        let g = grad_cost_wrt_y(p.view(), y.view()).unwrap();
        let h = 1e-5;
        let mut worst = 0.0f64;
        for i in 0..n {
            for k in 0..2 {
                let mut yp = y.clone();
                yp[[i, k]] += h;
                let mut ym = y.clone();
                ym[[i, k]] -= h;
                let fd = (naive_cost(p.view(), yp.view()) - naive_cost(p.view(), ym.view())) / (2.0 * h);
                worst = worst.max(rel_err(g[[i, k]], fd));
            }
        }
        assert!(worst < 1e-5, "seed {seed}: relative error {worst}");
    }
}

#[test]
fn gradient_wrt_alpha_matches_finite_differences() {
    for seed in 0..20u64 {
        let n = 5 + (seed as usize % 5);
        let x = random_matrix(n, 3, 1.0, 300 + seed);
        let d = squared_distances(x.view());
        let gram = d.mapv(|v| (-v / 2.0).exp());
        let p = p_for(x.view(), 2.0);
        let alpha = random_matrix(n, 2, 1.0, 400 + seed);
        let g = grad_cost_wrt_alpha(p.view(), alpha.view(), gram.view()).unwrap();
        let cost = |a: &Array2<f64>| naive_cost(p.view(), gram.dot(a).view());
        let h = 1e-5;
        let mut worst = 0.0f64;
        for l in 0..n {
            for k in 0..2 {
                let mut ap = alpha.clone();
                ap[[l, k]] += h;
                let mut am = alpha.clone();
                am[[l, k]] -= h;
                let fd = (cost(&ap) - cost(&am)) / (2.0 * h);
                worst = worst.max(rel_err(g[[l, k]], fd));
            }
        }
        assert!(worst < 1e-5, "seed {seed}: relative error {worst}");
    }
}

#[test]
fn cost_matches_direct_formula() {
    let x = random_matrix(9, 3, 1.0, 1);
    let p = p_for(x.view(), 3.0);
    let y = random_matrix(9, 2, 3.0, 2);
    let (c, _) = cost_and_grad_y(p.view(), y.view()).unwrap();
    assert!((c - naive_cost(p.view(), y.view())).abs() < 1e-12);
}

#[test]
fn kl_is_zero_when_p_equals_q() {
    let y = random_matrix(10, 2, 1.0, 3);
    let q = build_q(y.view()).unwrap();
    assert_abs_diff_eq!(kl_cost(q.q.view(), q.q.view()), 0.0, epsilon = 1e-15);
}

#[test]
fn sigma_calibration_reports_convergence() {
    let d = [0.0, 1.0, 4.0, 9.0, 16.0, 25.0];
    let cal = calibrate_sigma(&d[1..], 3.0).unwrap();
    assert!(cal.converged);
    assert!((cal.perplexity.log2() - 3f64.log2()).abs() < 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn similarities_are_distributions(seed in 0u64..10_000, n in 4usize..14) {
        let x = random_matrix(n, 3, 1.0, seed);
        let p = p_for(x.view(), ((n - 1) as f64) / 3.0);
        let y = random_matrix(n, 2, 5.0, seed + 1);
        let q = build_q(y.view()).unwrap();
        prop_assert!((total(p.view()) - 1.0).abs() < 1e-9);
        prop_assert!((total(q.q.view()) - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().chain(q.q.iter()).all(|&v| v >= 0.0));
        for i in 0..n {
            prop_assert_eq!(p[[i, i]], 0.0);
            for j in 0..n {
                prop_assert!((p[[i, j]] - p[[j, i]]).abs() < 1e-15);
            }
        }
        prop_assert!(kl_cost(p.view(), q.q.view()) >= 0.0);
    }

    #[test]
    fn cost_is_invariant_under_rigid_motions(
        seed in 0u64..10_000,
        angle in 0.0..std::f64::consts::TAU,
        shift in (-50.0..50.0f64, -50.0..50.0f64),
    ) {
        let n = 8;
        let p = p_for(random_matrix(n, 3, 1.0, seed).view(), 3.0);
        let y = random_matrix(n, 2, 2.0, seed + 7);
        let (s, c) = angle.sin_cos();
        let moved = Array2::from_shape_fn((n, 2), |(i, k)| {
            let (a, b) = (y[[i, 0]], y[[i, 1]]);
            if k == 0 { c * a - s * b + shift.0 } else { s * a + c * b + shift.1 }
        });
        let (c0, _) = cost_and_grad_y(p.view(), y.view()).unwrap();
        let (c1, _) = cost_and_grad_y(p.view(), moved.view()).unwrap();
        prop_assert!((c0 - c1).abs() < 1e-9);
    }
}
