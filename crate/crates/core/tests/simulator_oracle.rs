//! Statevector simulator checked against dense matrix products.

#![allow(clippy::needless_range_loop)]

use num_complex::Complex64;
use proptest::prelude::*;
use qktsne_core::simulator::{fidelity, run_circuit};
use qktsne_core::{Circuit, ExecCounter, Gate, StateVector};

type Mat = Vec<Vec<Complex64>>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn single(gate: &Gate) -> [[Complex64; 2]; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match *gate {
        Gate::Rx { angle, .. } => {
            let (s, co) = (angle / 2.0).sin_cos();
            [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
        }
        Gate::Ry { angle, .. } => {
            let (s, co) = (angle / 2.0).sin_cos();
            [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
        }
        Gate::Rz { angle, .. } => [
            [Complex64::from_polar(1.0, -angle / 2.0), c(0.0, 0.0)],
            [c(0.0, 0.0), Complex64::from_polar(1.0, angle / 2.0)],
        ],
        Gate::H { .. } => [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]],
        _ => unreachable!(),
    }
}

/// Full 2^n x 2^n unitary, built column by column from basis states.
fn dense(gate: &Gate, n: usize) -> Mat {
    let dim = 1 << n;
    let mut m = vec![vec![c(0.0, 0.0); dim]; dim];
    for col in 0..dim {
        match *gate {
            Gate::Cz { control, target } => {
                let sign = if (col >> control) & 1 == 1 && (col >> target) & 1 == 1 { -1.0 } else { 1.0 };
                m[col][col] = c(sign, 0.0);
            }
            Gate::Cnot { control, target } => {
                let row = if (col >> control) & 1 == 1 { col ^ (1 << target) } else { col };
                m[row][col] = c(1.0, 0.0);
            }
            _ => {
                let t = gate.target();
                let u = single(gate);
                let b = (col >> t) & 1;
                for out in 0..2 {
                    let row = (col & !(1 << t)) | (out << t);
                    m[row][col] += u[out][b];
                }
            }
        }
    }
    m
}

fn matvec(m: &Mat, v: &[Complex64]) -> Vec<Complex64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn gate_strategy(n: usize) -> impl Strategy<Value = Gate> {
    let angle = -7.0..7.0f64;
    prop_oneof![
        (0..n, angle.clone()).prop_map(|(target, angle)| Gate::Rx { target, angle }),
        (0..n, angle.clone()).prop_map(|(target, angle)| Gate::Ry { target, angle }),
        (0..n, angle).prop_map(|(target, angle)| Gate::Rz { target, angle }),
        (0..n).prop_map(|target| Gate::H { target }),
        (0..n, 1..n).prop_map(move |(control, off)| Gate::Cz { control, target: (control + off) % n }),
        (0..n, 1..n).prop_map(move |(control, off)| Gate::Cnot { control, target: (control + off) % n }),
    ]
}

fn circuit_strategy() -> impl Strategy<Value = (usize, Vec<Gate>)> {
    (2usize..=4).prop_flat_map(|n| (Just(n), prop::collection::vec(gate_strategy(n), 0..24)))
}

fn build(n: usize, gates: &[Gate]) -> Circuit {
    let mut circuit = Circuit::new(n).unwrap();
    for g in gates {
        circuit.push(*g).unwrap();
    }
    circuit
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn matches_dense_oracle((n, gates) in circuit_strategy()) {
        let counter = ExecCounter::new();
        let state = run_circuit(&build(n, &gates), &counter).unwrap();
        let mut v = vec![c(0.0, 0.0); 1 << n];
        v[0] = c(1.0, 0.0);
        for g in &gates {
            v = matvec(&dense(g, n), &v);
        }
        for (a, b) in state.amplitudes().iter().zip(&v) {
            prop_assert!((a - b).norm() < 1e-12);
        }
        prop_assert_eq!(counter.state_preparations(), 1);
    }

    #[test]
    fn norm_is_preserved((n, gates) in circuit_strategy()) {
        let state = run_circuit(&build(n, &gates), &ExecCounter::new()).unwrap();
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_restores_state((n, gates) in circuit_strategy(), basis in 0usize..16) {
        let circuit = build(n, &gates);
        let start = StateVector::basis(n, basis % (1 << n)).unwrap();
        let mut s = start.clone();
        circuit.apply_to(&mut s).unwrap();
        circuit.inverse().apply_to(&mut s).unwrap();
        for (a, b) in s.amplitudes().iter().zip(start.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(
        (n, g1) in circuit_strategy(),
        g2 in prop::collection::vec(gate_strategy(2), 0..12),
    ) {
        let counter = ExecCounter::new();
        let a = run_circuit(&build(n, &g1), &counter).unwrap();
        let b = run_circuit(&build(n, &g2), &counter).unwrap();
        let ab = fidelity(&a, &b, &counter).unwrap();
        let ba = fidelity(&b, &a, &counter).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - ba).abs() < 1e-14);
        prop_assert!((fidelity(&a, &a, &counter).unwrap() - 1.0).abs() < 1e-12);
        prop_assert_eq!(counter.fidelity_evaluations(), 3);
    }
}

#[test]
fn fidelity_rejects_mismatched_registers() {
    let counter = ExecCounter::new();
    let a = StateVector::zero(2).unwrap();
    let b = StateVector::zero(3).unwrap();
    assert!(fidelity(&a, &b, &counter).is_err());
}
