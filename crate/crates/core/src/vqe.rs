//! VQE on the transverse-field Ising chain.
//!
//! The hardware-efficient ansatz starts with a layer of `RY`, `RZ` rotations on
//! every qubit and then repeats `depth` blocks of a linear CNOT ladder
//! (`i → i+1`) followed by another `RY`, `RZ` layer, giving `2n(d+1)`
//! parameters. Parameters are laid out block by block, qubit by qubit, `RY`
//! before `RZ`.
//!
//! Gradients use the parameter-shift rule, which is exact for `exp(−iθP/2)`
//! rotations; the optimizer is a dense BFGS with Armijo backtracking.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::simulator::{
    expectation_pauli, run_circuit, Circuit, ExecCounter, Gate, Pauli, PauliTerm, StateVector,
};

/// Largest register [`exact_diagonalize`] accepts.
pub const MAX_EXACT_QUBITS: usize = 12;

/// A sum of Pauli terms on a fixed register.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl Hamiltonian {
    pub fn new(n_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        if let Some(q) = terms.iter().filter_map(PauliTerm::max_qubit).max() {
            if q >= n_qubits {
                return Err(Error::InvalidArgument(format!(
                    "term acts on qubit {q} of a {n_qubits}-qubit register"
                )));
            }
        }
        Ok(Self { n_qubits, terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                actual: state.n_qubits(),
                context: "state vs Hamiltonian qubit count",
            });
        }
        self.terms
            .iter()
            .map(|t| Ok(t.coefficient() * expectation_pauli(state, t)?))
            .sum()
    }

    /// Dense matrix in the computational basis. Only real Hamiltonians (an even
    /// number of `Y` factors per term) are supported.
    pub fn to_dense_real(&self) -> Result<DMatrix<f64>> {
        let dim = 1usize << self.n_qubits;
        let mut h = DMatrix::zeros(dim, dim);
        for term in &self.terms {
            for col in 0..dim {
                let (row, phase) = term.apply_to_basis(col);
                if phase.im != 0.0 {
                    return Err(Error::InvalidArgument(
                        "Hamiltonian has imaginary matrix elements".into(),
                    ));
                }
                h[(row, col)] += term.coefficient() * phase.re;
            }
        }
        Ok(h)
    }
}

/// `H = J Σ_{i<n−1} Z_i Z_{i+1} + h Σ_i X_i` on an open chain.
pub fn tfim_hamiltonian(n: usize, j: f64, h: f64) -> Result<Hamiltonian> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("TFIM needs n >= 2, got {n}")));
    }
    let mut terms = Vec::with_capacity(2 * n - 1);
    for i in 0..n - 1 {
        terms.push(PauliTerm::new(j, vec![(i, Pauli::Z), (i + 1, Pauli::Z)])?);
    }
    for i in 0..n {
        terms.push(PauliTerm::new(h, vec![(i, Pauli::X)])?);
    }
    Hamiltonian::new(n, terms)
}

/// Hardware-efficient ansatz layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ansatz {
    pub n_qubits: usize,
    pub depth: usize,
}

impl Ansatz {
    pub fn new(n_qubits: usize, depth: usize) -> Result<Self> {
        if n_qubits < 2 {
            return Err(Error::InvalidArgument("ansatz needs at least 2 qubits".into()));
        }
        Ok(Self { n_qubits, depth })
    }

    pub fn parameter_count(&self) -> usize {
        2 * self.n_qubits * (self.depth + 1)
    }

    /// Seeded initial angles drawn from `Uniform(0, 2π)`.
    pub fn random_parameters(&self, seed: u64) -> Vec<f64> {
        let mut rng = crate::rng::derive(seed, 4);
        (0..self.parameter_count())
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect()
    }

    pub fn gate_count(&self) -> usize {
        self.parameter_count() + self.depth * (self.n_qubits - 1)
    }

    pub fn circuit(&self, theta: &[f64]) -> Result<Circuit> {
        if theta.len() != self.parameter_count() {
            return Err(Error::DimensionMismatch {
                expected: self.parameter_count(),
                actual: theta.len(),
                context: "ansatz parameter count",
            });
        }
        let n = self.n_qubits;
        let mut circuit = Circuit::new(n)?;
        let mut params = theta.chunks_exact(2);
        for block in 0..=self.depth {
            if block > 0 {
                for i in 0..n - 1 {
                    circuit.push(Gate::Cnot {
                        control: i,
                        target: i + 1,
                    })?;
                }
            }
            for q in 0..n {
                let pair = params.next().expect("length checked above");
                circuit.push(Gate::Ry {
                    target: q,
                    angle: pair[0],
                })?;
                circuit.push(Gate::Rz {
                    target: q,
                    angle: pair[1],
                })?;
            }
        }
        Ok(circuit)
    }
}

pub fn build_ansatz_circuit(ansatz: &Ansatz, theta: &[f64]) -> Result<Circuit> {
    ansatz.circuit(theta)
}

/// `⟨ψ(θ)|H|ψ(θ)⟩`, one state preparation.
pub fn energy(
    theta: &[f64],
    hamiltonian: &Hamiltonian,
    ansatz: &Ansatz,
    counter: &ExecCounter,
) -> Result<f64> {
    let state = run_circuit(&ansatz.circuit(theta)?, counter)?;
    hamiltonian.expectation(&state)
}

/// Parameter-shift gradient `(E(θ + π/2 e_j) − E(θ − π/2 e_j)) / 2`.
pub fn energy_gradient(
    theta: &[f64],
    hamiltonian: &Hamiltonian,
    ansatz: &Ansatz,
    counter: &ExecCounter,
) -> Result<Vec<f64>> {
    if theta.len() != ansatz.parameter_count() {
        return Err(Error::DimensionMismatch {
            expected: ansatz.parameter_count(),
            actual: theta.len(),
            context: "ansatz parameter count",
        });
    }
    (0..theta.len())
        .into_par_iter()
        .map(|j| {
            let mut shifted = theta.to_vec();
            shifted[j] = theta[j] + FRAC_PI_2;
            let plus = energy(&shifted, hamiltonian, ansatz, counter)?;
            shifted[j] = theta[j] - FRAC_PI_2;
            let minus = energy(&shifted, hamiltonian, ansatz, counter)?;
            Ok((plus - minus) / 2.0)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BfgsOptions {
    /// Number of accepted steps.
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            grad_tol: 1e-8,
            c1: 1e-4,
            shrink: 0.5,
            max_backtracks: 60,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BfgsStatus {
    GradientConverged,
    MaxIterations,
    LineSearchFailed,
}

impl BfgsStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            BfgsStatus::GradientConverged => "gradient_converged",
            BfgsStatus::MaxIterations => "max_iterations",
            BfgsStatus::LineSearchFailed => "line_search_failed",
        }
    }
}

#[derive(Clone, Debug)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub status: BfgsStatus,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense BFGS minimizer.
///
/// `on_iterate(k, x, f)` is invoked for the starting point (`k = 0`) and after
/// every accepted step. A failed line search first resets the inverse-Hessian
/// estimate to the identity and retries; a second failure ends the run.
pub fn minimize_bfgs<F, G, C>(
    f: F,
    grad: G,
    x0: &[f64],
    options: &BfgsOptions,
    mut on_iterate: C,
) -> Result<BfgsResult>
where
    F: Fn(&[f64]) -> Result<f64>,
    G: Fn(&[f64]) -> Result<Vec<f64>>,
    C: FnMut(usize, &[f64], f64) -> Result<()>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x)?;
    let mut g = grad(&x)?;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("BFGS starting point".into()));
    }
    on_iterate(0, &x, fx)?;

    let identity = |n: usize| {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = 1.0;
        }
        h
    };
    let mut hinv = identity(n);
    let mut is_identity = true;
    let mut first_update = true;
    let mut iterations = 0;
    let mut status = BfgsStatus::MaxIterations;

    while iterations < options.max_iters {
        if dot(&g, &g).sqrt() < options.grad_tol {
            status = BfgsStatus::GradientConverged;
            break;
        }
        let mut direction: Vec<f64> = (0..n).map(|i| -dot(&hinv[i * n..(i + 1) * n], &g)).collect();
        let mut slope = dot(&g, &direction);
        if !(slope < 0.0) {
            hinv = identity(n);
            is_identity = true;
            direction = g.iter().map(|v| -v).collect();
            slope = dot(&g, &direction);
        }

        let mut accepted = None;
        loop {
            let mut step = 1.0;
            for _ in 0..options.max_backtracks {
                let trial: Vec<f64> = x.iter().zip(&direction).map(|(a, d)| a + step * d).collect();
                let ft = f(&trial)?;
                if ft.is_finite() && ft <= fx + options.c1 * step * slope {
                    accepted = Some((trial, ft, step));
                    break;
                }
                step *= options.shrink;
            }
            if accepted.is_some() || is_identity {
                break;
            }
            hinv = identity(n);
            is_identity = true;
            direction = g.iter().map(|v| -v).collect();
            slope = dot(&g, &direction);
        }
        let Some((x_new, f_new, step)) = accepted else {
            status = BfgsStatus::LineSearchFailed;
            break;
        };

        let g_new = grad(&x_new)?;
        if g_new.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("gradient at BFGS step {}", iterations + 1)));
        }
        let s: Vec<f64> = direction.iter().map(|d| step * d).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let yy = dot(&y, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * yy.sqrt() {
            if first_update {
                let scale = sy / yy;
                for i in 0..n {
                    for j in 0..n {
                        hinv[i * n + j] *= scale;
                    }
                }
                first_update = false;
            }
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| dot(&hinv[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            let a = (1.0 + rho * yhy) * rho;
            for i in 0..n {
                for j in 0..n {
                    hinv[i * n + j] += a * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
            is_identity = false;
        }

        x = x_new;
        fx = f_new;
        g = g_new;
        iterations += 1;
        on_iterate(iterations, &x, fx)?;
    }
    if status == BfgsStatus::MaxIterations && dot(&g, &g).sqrt() < options.grad_tol {
        status = BfgsStatus::GradientConverged;
    }
    Ok(BfgsResult {
        x,
        value: fx,
        iterations,
        status,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Iterate {
    pub iteration: usize,
    pub theta: Vec<f64>,
    pub energy: f64,
    pub state: StateVector,
}

/// The sequence of accepted VQE iterates, starting with the initial point.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub label: String,
    pub iterates: Vec<Iterate>,
    pub status: Option<BfgsStatus>,
}

impl Trajectory {
    pub fn final_state(&self) -> Option<&StateVector> {
        self.iterates.last().map(|it| &it.state)
    }

    pub fn energies(&self) -> Vec<f64> {
        self.iterates.iter().map(|it| it.energy).collect()
    }
}

/// Runs BFGS on the VQE energy from `theta0`, preparing and recording the
/// state at every accepted iterate.
pub fn run_vqe(
    label: impl Into<String>,
    hamiltonian: &Hamiltonian,
    ansatz: &Ansatz,
    theta0: &[f64],
    options: &BfgsOptions,
    counter: &ExecCounter,
) -> Result<Trajectory> {
    let mut iterates = Vec::new();
    let result = minimize_bfgs(
        |t| energy(t, hamiltonian, ansatz, counter),
        |t| energy_gradient(t, hamiltonian, ansatz, counter),
        theta0,
        options,
        |iteration, theta, energy| {
            let state = run_circuit(&ansatz.circuit(theta)?, counter)?;
            iterates.push(Iterate {
                iteration,
                theta: theta.to_vec(),
                energy,
                state,
            });
            Ok(())
        },
    )?;
    Ok(Trajectory {
        label: label.into(),
        iterates,
        status: Some(result.status),
    })
}

/// Full spectrum of a dense Hamiltonian.
#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<StateVector>,
}

/// Dense symmetric eigendecomposition for registers of at most 12 qubits.
/// Eigenvectors are normalized with their largest-magnitude entry positive.
pub fn exact_diagonalize(hamiltonian: &Hamiltonian) -> Result<Spectrum> {
    let n = hamiltonian.n_qubits();
    if n > MAX_EXACT_QUBITS {
        return Err(Error::InvalidArgument(format!(
            "exact diagonalization limited to {MAX_EXACT_QUBITS} qubits, got {n}"
        )));
    }
    let dense = hamiltonian.to_dense_real()?;
    let eig = SymmetricEigen::new(dense);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut eigenvalues = Vec::with_capacity(order.len());
    let mut eigenvectors = Vec::with_capacity(order.len());
    for k in order {
        eigenvalues.push(eig.eigenvalues[k]);
        let col = eig.eigenvectors.column(k);
        let pivot = col.iamax();
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        let v: Vec<f64> = col.iter().map(|x| sign * x).collect();
        eigenvectors.push(StateVector::from_real(&v)?);
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}
