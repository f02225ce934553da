//! Dense statevector simulation.
//!
//! Conventions used everywhere in this crate:
//!
//! * Qubit 0 is the least-significant bit of the amplitude index, so the basis
//!   state `|q_{n-1} … q_1 q_0⟩` lives at index `Σ q_k 2^k`.
//! * Rotations are `R_P(θ) = exp(−iθP/2)` for `P ∈ {X, Y, Z}`.
//! * States always start from `|0…0⟩`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 20;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A pure state of `n_qubits` qubits stored as `2^n` complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    /// The computational basis state with the given index.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes. The length must be a power of two and the vector
    /// must be normalized to within `1e-8`.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_qubit_count(n_qubits)?;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "amplitudes are not normalized (squared norm {norm})"
            )));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Real amplitudes, normalized on the way in.
    pub fn from_real(values: &[f64]) -> Result<Self> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize a zero vector".into()));
        }
        Self::from_amplitudes(values.iter().map(|v| Complex64::new(v / norm, 0.0)).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                actual: other.n_qubits,
                context: "qubit count of inner product operands",
            });
        }
        Ok(inner_unchecked(&self.amplitudes, &other.amplitudes))
    }

    /// Applies `gate` in place.
    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match *gate {
            Gate::Rx { target, angle } => {
                let (s, c) = (angle / 2.0).sin_cos();
                let m = [
                    [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
                    [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
                ];
                self.apply_single(target, m);
            }
            Gate::Ry { target, angle } => {
                let (s, c) = (angle / 2.0).sin_cos();
                let m = [
                    [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                    [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
                ];
                self.apply_single(target, m);
            }
            Gate::Rz { target, angle } => {
                let (s, c) = (angle / 2.0).sin_cos();
                let lo = Complex64::new(c, -s);
                let hi = Complex64::new(c, s);
                let mask = 1usize << target;
                for (i, a) in self.amplitudes.iter_mut().enumerate() {
                    *a *= if i & mask == 0 { lo } else { hi };
                }
            }
            Gate::H { target } => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                self.apply_single(target, [[h, h], [h, -h]]);
            }
            Gate::Cz { control, target } => {
                let mask = (1usize << control) | (1usize << target);
                for (i, a) in self.amplitudes.iter_mut().enumerate() {
                    if i & mask == mask {
                        *a = -*a;
                    }
                }
            }
            Gate::Cnot { control, target } => {
                let cmask = 1usize << control;
                let tmask = 1usize << target;
                for i in 0..self.amplitudes.len() {
                    if i & cmask != 0 && i & tmask == 0 {
                        self.amplitudes.swap(i, i | tmask);
                    }
                }
            }
        }
        Ok(())
    }

    fn apply_single(&mut self, target: usize, m: [[Complex64; 2]; 2]) {
        let mask = 1usize << target;
        let dim = self.amplitudes.len();
        let mut base = 0;
        while base < dim {
            for i0 in base..base + mask {
                let i1 = i0 | mask;
                let a0 = self.amplitudes[i0];
                let a1 = self.amplitudes[i1];
                self.amplitudes[i0] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i1] = m[1][0] * a0 + m[1][1] * a1;
            }
            base += mask << 1;
        }
    }
}

fn check_qubit_count(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::InvalidArgument(format!(
            "qubit count {n_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn inner_unchecked(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re, im)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    H,
    Cz,
    Cnot,
}

/// A gate from the fixed gate set. Rotation variants carry their angle in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    Rx { target: usize, angle: f64 },
    Ry { target: usize, angle: f64 },
    Rz { target: usize, angle: f64 },
    H { target: usize },
    Cz { control: usize, target: usize },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        match self {
            Gate::Rx { .. } => GateKind::Rx,
            Gate::Ry { .. } => GateKind::Ry,
            Gate::Rz { .. } => GateKind::Rz,
            Gate::H { .. } => GateKind::H,
            Gate::Cz { .. } => GateKind::Cz,
            Gate::Cnot { .. } => GateKind::Cnot,
        }
    }

    pub fn target(&self) -> usize {
        match *self {
            Gate::Rx { target, .. }
            | Gate::Ry { target, .. }
            | Gate::Rz { target, .. }
            | Gate::H { target }
            | Gate::Cz { target, .. }
            | Gate::Cnot { target, .. } => target,
        }
    }

    pub fn control(&self) -> Option<usize> {
        match *self {
            Gate::Cz { control, .. } | Gate::Cnot { control, .. } => Some(control),
            _ => None,
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rx { angle, .. } | Gate::Ry { angle, .. } | Gate::Rz { angle, .. } => Some(angle),
            _ => None,
        }
    }

    /// The inverse gate: negated angle for rotations, the gate itself otherwise.
    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Rx { target, angle } => Gate::Rx {
                target,
                angle: -angle,
            },
            Gate::Ry { target, angle } => Gate::Ry {
                target,
                angle: -angle,
            },
            Gate::Rz { target, angle } => Gate::Rz {
                target,
                angle: -angle,
            },
            g => g,
        }
    }

    /// Same gate with a different rotation angle. Non-rotations are returned unchanged.
    pub fn with_angle(&self, new_angle: f64) -> Gate {
        match *self {
            Gate::Rx { target, .. } => Gate::Rx {
                target,
                angle: new_angle,
            },
            Gate::Ry { target, .. } => Gate::Ry {
                target,
                angle: new_angle,
            },
            Gate::Rz { target, .. } => Gate::Rz {
                target,
                angle: new_angle,
            },
            g => g,
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let target = self.target();
        if target >= n_qubits {
            return Err(Error::InvalidGate(format!(
                "{self}: target {target} out of range for {n_qubits} qubits"
            )));
        }
        if let Some(control) = self.control() {
            if control >= n_qubits {
                return Err(Error::InvalidGate(format!(
                    "{self}: control {control} out of range for {n_qubits} qubits"
                )));
            }
            if control == target {
                return Err(Error::InvalidGate(format!(
                    "{self}: control and target coincide"
                )));
            }
        }
        if let Some(angle) = self.angle() {
            if !angle.is_finite() {
                return Err(Error::InvalidGate(format!("{self}: non-finite angle")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::Rx { target, angle } => write!(f, "RX({angle}) q{target}"),
            Gate::Ry { target, angle } => write!(f, "RY({angle}) q{target}"),
            Gate::Rz { target, angle } => write!(f, "RZ({angle}) q{target}"),
            Gate::H { target } => write!(f, "H q{target}"),
            Gate::Cz { control, target } => write!(f, "CZ q{control},q{target}"),
            Gate::Cnot { control, target } => write!(f, "CNOT q{control},q{target}"),
        }
    }
}

/// Returns a new state with `gate` applied to `state`.
pub fn apply_gate(state: &StateVector, gate: &Gate) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply(gate)?;
    Ok(out)
}

/// An ordered gate list on a fixed register. Every gate is validated on insertion.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        Ok(Self {
            n_qubits,
            gates: Vec::new(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.n_qubits)?;
        self.gates.push(gate);
        Ok(self)
    }

    /// Applies every gate to `state` in order, without touching any counter.
    pub fn apply_to(&self, state: &mut StateVector) -> Result<()> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                actual: state.n_qubits(),
                context: "qubit count of circuit input state",
            });
        }
        for gate in &self.gates {
            state.apply(gate)?;
        }
        Ok(())
    }

    /// The circuit implementing the adjoint unitary.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }
}

/// Counts accesses to the (simulated) quantum device.
///
/// Counters are atomic so they can be shared by worker threads; the totals only
/// depend on the work done, never on scheduling.
#[derive(Debug, Default)]
pub struct ExecCounter {
    state_preparations: AtomicU64,
    fidelity_evaluations: AtomicU64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExecCounts {
    pub state_preparations: u64,
    pub fidelity_evaluations: u64,
}

impl std::ops::Sub for ExecCounts {
    type Output = ExecCounts;

    fn sub(self, rhs: ExecCounts) -> ExecCounts {
        ExecCounts {
            state_preparations: self.state_preparations - rhs.state_preparations,
            fidelity_evaluations: self.fidelity_evaluations - rhs.fidelity_evaluations,
        }
    }
}

impl ExecCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&self) -> ExecCounts {
        ExecCounts {
            state_preparations: self.state_preparations.load(Ordering::Relaxed),
            fidelity_evaluations: self.fidelity_evaluations.load(Ordering::Relaxed),
        }
    }

    pub fn state_preparations(&self) -> u64 {
        self.state_preparations.load(Ordering::Relaxed)
    }

    pub fn fidelity_evaluations(&self) -> u64 {
        self.fidelity_evaluations.load(Ordering::Relaxed)
    }

    pub(crate) fn add_preparations(&self, n: u64) {
        self.state_preparations.fetch_add(n, Ordering::Relaxed);
    }

    pub(crate) fn add_fidelities(&self, n: u64) {
        self.fidelity_evaluations.fetch_add(n, Ordering::Relaxed);
    }
}

/// Prepares `U|0…0⟩` for the circuit `U`, counting one state preparation.
pub fn run_circuit(circuit: &Circuit, counter: &ExecCounter) -> Result<StateVector> {
    let mut state = StateVector::zero(circuit.n_qubits())?;
    circuit.apply_to(&mut state)?;
    counter.add_preparations(1);
    Ok(state)
}

/// `|⟨a|b⟩|²`, counting one fidelity evaluation.
pub fn fidelity(a: &StateVector, b: &StateVector, counter: &ExecCounter) -> Result<f64> {
    let overlap = a.inner(b)?;
    counter.add_fidelities(1);
    Ok(overlap.norm_sqr().clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// A weighted tensor product of single-qubit Pauli operators.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    coefficient: f64,
    operators: Vec<(usize, Pauli)>,
}

impl PauliTerm {
    pub fn new(coefficient: f64, operators: Vec<(usize, Pauli)>) -> Result<Self> {
        for (k, (q, _)) in operators.iter().enumerate() {
            if operators[..k].iter().any(|(p, _)| p == q) {
                return Err(Error::InvalidArgument(format!(
                    "qubit {q} appears twice in a Pauli term"
                )));
            }
            if *q >= MAX_QUBITS {
                return Err(Error::InvalidArgument(format!("qubit index {q} too large")));
            }
        }
        Ok(Self {
            coefficient,
            operators,
        })
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn operators(&self) -> &[(usize, Pauli)] {
        &self.operators
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.operators.iter().map(|(q, _)| *q).max()
    }

    /// Bit masks `(flip, sign, y_count)`: `P|i⟩ = i^y_count (−1)^{|i & sign|} |i ⊕ flip⟩`.
    pub(crate) fn masks(&self) -> (usize, usize, u32) {
        let mut flip = 0;
        let mut sign = 0;
        let mut ys = 0;
        for &(q, p) in &self.operators {
            let bit = 1usize << q;
            match p {
                Pauli::X => flip |= bit,
                Pauli::Y => {
                    flip |= bit;
                    sign |= bit;
                    ys += 1;
                }
                Pauli::Z => sign |= bit,
            }
        }
        (flip, sign, ys)
    }

    /// Image of the basis state `|index⟩` (without the coefficient):
    /// `P|index⟩ = phase |image⟩`.
    pub fn apply_to_basis(&self, index: usize) -> (usize, Complex64) {
        let (flip, sign, ys) = self.masks();
        (index ^ flip, basis_phase(index, sign, ys))
    }
}

fn basis_phase(index: usize, sign: usize, ys: u32) -> Complex64 {
    let i_pow = match ys % 4 {
        0 => ONE,
        1 => Complex64::new(0.0, 1.0),
        2 => -ONE,
        _ => Complex64::new(0.0, -1.0),
    };
    if (index & sign).count_ones() % 2 == 1 {
        -i_pow
    } else {
        i_pow
    }
}

/// `⟨ψ|P|ψ⟩` for the Pauli string of `term`; the coefficient is not applied.
pub fn expectation_pauli(state: &StateVector, term: &PauliTerm) -> Result<f64> {
    if let Some(q) = term.max_qubit() {
        if q >= state.n_qubits() {
            return Err(Error::InvalidArgument(format!(
                "Pauli term acts on qubit {q} but the state has {} qubits",
                state.n_qubits()
            )));
        }
    }
    let (flip, sign, ys) = term.masks();
    let amps = state.amplitudes();
    let mut acc = ZERO;
    for (i, a) in amps.iter().enumerate() {
        acc += amps[i ^ flip].conj() * basis_phase(i, sign, ys) * a;
    }
    debug_assert!(acc.im.abs() < 1e-9, "Hermitian expectation has imaginary part {}", acc.im);
    Ok(acc.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn prob(state: &StateVector, index: usize) -> f64 {
        state.amplitudes()[index].norm_sqr()
    }

    #[test]
    fn ry_pi_flips_zero_to_one() {
        let s = apply_gate(&StateVector::zero(1).unwrap(), &Gate::Ry { target: 0, angle: PI }).unwrap();
        assert_abs_diff_eq!(prob(&s, 1), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cz_on_zero_zero_is_identity() {
        let zero = StateVector::zero(2).unwrap();
        let s = apply_gate(&zero, &Gate::Cz { control: 0, target: 1 }).unwrap();
        assert_eq!(s, zero);
    }

    #[test]
    fn two_half_pi_rx_make_a_flip() {
        let g = Gate::Rx { target: 0, angle: PI / 2.0 };
        let s = apply_gate(&apply_gate(&StateVector::zero(1).unwrap(), &g).unwrap(), &g).unwrap();
        assert_abs_diff_eq!(prob(&s, 1), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rotation_convention_is_half_angle() {
        // RZ(θ)|+⟩ picks up relative phase e^{iθ}; RX(θ) = exp(−iθX/2) gives cos(θ/2) on |0⟩.
        let s = apply_gate(&StateVector::zero(1).unwrap(), &Gate::Rx { target: 0, angle: 0.6 }).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, 0.3f64.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].im, -0.3f64.sin(), epsilon = 1e-15);
        let z = apply_gate(&StateVector::zero(1).unwrap(), &Gate::Rz { target: 0, angle: 0.6 }).unwrap();
        assert_abs_diff_eq!(z.amplitudes()[0].im, -0.3f64.sin(), epsilon = 1e-15);
    }

    #[test]
    fn qubit_zero_is_least_significant_bit() {
        let mut s = StateVector::zero(3).unwrap();
        s.apply(&Gate::Ry { target: 0, angle: PI }).unwrap();
        assert_abs_diff_eq!(prob(&s, 0b001), 1.0, epsilon = 1e-12);
        s.apply(&Gate::Cnot { control: 0, target: 2 }).unwrap();
        assert_abs_diff_eq!(prob(&s, 0b101), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn invalid_gates_are_rejected() {
        let mut s = StateVector::zero(2).unwrap();
        assert!(matches!(
            s.apply(&Gate::H { target: 2 }),
            Err(Error::InvalidGate(_))
        ));
        assert!(matches!(
            s.apply(&Gate::Cz { control: 1, target: 1 }),
            Err(Error::InvalidGate(_))
        ));
        let mut c = Circuit::new(2).unwrap();
        assert!(c.push(Gate::Cnot { control: 5, target: 0 }).is_err());
    }

    #[test]
    fn run_circuit_counts_preparations() {
        let counter = ExecCounter::new();
        let empty = Circuit::new(2).unwrap();
        let s = run_circuit(&empty, &counter).unwrap();
        assert_eq!(s.amplitudes(), &[ONE, ZERO, ZERO, ZERO]);

        let mut c = Circuit::new(1).unwrap();
        c.push(Gate::H { target: 0 }).unwrap();
        let plus = run_circuit(&c, &counter).unwrap();
        assert_abs_diff_eq!(plus.amplitudes()[0].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(plus.amplitudes()[1].re, FRAC_1_SQRT_2, epsilon = 1e-15);

        for _ in 0..7 {
            run_circuit(&c, &counter).unwrap();
        }
        assert_eq!(counter.state_preparations(), 9);
        assert_eq!(counter.fidelity_evaluations(), 0);
    }

    #[test]
    fn fidelity_examples() {
        let counter = ExecCounter::new();
        let zero = StateVector::zero(1).unwrap();
        let one = StateVector::basis(1, 1).unwrap();
        let plus = apply_gate(&zero, &Gate::H { target: 0 }).unwrap();
        assert_abs_diff_eq!(fidelity(&plus, &plus, &counter).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity(&zero, &one, &counter).unwrap(), 0.0);
        assert_abs_diff_eq!(fidelity(&zero, &plus, &counter).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(counter.fidelity_evaluations(), 3);

        let two = StateVector::zero(2).unwrap();
        assert!(matches!(
            fidelity(&zero, &two, &counter),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn pauli_expectations() {
        let zero = StateVector::zero(1).unwrap();
        let plus = apply_gate(&zero, &Gate::H { target: 0 }).unwrap();
        let z0 = PauliTerm::new(1.0, vec![(0, Pauli::Z)]).unwrap();
        let x0 = PauliTerm::new(1.0, vec![(0, Pauli::X)]).unwrap();
        assert_abs_diff_eq!(expectation_pauli(&zero, &z0).unwrap(), 1.0);
        assert_abs_diff_eq!(expectation_pauli(&plus, &x0).unwrap(), 1.0, epsilon = 1e-15);
        let zz = PauliTerm::new(1.0, vec![(0, Pauli::Z), (1, Pauli::Z)]).unwrap();
        assert_abs_diff_eq!(expectation_pauli(&StateVector::zero(2).unwrap(), &zz).unwrap(), 1.0);
        // ⟨+i|Y|+i⟩ = 1 with |+i⟩ = RX(−π/2)|0⟩.
        let plus_i = apply_gate(&zero, &Gate::Rx { target: 0, angle: -PI / 2.0 }).unwrap();
        let y0 = PauliTerm::new(1.0, vec![(0, Pauli::Y)]).unwrap();
        assert_abs_diff_eq!(expectation_pauli(&plus_i, &y0).unwrap(), 1.0, epsilon = 1e-15);
        assert!(expectation_pauli(&zero, &zz).is_err());
    }

    #[test]
    fn repeated_qubit_in_term_is_rejected() {
        assert!(PauliTerm::new(1.0, vec![(0, Pauli::Z), (0, Pauli::X)]).is_err());
    }

    #[test]
    fn from_amplitudes_validates() {
        assert!(StateVector::from_amplitudes(vec![ONE, ZERO, ZERO]).is_err());
        assert!(StateVector::from_amplitudes(vec![ONE, ONE]).is_err());
        assert!(StateVector::zero(0).is_err());
        assert!(StateVector::zero(21).is_err());
    }
}
