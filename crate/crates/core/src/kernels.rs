//! Fidelity and Gaussian kernels.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::simulator::{inner_unchecked, ExecCounter, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum KernelSpec {
    /// `k(ψ, φ) = |⟨ψ|φ⟩|²`.
    #[default]
    QuantumFidelity,
    /// `k(x, x') = exp(−‖x − x'‖² / 2σ'²)`.
    Gaussian { bandwidth: f64 },
}

impl KernelSpec {
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "Gaussian bandwidth must be positive, got {bandwidth}"
            )));
        }
        Ok(KernelSpec::Gaussian { bandwidth })
    }

    pub fn is_quantum(&self) -> bool {
        matches!(self, KernelSpec::QuantumFidelity)
    }

    /// Short textual form, also used in model files: `quantum_fidelity` or
    /// `gaussian,<bandwidth>`.
    pub fn descriptor(&self) -> String {
        match self {
            KernelSpec::QuantumFidelity => "quantum_fidelity".to_string(),
            KernelSpec::Gaussian { bandwidth } => format!("gaussian,{bandwidth:.16e}"),
        }
    }

    pub fn parse_descriptor(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "quantum_fidelity" {
            return Ok(KernelSpec::QuantumFidelity);
        }
        if let Some(rest) = s.strip_prefix("gaussian,") {
            let bw: f64 = rest
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad bandwidth '{rest}'")))?;
            return KernelSpec::gaussian(bw);
        }
        Err(Error::InvalidArgument(format!("unknown kernel '{s}'")))
    }
}


/// Points a kernel can be evaluated on: prepared states for the fidelity
/// kernel, feature rows for the Gaussian kernel.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelData {
    States(Vec<StateVector>),
    Features(Array2<f64>),
}

impl KernelData {
    pub fn len(&self) -> usize {
        match self {
            KernelData::States(s) => s.len(),
            KernelData::Features(f) => f.nrows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check_compatible(&self, spec: &KernelSpec) -> Result<()> {
        match (self, spec) {
            (KernelData::States(_), KernelSpec::QuantumFidelity)
            | (KernelData::Features(_), KernelSpec::Gaussian { .. }) => Ok(()),
            _ => Err(Error::InvalidArgument(format!(
                "kernel {} cannot be evaluated on this kind of data",
                spec.descriptor()
            ))),
        }
    }
}

/// A single point to evaluate against training references.
#[derive(Clone, Copy, Debug)]
pub enum KernelInput<'a> {
    State(&'a StateVector),
    Features(ArrayView1<'a, f64>),
}

/// Symmetric `N × N` kernel matrix with unit diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    entries: Array2<f64>,
}

impl GramMatrix {
    /// Wraps a precomputed matrix, checking shape, symmetry (1e-12), unit
    /// diagonal and the `[0, 1]` range.
    pub fn from_entries(entries: Array2<f64>) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c || r == 0 {
            return Err(Error::DimensionMismatch {
                expected: r,
                actual: c,
                context: "Gram matrix must be square and non-empty",
            });
        }
        for i in 0..r {
            if (entries[[i, i]] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "Gram diagonal entry {i} is {}",
                    entries[[i, i]]
                )));
            }
            for j in 0..i {
                let (a, b) = (entries[[i, j]], entries[[j, i]]);
                if !a.is_finite() || (a - b).abs() > 1e-12 || !(-1e-12..=1.0 + 1e-12).contains(&a) {
                    return Err(Error::InvalidArgument(format!(
                        "Gram entries ({i},{j})={a} / ({j},{i})={b} violate symmetry or range"
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> ArrayView2<'_, f64> {
        self.entries.view()
    }

    pub fn into_entries(self) -> Array2<f64> {
        self.entries
    }

    /// Squared distances `d²_ij = 1 − k_ij` induced by a fidelity kernel.
    pub fn fidelity_distances_sq(&self) -> Array2<f64> {
        self.entries.mapv(|k| (1.0 - k).max(0.0))
    }
}

/// Gram matrix of the fidelity kernel over prepared states.
///
/// Only the strict upper triangle is evaluated, so exactly `N(N−1)/2` fidelity
/// evaluations are counted; the diagonal is 1 for pure states.
pub fn gram_quantum(states: &[StateVector], counter: &ExecCounter) -> Result<GramMatrix> {
    let n = states.len();
    let first = states
        .first()
        .ok_or_else(|| Error::InvalidArgument("no states for Gram matrix".into()))?;
    if let Some(bad) = states.iter().find(|s| s.n_qubits() != first.n_qubits()) {
        return Err(Error::DimensionMismatch {
            expected: first.n_qubits(),
            actual: bad.n_qubits(),
            context: "qubit counts within Gram matrix inputs",
        });
    }

    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = states[i].amplitudes();
            let row: Vec<f64> = states[i + 1..]
                .iter()
                .map(|s| inner_unchecked(a, s.amplitudes()).norm_sqr().clamp(0.0, 1.0))
                .collect();
            counter.add_fidelities(row.len() as u64);
            row
        })
        .collect();

    let mut entries = Array2::eye(n);
    for (i, row) in upper.into_iter().enumerate() {
        for (off, k) in row.into_iter().enumerate() {
            let j = i + 1 + off;
            entries[[i, j]] = k;
            entries[[j, i]] = k;
        }
    }
    Ok(GramMatrix { entries })
}

/// Gram matrix of the Gaussian kernel over feature rows.
pub fn gram_gaussian(features: ArrayView2<'_, f64>, spec: &KernelSpec) -> Result<GramMatrix> {
    let KernelSpec::Gaussian { bandwidth } = *spec else {
        return Err(Error::InvalidArgument(
            "gram_gaussian needs a Gaussian kernel spec".into(),
        ));
    };
    let n = features.nrows();
    if n == 0 {
        return Err(Error::InvalidArgument("no rows for Gram matrix".into()));
    }
    let d2 = squared_distances(features);
    let scale = 1.0 / (2.0 * bandwidth * bandwidth);
    let mut entries = d2.mapv(|d| (-d * scale).exp());
    for i in 0..n {
        entries[[i, i]] = 1.0;
    }
    Ok(GramMatrix { entries })
}

/// Gram matrix of `refs` under `spec`. Fidelity evaluations are counted for
/// the quantum kernel only.
pub fn gram(refs: &KernelData, spec: &KernelSpec, counter: &ExecCounter) -> Result<GramMatrix> {
    refs.check_compatible(spec)?;
    match refs {
        KernelData::States(states) => gram_quantum(states, counter),
        KernelData::Features(f) => gram_gaussian(f.view(), spec),
    }
}

/// Pairwise squared Euclidean distances between rows, with an exact zero diagonal.
pub fn squared_distances(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = x.nrows();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        xi.iter().zip(x.row(j).iter()).map(|(a, b)| (a - b) * (a - b)).sum()
                    }
                })
                .collect()
        })
        .collect();
    Array2::from_shape_fn((n, n), |(i, j)| rows[i][j])
}

/// Kernel values `k(train_i, point)` for every training reference. The
/// fidelity kernel consumes `N` fidelity evaluations.
pub fn kernel_row(
    point: KernelInput<'_>,
    refs: &KernelData,
    spec: &KernelSpec,
    counter: &ExecCounter,
) -> Result<Array1<f64>> {
    refs.check_compatible(spec)?;
    match (point, refs, spec) {
        (KernelInput::State(s), KernelData::States(train), KernelSpec::QuantumFidelity) => {
            if let Some(t) = train.first() {
                if t.n_qubits() != s.n_qubits() {
                    return Err(Error::DimensionMismatch {
                        expected: t.n_qubits(),
                        actual: s.n_qubits(),
                        context: "qubit count of point vs training states",
                    });
                }
            }
            let row: Array1<f64> = train
                .iter()
                .map(|t| inner_unchecked(t.amplitudes(), s.amplitudes()).norm_sqr().clamp(0.0, 1.0))
                .collect();
            counter.add_fidelities(train.len() as u64);
            Ok(row)
        }
        (KernelInput::Features(x), KernelData::Features(train), KernelSpec::Gaussian { bandwidth }) => {
            if x.len() != train.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: train.ncols(),
                    actual: x.len(),
                    context: "feature dimension of point vs training rows",
                });
            }
            let scale = 1.0 / (2.0 * bandwidth * bandwidth);
            Ok(train
                .rows()
                .into_iter()
                .map(|t| {
                    let d2: f64 = t.iter().zip(x.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                    (-d2 * scale).exp()
                })
                .collect())
        }
        _ => Err(Error::InvalidArgument(
            "point type does not match the kernel".into(),
        )),
    }
}

/// Kernel rows for many points (`M × N`), computed in parallel.
pub fn kernel_rows(
    points: &KernelData,
    refs: &KernelData,
    spec: &KernelSpec,
    counter: &ExecCounter,
) -> Result<Array2<f64>> {
    points.check_compatible(spec)?;
    let rows: Vec<Array1<f64>> = match points {
        KernelData::States(states) => states
            .par_iter()
            .map(|s| kernel_row(KernelInput::State(s), refs, spec, counter))
            .collect::<Result<_>>()?,
        KernelData::Features(f) => (0..f.nrows())
            .into_par_iter()
            .map(|i| kernel_row(KernelInput::Features(f.row(i)), refs, spec, counter))
            .collect::<Result<_>>()?,
    };
    let n = refs.len();
    let mut out = Array2::zeros((rows.len(), n));
    for (mut dst, src) in out.rows_mut().into_iter().zip(rows) {
        dst.assign(&src);
    }
    Ok(out)
}
