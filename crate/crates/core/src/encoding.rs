//! Classical preprocessing and the data re-uploading feature map.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;
use crate::simulator::{run_circuit, Circuit, ExecCounter, Gate, StateVector};

/// Default number of principal components, which is also the qubit count.
pub const DEFAULT_COMPONENTS: usize = 12;

/// Upper end of the angle range produced by [`PcaScaler::transform`].
pub const ANGLE_RANGE: f64 = FRAC_PI_2;

/// Feature matrix with optional integer class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Option<Vec<i64>>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Option<Vec<i64>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != features.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: features.nrows(),
                    actual: l.len(),
                    context: "label count vs feature rows",
                });
            }
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            let cols = features.ncols().max(1);
            return Err(Error::NonFinite(format!(
                "feature at row {}, column {}",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { features, labels })
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), indices),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
        }
    }

    /// Seeded shuffle followed by a train/test split. The test part gets
    /// `ceil(N·(1 − train_fraction))` rows.
    pub fn shuffle_split(&self, train_fraction: f64, seed: u64) -> Result<Split> {
        if !(0.0..=1.0).contains(&train_fraction) {
            return Err(Error::InvalidArgument(format!(
                "train fraction {train_fraction} outside [0, 1]"
            )));
        }
        let n = self.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng::derive(seed, 1));
        let n_test = ((n as f64) * (1.0 - train_fraction) - 1e-9).ceil().max(0.0) as usize;
        let n_train = n - n_test.min(n);
        let train_indices = order[..n_train].to_vec();
        let test_indices = order[n_train..].to_vec();
        Ok(Split {
            train: self.select(&train_indices),
            test: self.select(&test_indices),
            train_indices,
            test_indices,
        })
    }

    /// Reads the CSV layout used by the CLI: one sample per row, feature
    /// columns first. A header row is detected by a non-numeric first token;
    /// when present and its last column is named `label`, that column holds
    /// integer class labels.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;

        let mut has_labels = false;
        let mut width: Option<usize> = None;
        let mut values = Vec::new();
        let mut labels = Vec::new();
        let mut rows = 0usize;

        for (k, record) in reader.records().enumerate() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let line = record.position().map_or(k as u64 + 1, |p| p.line());
            if record.iter().all(|f| f.is_empty()) {
                continue;
            }
            if k == 0 && record.get(0).is_some_and(|t| t.parse::<f64>().is_err()) {
                has_labels = record.iter().next_back() == Some("label");
                width = Some(record.len());
                continue;
            }
            let w = *width.get_or_insert(record.len());
            if record.len() != w {
                return Err(Error::Parse {
                    path: path.into(),
                    line,
                    message: format!("expected {w} columns, found {}", record.len()),
                });
            }
            let n_features = if has_labels { w - 1 } else { w };
            for (c, field) in record.iter().enumerate() {
                if c < n_features {
                    let v: f64 = field.parse().map_err(|_| Error::Parse {
                        path: path.into(),
                        line,
                        message: format!("column {}: '{field}' is not a number", c + 1),
                    })?;
                    if !v.is_finite() {
                        return Err(Error::Parse {
                            path: path.into(),
                            line,
                            message: format!("column {}: non-finite value", c + 1),
                        });
                    }
                    values.push(v);
                } else {
                    let l: i64 = field.parse().map_err(|_| Error::Parse {
                        path: path.into(),
                        line,
                        message: format!("label '{field}' is not an integer"),
                    })?;
                    labels.push(l);
                }
            }
            rows += 1;
        }
        let w = width.unwrap_or(0);
        let n_features = if has_labels { w.saturating_sub(1) } else { w };
        if rows == 0 || n_features == 0 {
            return Err(Error::format(path, "no data rows"));
        }
        let features = Array2::from_shape_vec((rows, n_features), values)
            .map_err(|e| Error::format(path, e.to_string()))?;
        Dataset::new(features, has_labels.then_some(labels))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.into(),
            line,
            message: format!("{other:?}"),
        },
    }
}

#[derive(Clone, Debug)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// PCA projection followed by per-component min–max scaling to `[0, π/2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaScaler {
    mean: Array1<f64>,
    /// `D × k`, one principal direction per column, ordered by decreasing variance.
    components: Array2<f64>,
    eigenvalues: Vec<f64>,
    min: Array1<f64>,
    max: Array1<f64>,
}

impl PcaScaler {
    /// Fits the top `out_dim` principal components of `train` and records the
    /// range of each projected component.
    pub fn fit(train: &Dataset, out_dim: usize) -> Result<Self> {
        let x = train.features();
        let (n, d) = x.dim();
        if out_dim == 0 || n < out_dim || d < out_dim || n < 2 {
            return Err(Error::Fit(format!(
                "cannot extract {out_dim} components from {n} samples of dimension {d}"
            )));
        }
        let mean = x.mean_axis(Axis(0)).expect("non-empty");
        let centered = &x - &mean;
        let cov = centered.t().dot(&centered) / (n as f64 - 1.0);

        let eig = SymmetricEigen::new(DMatrix::from_fn(d, d, |i, j| cov[[i, j]]));
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let largest = eig.eigenvalues[order[0]];
        let threshold = largest.abs() * 1e-12;
        let positive = order
            .iter()
            .filter(|&&k| eig.eigenvalues[k] > threshold)
            .count();
        if largest <= 0.0 || positive < out_dim {
            return Err(Error::Fit(format!(
                "covariance has only {positive} positive eigenvalues, {out_dim} requested"
            )));
        }

        let mut components = Array2::zeros((d, out_dim));
        for (c, &k) in order.iter().take(out_dim).enumerate() {
            let v = eig.eigenvectors.column(k);
            // Sign convention: the entry of largest magnitude is positive.
            let pivot = (0..d)
                .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a)))
                .expect("d > 0");
            let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
            for r in 0..d {
                components[[r, c]] = sign * v[r];
            }
        }
        let eigenvalues = order.iter().take(out_dim).map(|&k| eig.eigenvalues[k]).collect();

        let mut scaler = PcaScaler {
            mean,
            components,
            eigenvalues,
            min: Array1::zeros(out_dim),
            max: Array1::zeros(out_dim),
        };
        let projected = scaler.project(x)?;
        for c in 0..out_dim {
            let col = projected.column(c);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(lo < hi) {
                return Err(Error::Fit(format!(
                    "component {c} is constant on the training data"
                )));
            }
            scaler.min[c] = lo;
            scaler.max[c] = hi;
        }
        Ok(scaler)
    }

    /// Rebuilds a scaler from stored parts (see [`crate::io::write_scaler`]).
    pub fn from_parts(
        mean: Array1<f64>,
        components: Array2<f64>,
        eigenvalues: Vec<f64>,
        min: Array1<f64>,
        max: Array1<f64>,
    ) -> Result<Self> {
        let (d, k) = components.dim();
        if mean.len() != d || min.len() != k || max.len() != k || eigenvalues.len() != k {
            return Err(Error::InvalidArgument("inconsistent scaler shapes".into()));
        }
        if min.iter().zip(max.iter()).any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidArgument("scaler range with min >= max".into()));
        }
        Ok(Self {
            mean,
            components,
            eigenvalues,
            min,
            max,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.components.ncols()
    }

    pub fn mean(&self) -> ArrayView1<'_, f64> {
        self.mean.view()
    }

    pub fn components(&self) -> ArrayView2<'_, f64> {
        self.components.view()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn min(&self) -> ArrayView1<'_, f64> {
        self.min.view()
    }

    pub fn max(&self) -> ArrayView1<'_, f64> {
        self.max.view()
    }

    /// Raw principal-component scores `(x − mean)·W`.
    pub fn project(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.ncols(),
                context: "feature dimension for PCA projection",
            });
        }
        Ok((&x - &self.mean).dot(&self.components))
    }

    /// Maps scores back into feature space.
    pub fn back_project(&self, scores: ArrayView2<'_, f64>) -> Array2<f64> {
        scores.dot(&self.components.t()) + &self.mean
    }

    /// Projects and rescales each component to `[0, π/2]` using the training
    /// range; values outside that range are clamped.
    pub fn transform(&self, data: &Dataset) -> Result<Array2<f64>> {
        let mut z = self.project(data.features())?;
        for mut row in z.rows_mut() {
            for (c, v) in row.iter_mut().enumerate() {
                let t = (*v - self.min[c]) / (self.max[c] - self.min[c]);
                *v = (t * ANGLE_RANGE).clamp(0.0, ANGLE_RANGE);
            }
        }
        Ok(z)
    }
}

/// Single-qubit rotations of one upload layer, applied in this order to qubit
/// `i` with angle `x_i`.
pub const UPLOAD_ROTATIONS: [fn(usize, f64) -> Gate; 2] = [
    |target, angle| Gate::Rx { target, angle },
    |target, angle| Gate::Ry { target, angle },
];

/// Data re-uploading encoder: `layers` upload layers separated by a ring of CZ
/// gates (control `i`, target `(i + 1) mod n`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureMap {
    pub n_qubits: usize,
    pub layers: usize,
}

impl Default for FeatureMap {
    fn default() -> Self {
        Self {
            n_qubits: DEFAULT_COMPONENTS,
            layers: 2,
        }
    }
}

impl FeatureMap {
    pub fn new(n_qubits: usize, layers: usize) -> Result<Self> {
        if n_qubits < 2 || layers == 0 {
            return Err(Error::InvalidArgument(format!(
                "feature map needs at least 2 qubits and 1 layer (got {n_qubits}, {layers})"
            )));
        }
        Ok(Self { n_qubits, layers })
    }

    pub fn gate_count(&self) -> usize {
        self.layers * UPLOAD_ROTATIONS.len() * self.n_qubits + (self.layers - 1) * self.n_qubits
    }

    pub fn circuit(&self, angles: &[f64]) -> Result<Circuit> {
        if angles.len() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                actual: angles.len(),
                context: "feature-map angle count",
            });
        }
        let n = self.n_qubits;
        let mut circuit = Circuit::new(n)?;
        for layer in 0..self.layers {
            if layer > 0 {
                for i in 0..n {
                    circuit.push(Gate::Cz {
                        control: i,
                        target: (i + 1) % n,
                    })?;
                }
            }
            for (i, &x) in angles.iter().enumerate() {
                for rot in UPLOAD_ROTATIONS {
                    circuit.push(rot(i, x))?;
                }
            }
        }
        Ok(circuit)
    }

    /// Prepares the encoded state of one angle vector.
    pub fn encode(&self, angles: &[f64], counter: &ExecCounter) -> Result<StateVector> {
        run_circuit(&self.circuit(angles)?, counter)
    }

    /// Encodes every row of `angles`, one state preparation each.
    pub fn encode_rows(
        &self,
        angles: ArrayView2<'_, f64>,
        counter: &ExecCounter,
    ) -> Result<Vec<StateVector>> {
        let rows: Vec<Vec<f64>> = angles.rows().into_iter().map(|r| r.to_vec()).collect();
        rows.par_iter().map(|r| self.encode(r, counter)).collect()
    }
}

/// The default 12-qubit, two-layer feature-map circuit for one angle vector.
pub fn feature_map_circuit(angles: &[f64]) -> Result<Circuit> {
    FeatureMap::default().circuit(angles)
}
