//! t-SNE similarities, cost and gradient.
//!
//! High-dimensional similarities are Gaussian conditionals `p_{j|i}` with a
//! per-point bandwidth `σ_i` calibrated to a target perplexity, symmetrized as
//! `p_ij = (p_{j|i} + p_{i|j}) / 2N`. Low-dimensional similarities use the
//! Student-t kernel `(1 + ‖y_i − y_j‖²)⁻¹`. Distances come either from feature
//! vectors (squared Euclidean) or from a fidelity Gram matrix (`1 − k_ij`).

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::GramMatrix;

/// Lower bound applied to `p_ij` and `q_ij` inside logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

/// Calibration stops once `|log₂ Perp − log₂ target|` drops below this.
pub const PERPLEXITY_TOL: f64 = 1e-5;
pub const MAX_BISECTION_STEPS: usize = 64;
const SIGMA_LO: f64 = 1e-20;
const SIGMA_HI: f64 = 1e20;

/// Symmetrized joint similarities of the training set.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityP {
    p: Array2<f64>,
    sigmas: Vec<f64>,
    perplexities: Vec<f64>,
    perplexity_target: f64,
    unreachable_rows: Vec<usize>,
}

impl SimilarityP {
    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.p.view()
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    /// Perplexity actually achieved by each conditional row.
    pub fn perplexities(&self) -> &[f64] {
        &self.perplexities
    }

    pub fn perplexity_target(&self) -> f64 {
        self.perplexity_target
    }

    /// Rows whose target perplexity could not be reached (e.g. equidistant neighbours).
    pub fn unreachable_rows(&self) -> &[usize] {
        &self.unreachable_rows
    }
}

/// Low-dimensional coordinates, one row per point.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    y: Array2<f64>,
}

impl Embedding {
    pub fn new(y: Array2<f64>) -> Result<Self> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding coordinates".into()));
        }
        Ok(Self { y })
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.y.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.y
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn dim(&self) -> usize {
        self.y.ncols()
    }
}

/// Conditional similarities `p_{j|i}` of one point given the squared distances
/// to all *other* points.
pub fn conditional_p(distances_sq: &[f64], sigma: f64) -> Result<Vec<f64>> {
    conditional_row(distances_sq, sigma, 0)
}

fn conditional_row(distances_sq: &[f64], sigma: f64, row: usize) -> Result<Vec<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let dmin = min_finite(distances_sq, row)?;
    let beta = 1.0 / (2.0 * sigma * sigma);
    let mut w: Vec<f64> = distances_sq.iter().map(|&d| (-(d - dmin) * beta).exp()).collect();
    let z: f64 = w.iter().sum();
    for v in &mut w {
        *v /= z;
    }
    Ok(w)
}

fn min_finite(distances_sq: &[f64], row: usize) -> Result<f64> {
    if distances_sq.is_empty() {
        return Err(Error::DegenerateRow {
            row,
            reason: "no neighbours".into(),
        });
    }
    if distances_sq.iter().any(|d| d.is_nan() || *d < 0.0) {
        return Err(Error::DegenerateRow {
            row,
            reason: "distances must be non-negative".into(),
        });
    }
    let dmin = distances_sq.iter().copied().fold(f64::INFINITY, f64::min);
    if !dmin.is_finite() {
        return Err(Error::DegenerateRow {
            row,
            reason: "all distances are infinite".into(),
        });
    }
    Ok(dmin)
}

/// Shannon entropy in bits of the conditional row at bandwidth `sigma`.
fn entropy_bits(distances_sq: &[f64], dmin: f64, sigma: f64) -> f64 {
    let beta = 1.0 / (2.0 * sigma * sigma);
    let mut z = 0.0;
    let mut weighted = 0.0;
    for &d in distances_sq {
        let shifted = d - dmin;
        let w = (-shifted * beta).exp();
        z += w;
        if w > 0.0 {
            weighted += w * shifted;
        }
    }
    (z.ln() + beta * weighted / z) / std::f64::consts::LN_2
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration {
    pub sigma: f64,
    pub perplexity: f64,
    /// False when the target lies outside the reachable perplexity range.
    pub converged: bool,
}

/// Finds `σ` such that the conditional row has the requested perplexity.
///
/// Bisection runs on `log σ` (geometric midpoints) inside `[1e-20, 1e20]`,
/// widening the bracket when needed, for at most 64 steps.
pub fn calibrate_sigma(distances_sq: &[f64], perplexity_target: f64) -> Result<Calibration> {
    calibrate_row(distances_sq, perplexity_target, 0)
}

fn calibrate_row(distances_sq: &[f64], target: f64, row: usize) -> Result<Calibration> {
    if distances_sq.len() < 2 {
        return Err(Error::DegenerateRow {
            row,
            reason: "perplexity calibration needs at least 2 neighbours".into(),
        });
    }
    if !(target >= 1.0) || !target.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "perplexity target must be >= 1, got {target}"
        )));
    }
    let dmin = min_finite(distances_sq, row)?;
    let goal = target.log2();
    let h = |s: f64| entropy_bits(distances_sq, dmin, s);
    let finish = |sigma: f64, bits: f64, converged: bool| Calibration {
        sigma,
        perplexity: bits.exp2(),
        converged,
    };

    let (mut lo, mut hi) = (SIGMA_LO, SIGMA_HI);
    let mut h_lo = h(lo);
    let mut h_hi = h(hi);
    for _ in 0..4 {
        if h_lo <= goal {
            break;
        }
        lo *= 1e-20;
        h_lo = h(lo);
    }
    for _ in 0..4 {
        if h_hi >= goal {
            break;
        }
        hi *= 1e20;
        h_hi = h(hi);
    }
    if (h_lo - goal).abs() < PERPLEXITY_TOL {
        return Ok(finish(lo, h_lo, true));
    }
    if (h_hi - goal).abs() < PERPLEXITY_TOL {
        return Ok(finish(hi, h_hi, true));
    }
    if h_lo > goal {
        return Ok(finish(lo, h_lo, false));
    }
    if h_hi < goal {
        return Ok(finish(hi, h_hi, false));
    }

    let mut best = (hi, h_hi);
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = (lo * hi).sqrt();
        let hm = h(mid);
        if (hm - goal).abs() < (best.1 - goal).abs() {
            best = (mid, hm);
        }
        if (hm - goal).abs() < PERPLEXITY_TOL {
            return Ok(finish(mid, hm, true));
        }
        if hm < goal {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(finish(best.0, best.1, (best.1 - goal).abs() < PERPLEXITY_TOL))
}

/// Joint similarities from a matrix of squared distances (diagonal ignored).
pub fn build_p(distances_sq: ArrayView2<'_, f64>, perplexity_target: f64) -> Result<SimilarityP> {
    let (n, m) = distances_sq.dim();
    if n != m {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: m,
            context: "distance matrix must be square",
        });
    }
    if n < 2 {
        return Err(Error::InvalidArgument("need at least 2 points".into()));
    }
    if n >= 3 && !(perplexity_target < (n - 1) as f64) {
        return Err(Error::InfeasiblePerplexity {
            perplexity: perplexity_target,
            n,
        });
    }

    let rows: Vec<(Vec<f64>, Calibration)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let d: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| distances_sq[[i, j]]).collect();
            if n == 2 {
                // A single neighbour carries all of the conditional mass for any σ.
                min_finite(&d, i)?;
                return Ok((
                    vec![1.0],
                    Calibration {
                        sigma: 1.0,
                        perplexity: 1.0,
                        converged: true,
                    },
                ));
            }
            let cal = calibrate_row(&d, perplexity_target, i)?;
            Ok((conditional_row(&d, cal.sigma, i)?, cal))
        })
        .collect::<Result<_>>()?;

    let mut cond = Array2::zeros((n, n));
    let mut sigmas = Vec::with_capacity(n);
    let mut perplexities = Vec::with_capacity(n);
    let mut unreachable_rows = Vec::new();
    for (i, (row, cal)) in rows.into_iter().enumerate() {
        let others = (0..n).filter(|&j| j != i);
        for (j, v) in others.zip(row) {
            cond[[i, j]] = v;
        }
        sigmas.push(cal.sigma);
        perplexities.push(cal.perplexity);
        if !cal.converged {
            unreachable_rows.push(i);
        }
    }
    let scale = 1.0 / (2.0 * n as f64);
    let p = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            0.0
        } else {
            (cond[[i, j]] + cond[[j, i]]) * scale
        }
    });
    Ok(SimilarityP {
        p,
        sigmas,
        perplexities,
        perplexity_target,
        unreachable_rows,
    })
}

/// Joint similarities from a fidelity Gram matrix via `d²_ij = 1 − k_ij`.
pub fn build_p_from_gram(gram: &GramMatrix, perplexity_target: f64) -> Result<SimilarityP> {
    build_p(gram.fidelity_distances_sq().view(), perplexity_target)
}

/// Student-t similarities of an embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityQ {
    pub q: Array2<f64>,
    /// `Z = Σ_{k≠l} (1 + ‖y_k − y_l‖²)⁻¹`.
    pub normalizer: f64,
}

/// Unnormalized Student-t kernel with zero diagonal, plus its total mass.
fn student_t(y: ArrayView2<'_, f64>) -> (Array2<f64>, f64) {
    let n = y.nrows();
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let yi = y.row(i);
            let mut sum = 0.0;
            let row: Vec<f64> = (0..n)
                .map(|j| {
                    if i == j {
                        return 0.0;
                    }
                    let d2: f64 = yi.iter().zip(y.row(j).iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                    let w = 1.0 / (1.0 + d2);
                    sum += w;
                    w
                })
                .collect();
            (row, sum)
        })
        .collect();
    let mut w = Array2::zeros((n, n));
    let mut z = 0.0;
    for (i, (row, s)) in rows.into_iter().enumerate() {
        w.row_mut(i).assign(&ndarray::Array1::from(row));
        z += s;
    }
    (w, z)
}

pub fn build_q(y: ArrayView2<'_, f64>) -> Result<SimilarityQ> {
    if y.nrows() < 2 {
        return Err(Error::InvalidArgument("need at least 2 points".into()));
    }
    let (w, z) = student_t(y);
    Ok(SimilarityQ {
        q: w / z,
        normalizer: z,
    })
}

/// `KL(P‖Q) = Σ_{i≠j, p_ij>0} p_ij log(p_ij / q_ij)` with both arguments floored at 1e-12.
pub fn kl_cost(p: ArrayView2<'_, f64>, q: ArrayView2<'_, f64>) -> f64 {
    let mut cost = 0.0;
    for ((i, j), &pij) in p.indexed_iter() {
        if i != j && pij > 0.0 {
            cost += pij * (pij.max(PROB_FLOOR).ln() - q[[i, j]].max(PROB_FLOOR).ln());
        }
    }
    cost
}

/// `∂C/∂y_i = 4 Σ_j (p_ij − q_ij)(y_i − y_j)(1 + ‖y_i − y_j‖²)⁻¹`.
pub fn grad_cost_wrt_y(p: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    Ok(cost_and_grad_y(p, y)?.1)
}

/// KL cost and its gradient with respect to the embedding in one pass.
pub fn cost_and_grad_y(p: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<(f64, Array2<f64>)> {
    let (n, d) = y.dim();
    if p.dim() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: p.nrows(),
            context: "P must be N x N for an N-point embedding",
        });
    }
    if n < 2 {
        return Err(Error::InvalidArgument("need at least 2 points".into()));
    }
    let (w, z) = student_t(y);
    let inv_z = 1.0 / z;
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut g = vec![0.0; d];
            let mut cost = 0.0;
            let yi = y.row(i);
            for j in 0..n {
                if i == j {
                    continue;
                }
                let wij = w[[i, j]];
                let qij = wij * inv_z;
                let pij = p[[i, j]];
                if pij > 0.0 {
                    cost += pij * (pij.max(PROB_FLOOR).ln() - qij.max(PROB_FLOOR).ln());
                }
                let coef = 4.0 * (pij - qij) * wij;
                for (k, gk) in g.iter_mut().enumerate() {
                    *gk += coef * (yi[k] - y[[j, k]]);
                }
            }
            (g, cost)
        })
        .collect();
    let mut grad = Array2::zeros((n, d));
    let mut cost = 0.0;
    for (i, (g, c)) in rows.into_iter().enumerate() {
        grad.row_mut(i).assign(&ndarray::Array1::from(g));
        cost += c;
    }
    Ok((cost, grad))
}

/// Sum of all entries; used by invariants and tests.
pub fn total(m: ArrayView2<'_, f64>) -> f64 {
    m.sum_axis(Axis(1)).sum()
}
