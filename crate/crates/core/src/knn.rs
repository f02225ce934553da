//! k-nearest-neighbour evaluation of embeddings with 5-fold cross-validation.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use ndarray::{ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;

pub const FOLDS: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct CvReport {
    pub k: usize,
    pub fold_accuracies: [f64; FOLDS],
    pub mean_accuracy: f64,
}

/// Majority vote among the `k` nearest training points (Euclidean).
///
/// Ties between labels with equal votes go to the label whose voters have the
/// smaller summed distance, then to the smaller label id. Equidistant
/// neighbours are ordered by training index.
pub fn knn_predict(
    train_y: ArrayView2<'_, f64>,
    train_labels: &[i64],
    query: ArrayView1<'_, f64>,
    k: usize,
) -> Result<i64> {
    let m = train_y.nrows();
    if m == 0 {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if train_labels.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: train_labels.len(),
            context: "labels vs training points",
        });
    }
    if k == 0 || k > m {
        return Err(Error::InvalidArgument(format!("k = {k} with {m} training points")));
    }
    if query.len() != train_y.ncols() {
        return Err(Error::DimensionMismatch {
            expected: train_y.ncols(),
            actual: query.len(),
            context: "query dimension",
        });
    }

    let mut dist: Vec<(f64, usize)> = train_y
        .axis_iter(Axis(0))
        .enumerate()
        .map(|(i, row)| {
            let d2: f64 = row.iter().zip(query.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2.sqrt(), i)
        })
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < m {
        dist.select_nth_unstable_by(k - 1, cmp);
    }

    // label -> (votes, summed distance)
    let mut votes: BTreeMap<i64, (usize, f64)> = BTreeMap::new();
    let mut nearest = dist[..k].to_vec();
    nearest.sort_by(cmp);
    for &(d, i) in &nearest {
        let e = votes.entry(train_labels[i]).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += d;
    }
    let best = votes
        .iter()
        .min_by(|(la, (va, da)), (lb, (vb, db))| {
            vb.cmp(va).then(da.total_cmp(db)).then(la.cmp(lb))
        })
        .map(|(l, _)| *l)
        .expect("k >= 1");
    Ok(best)
}

/// Seeded partition of `0..n` into 5 contiguous chunks of a shuffled order;
/// chunk sizes differ by at most one.
pub fn folds(n: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::derive(seed, 2));
    let base = n / FOLDS;
    let extra = n % FOLDS;
    let mut out = Vec::with_capacity(FOLDS);
    let mut start = 0;
    for f in 0..FOLDS {
        let len = base + usize::from(f < extra);
        out.push(order[start..start + len].to_vec());
        start += len;
    }
    out
}

/// 5-fold cross-validated k-NN accuracy of an embedding.
pub fn cross_validate(
    y: ArrayView2<'_, f64>,
    labels: Option<&[i64]>,
    k: usize,
    seed: u64,
) -> Result<CvReport> {
    let labels = labels.ok_or_else(|| Error::InvalidArgument("cross-validation needs labels".into()))?;
    let n = y.nrows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: labels.len(),
            context: "labels vs embedded points",
        });
    }
    if n < FOLDS {
        return Err(Error::InvalidArgument(format!(
            "need at least {FOLDS} points for {FOLDS}-fold cross-validation, got {n}"
        )));
    }
    let parts = folds(n, seed);
    let accuracies: Vec<f64> = parts
        .par_iter()
        .enumerate()
        .map(|(f, test)| {
            let train: Vec<usize> = parts
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, idx)| idx.iter().copied())
                .collect();
            let train_y = y.select(Axis(0), &train);
            let train_labels: Vec<i64> = train.iter().map(|&i| labels[i]).collect();
            let mut correct = 0usize;
            for &i in test {
                if knn_predict(train_y.view(), &train_labels, y.row(i), k)? == labels[i] {
                    correct += 1;
                }
            }
            Ok(correct as f64 / test.len() as f64)
        })
        .collect::<Result<_>>()?;
    let mut fold_accuracies = [0.0; FOLDS];
    fold_accuracies.copy_from_slice(&accuracies);
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / FOLDS as f64;
    Ok(CvReport {
        k,
        fold_accuracies,
        mean_accuracy,
    })
}

/// Writes reports as CSV with columns `model,k,fold0..fold4,mean`.
pub fn write_reports_csv(path: impl AsRef<Path>, rows: &[(String, CvReport)]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("model,k");
    for f in 0..FOLDS {
        out.push_str(&format!(",fold{f}"));
    }
    out.push_str(",mean\n");
    for (model, r) in rows {
        out.push_str(&format!("{model},{}", r.k));
        for a in r.fold_accuracies {
            out.push_str(&format!(",{a:.6}"));
        }
        out.push_str(&format!(",{:.6}\n", r.mean_accuracy));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| Error::io(path, e))
}
