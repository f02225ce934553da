//! `qktsne knn`: 5-fold k-NN cross-validation of an embedding.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use qktsne_core::io::read_embedding_csv;
use qktsne_core::knn::{cross_validate, write_reports_csv};
use qktsne_core::CvReport;

use crate::meta::Metadata;
use crate::{CliError, CliResult, GlobalArgs};

#[derive(Clone, Debug, Args, Serialize)]
pub struct KnnArgs {
    /// Embedding CSV with a `label` column.
    #[arg(long)]
    pub embedding: PathBuf,
    /// Neighbour counts to evaluate.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 10, 20])]
    pub k: Vec<usize>,
    /// Row name in the report; defaults to the embedding file stem.
    #[arg(long)]
    pub name: Option<String>,
}

pub fn run_knn(global: &GlobalArgs, args: &KnnArgs) -> CliResult<Vec<CvReport>> {
    if args.k.is_empty() || args.k.contains(&0) {
        return Err(CliError::Usage("--k needs positive neighbour counts".into()));
    }
    let table = read_embedding_csv(&args.embedding)?;
    let labels = table.labels.ok_or_else(|| {
        CliError::Data(format!("{}: no `label` column", args.embedding.display()))
    })?;
    let name = args.name.clone().unwrap_or_else(|| {
        args.embedding
            .file_stem()
            .map_or_else(|| "embedding".into(), |s| s.to_string_lossy().into_owned())
    });
    let mut reports = Vec::with_capacity(args.k.len());
    for &k in &args.k {
        let r = cross_validate(table.embedding.view(), Some(&labels), k, global.seed)?;
        eprintln!("{name} k={k}: mean accuracy {:.4}", r.mean_accuracy);
        reports.push(r);
    }
    let rows: Vec<(String, CvReport)> = reports.iter().map(|r| (name.clone(), r.clone())).collect();
    write_reports_csv(global.out.join("knn.csv"), &rows)?;
    let results: Vec<(usize, f64)> = reports.iter().map(|r| (r.k, r.mean_accuracy)).collect();
    Metadata::new("knn", global, args, results).write(&global.out)?;
    Ok(reports)
}
