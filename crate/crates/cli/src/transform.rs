//! `qktsne transform`: embed new samples with a saved model and scaler.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use qktsne_core::io;
use qktsne_core::{Dataset, ExecCounter, FeatureMap, KernelData, KernelSpec};

use crate::meta::{Counts, Metadata};
use crate::{CliResult, GlobalArgs};

#[derive(Clone, Debug, Args, Serialize)]
pub struct TransformArgs {
    /// Model file written by `digits`.
    #[arg(long)]
    pub model: PathBuf,
    /// Scaler file written alongside the model.
    #[arg(long)]
    pub scaler: PathBuf,
    /// Raw samples in the training CSV layout.
    #[arg(long)]
    pub input: PathBuf,
    /// Rotation layers in the feature map; must match training.
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
}

pub fn run_transform(global: &GlobalArgs, args: &TransformArgs) -> CliResult<()> {
    let model = io::read_model(&args.model)?;
    let scaler = io::read_scaler(&args.scaler)?;
    let data = Dataset::read_csv(&args.input)?;
    let angles = scaler.transform(&data)?;
    let counter = ExecCounter::new();
    let points = match model.kernel() {
        KernelSpec::QuantumFidelity => {
            let map = FeatureMap::new(scaler.output_dim(), args.layers)?;
            KernelData::States(map.encode_rows(angles.view(), &counter)?)
        }
        KernelSpec::Gaussian { .. } => KernelData::Features(angles),
    };
    let y = model.transform(&points, &counter)?;
    io::write_embedding_csv(global.out.join("transformed.csv"), &y, data.labels())?;
    let mut meta = Metadata::new("transform", global, args, y.n());
    let totals = Counts::from(counter.snapshot());
    meta.counters.insert("transform", totals);
    meta.counter_totals = totals;
    meta.write(&global.out)?;
    Ok(())
}
