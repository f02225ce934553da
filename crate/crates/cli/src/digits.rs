//! `qktsne digits`: split, PCA, encode, Gram, train, transform, plot.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, ValueEnum};
use serde::Serialize;

use qktsne_core::embedder::{train, Exaggeration};
use qktsne_core::io;
use qktsne_core::kernels::gram;
use qktsne_core::plotting::{scatter_svg, PlotSpec};
use qktsne_core::{
    AdamConfig, Dataset, Embedding, EmbeddingModel, ExecCounter, FeatureMap, GramMatrix, KernelData,
    KernelSpec, PcaScaler, TrainConfig,
};

use crate::meta::{cache_dir, gram_key, write_text, Counts, Metadata};
use crate::{CachePolicy, CliError, CliResult, GlobalArgs};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    #[default]
    Quantum,
    Gaussian,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct DigitsArgs {
    /// Dataset CSV: one row per sample, optional header, `label` as last column.
    #[arg(long, default_value = "data/digits.csv")]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = KernelKind::Quantum)]
    pub kernel: KernelKind,
    /// Gaussian kernel bandwidth.
    #[arg(long, default_value_t = 1.0)]
    pub bandwidth: f64,
    #[arg(long, default_value_t = 12)]
    pub components: usize,
    /// Rotation layers in the feature map, joined by CZ rings.
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 30.0)]
    pub perplexity: f64,
    /// Adam iterations.
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    /// Multiply P by 4 for the first 100 iterations.
    #[arg(long)]
    pub early_exaggeration: bool,
    /// Use only the first N samples of the dataset.
    #[arg(long)]
    pub limit: Option<usize>,
}

impl Default for DigitsArgs {
    fn default() -> Self {
        Self {
            data: PathBuf::from("data/digits.csv"),
            kernel: KernelKind::Quantum,
            bandwidth: 1.0,
            components: 12,
            layers: 2,
            train_fraction: 0.8,
            perplexity: 30.0,
            iters: 1000,
            learning_rate: 0.1,
            early_exaggeration: false,
            limit: None,
        }
    }
}

impl DigitsArgs {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            perplexity: self.perplexity,
            iters: self.iters,
            adam: AdamConfig {
                learning_rate: self.learning_rate,
                ..AdamConfig::default()
            },
            seed,
            dim: 2,
            alpha_init_range: (0.0, 1.0),
            exaggeration: self.early_exaggeration.then(Exaggeration::default),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DigitsResults {
    pub n_train: usize,
    pub n_test: usize,
    pub gram_cache: &'static str,
    pub final_kl: f64,
    pub unreachable_perplexity_rows: usize,
}

pub struct DigitsOutcome {
    pub model: EmbeddingModel,
    pub train_embedding: Embedding,
    pub train_labels: Vec<i64>,
    pub test_embedding: Embedding,
    pub test_labels: Vec<i64>,
    pub cost_history: Vec<f64>,
    /// Achieved perplexity of every training row.
    pub perplexities: Vec<f64>,
    /// Encoding plus Gram construction for the training states.
    pub train_counts: Counts,
    /// Encoding plus kernel rows for the test states.
    pub test_counts: Counts,
    pub gram_seconds: f64,
}

/// Loads a Gram matrix from the cache or computes and stores it.
pub(crate) fn cached_gram(
    global: &GlobalArgs,
    refs: &KernelData,
    kernel: &KernelSpec,
    counter: &ExecCounter,
) -> CliResult<(GramMatrix, bool)> {
    let path = cache_dir(global).join(format!("gram-{}.qkts", gram_key(&kernel.descriptor(), refs)));
    if global.cache == CachePolicy::Reuse && path.exists() {
        let g = io::read_gram(&path)?;
        if g.n() == refs.len() {
            return Ok((g, true));
        }
    }
    let g = gram(refs, kernel, counter)?;
    io::write_gram(&path, &g)?;
    Ok((g, false))
}

fn check_args(args: &DigitsArgs) -> CliResult<()> {
    if !(args.train_fraction > 0.0 && args.train_fraction < 1.0) {
        return Err(CliError::Usage("--train-fraction must lie in (0, 1)".into()));
    }
    if args.components == 0 || args.iters == 0 {
        return Err(CliError::Usage("--components and --iters must be positive".into()));
    }
    if !(args.perplexity > 0.0) {
        return Err(CliError::Usage("--perplexity must be positive".into()));
    }
    if !(args.bandwidth > 0.0) {
        return Err(CliError::Usage("--bandwidth must be positive".into()));
    }
    Ok(())
}

pub fn run_digits(global: &GlobalArgs, args: &DigitsArgs) -> CliResult<DigitsOutcome> {
    check_args(args)?;
    let started = Instant::now();
    let mut data = Dataset::read_csv(&args.data)?;
    if data.labels().is_none() {
        return Err(CliError::Data(format!(
            "{}: digits data needs a `label` column",
            args.data.display()
        )));
    }
    if let Some(limit) = args.limit {
        let keep: Vec<usize> = (0..limit.min(data.len())).collect();
        data = data.select(&keep);
    }
    let split = data.shuffle_split(args.train_fraction, global.seed)?;
    let scaler = PcaScaler::fit(&split.train, args.components)?;
    let train_angles = scaler.transform(&split.train)?;
    let test_angles = scaler.transform(&split.test)?;

    let counter = ExecCounter::new();
    let (kernel, refs, test_points) = match args.kernel {
        KernelKind::Quantum => {
            let map = FeatureMap::new(args.components, args.layers)?;
            let train_states = map.encode_rows(train_angles.view(), &counter)?;
            (
                KernelSpec::QuantumFidelity,
                KernelData::States(train_states),
                None,
            )
        }
        KernelKind::Gaussian => (
            KernelSpec::gaussian(args.bandwidth)?,
            KernelData::Features(train_angles),
            Some(KernelData::Features(test_angles.clone())),
        ),
    };

    let gram_start = Instant::now();
    let (train_gram, cache_hit) = cached_gram(global, &refs, &kernel, &counter)?;
    let gram_seconds = gram_start.elapsed().as_secs_f64();
    let train_counts = Counts::from(counter.snapshot());
    eprintln!(
        "gram: {} x {} in {:.1}s{}",
        train_gram.n(),
        train_gram.n(),
        gram_seconds,
        if cache_hit { " (cached)" } else { "" }
    );

    let config = args.train_config(global.seed);
    let outcome = train(Arc::new(refs), train_gram, kernel, &config)?;
    let train_embedding = outcome
        .model
        .training_embedding()
        .expect("freshly trained model keeps its Gram matrix");

    let test_points = match test_points {
        Some(p) => p,
        None => {
            let map = FeatureMap::new(args.components, args.layers)?;
            KernelData::States(map.encode_rows(test_angles.view(), &counter)?)
        }
    };
    let test_embedding = outcome.model.transform(&test_points, &counter)?;
    let totals = Counts::from(counter.snapshot());
    let test_counts = Counts {
        state_preparations: totals.state_preparations - train_counts.state_preparations,
        fidelity_evaluations: totals.fidelity_evaluations - train_counts.fidelity_evaluations,
    };

    let train_labels = split.train.labels().expect("checked above").to_vec();
    let test_labels = split.test.labels().expect("checked above").to_vec();
    let out = &global.out;
    io::write_scaler(out.join("scaler.txt"), &scaler)?;
    io::write_model(out.join("model.txt"), &outcome.model)?;
    io::write_embedding_csv(out.join("embedding_train.csv"), &train_embedding, Some(&train_labels))?;
    io::write_embedding_csv(out.join("embedding_test.csv"), &test_embedding, Some(&test_labels))?;
    let spec = PlotSpec {
        title: Some(format!("{} kernel, training split", kernel_name(args.kernel))),
        ..PlotSpec::default()
    };
    write_text(
        &out.join("scatter_train.svg"),
        &scatter_svg(train_embedding.view(), &train_labels, &spec)?,
    )?;
    let spec = PlotSpec {
        title: Some(format!("{} kernel, test split", kernel_name(args.kernel))),
        ..spec
    };
    write_text(
        &out.join("scatter_test.svg"),
        &scatter_svg(test_embedding.view(), &test_labels, &spec)?,
    )?;
    let mut cost = String::from("iteration,kl\n");
    for (i, c) in outcome.cost_history.iter().enumerate() {
        cost.push_str(&format!("{i},{c:.16e}\n"));
    }
    write_text(&out.join("cost.csv"), &cost)?;

    let results = DigitsResults {
        n_train: train_embedding.n(),
        n_test: test_embedding.n(),
        gram_cache: if cache_hit { "hit" } else { "miss" },
        final_kl: *outcome.cost_history.last().expect("at least one cost"),
        unreachable_perplexity_rows: outcome.similarities.unreachable_rows().len(),
    };
    let mut meta = Metadata::new("digits", global, args, results);
    meta.counters.insert("train_embedding", train_counts);
    meta.counters.insert("test_transform", test_counts);
    meta.counter_totals = totals;
    meta.write(out)?;
    eprintln!("digits: done in {:.1}s", started.elapsed().as_secs_f64());

    Ok(DigitsOutcome {
        perplexities: outcome.similarities.perplexities().to_vec(),
        cost_history: outcome.cost_history,
        model: outcome.model,
        train_embedding,
        train_labels,
        test_embedding,
        test_labels,
        train_counts,
        test_counts,
        gram_seconds,
    })
}

fn kernel_name(k: KernelKind) -> &'static str {
    match k {
        KernelKind::Quantum => "quantum",
        KernelKind::Gaussian => "gaussian",
    }
}
