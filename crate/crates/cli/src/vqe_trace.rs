//! `qktsne vqe-trace`: eigensolver trajectories of a transverse-field Ising
//! chain, embedded together with the exact ground and first excited states.

use std::sync::Arc;
use std::time::Instant;

use clap::Args;
use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use qktsne_core::embedder::train;
use qktsne_core::io;
use qktsne_core::plotting::{trajectory_svg, PlotSpec};
use qktsne_core::vqe::{exact_diagonalize, run_vqe, tfim_hamiltonian, BfgsOptions};
use qktsne_core::{
    AdamConfig, Ansatz, Embedding, ExecCounter, KernelData, KernelSpec, StateVector, TrainConfig,
    Trajectory,
};

use crate::digits::cached_gram;
use crate::meta::{cache_dir, hash_json, write_text, Counts, Metadata};
use crate::plot::{series_table, split_series, REFERENCE_PREFIX};
use crate::{CachePolicy, CliError, CliResult, GlobalArgs};

#[derive(Clone, Debug, Args, Serialize)]
pub struct VqeTraceArgs {
    #[arg(long, default_value_t = 8)]
    pub qubits: usize,
    /// ZZ coupling.
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub coupling: f64,
    /// Transverse field.
    #[arg(long, default_value_t = -0.75, allow_hyphen_values = true)]
    pub field: f64,
    /// Entangling blocks in the ansatz.
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
    /// One trajectory per seed.
    #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1, 2])]
    pub trajectory_seeds: Vec<u64>,
    /// Accepted BFGS steps per trajectory.
    #[arg(long, default_value_t = 100)]
    pub bfgs_iters: usize,
    #[arg(long, default_value_t = 10.0)]
    pub perplexity: f64,
    /// Adam iterations for the embedding.
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
}

impl Default for VqeTraceArgs {
    fn default() -> Self {
        Self {
            qubits: 8,
            coupling: -1.0,
            field: -0.75,
            depth: 6,
            trajectory_seeds: vec![0, 1, 2],
            bfgs_iters: 100,
            perplexity: 10.0,
            iters: 1000,
            learning_rate: 0.1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectorySummary {
    pub label: String,
    pub seed: u64,
    pub iterates: usize,
    pub status: String,
    pub final_energy: f64,
    pub min_energy: f64,
    pub final_ground_fidelity: f64,
}

/// Iteration ranges where two trajectories stay within fidelity 0.9 of each
/// other, reported for pairs whose final states agree above 0.99.
#[derive(Clone, Debug, Serialize)]
pub struct PairOverlap {
    pub a: String,
    pub b: String,
    pub final_fidelity: f64,
    pub ranges_above_0_9: Vec<(usize, usize)>,
}

#[derive(Debug, Serialize)]
pub struct VqeResults {
    pub ground_energy: f64,
    pub first_excited_energy: f64,
    pub corpus_size: usize,
    pub trajectory_cache: &'static str,
    pub gram_cache: &'static str,
    pub trajectories: Vec<TrajectorySummary>,
    pub overlaps: Vec<PairOverlap>,
    pub final_kl: f64,
}

pub struct VqeOutcome {
    pub ground_energy: f64,
    pub first_excited_energy: f64,
    pub ground_state: StateVector,
    pub trajectories: Vec<Trajectory>,
    pub summaries: Vec<TrajectorySummary>,
    pub embedding: Embedding,
    pub corpus_size: usize,
    pub trajectory_cache_hit: bool,
    pub optimize_seconds: f64,
}

fn fidelity(a: &StateVector, b: &StateVector) -> CliResult<f64> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

fn ranges(flags: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &f) in flags.iter().chain(std::iter::once(&false)).enumerate() {
        match (f, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    out
}

fn overlaps(trajectories: &[Trajectory]) -> CliResult<Vec<PairOverlap>> {
    let mut out = Vec::new();
    for (i, a) in trajectories.iter().enumerate() {
        for b in &trajectories[i + 1..] {
            let (Some(fa), Some(fb)) = (a.final_state(), b.final_state()) else {
                continue;
            };
            let final_fidelity = fidelity(fa, fb)?;
            if final_fidelity <= 0.99 {
                continue;
            }
            let flags = a
                .iterates
                .iter()
                .zip(&b.iterates)
                .map(|(x, y)| fidelity(&x.state, &y.state).map(|f| f > 0.9))
                .collect::<CliResult<Vec<bool>>>()?;
            out.push(PairOverlap {
                a: a.label.clone(),
                b: b.label.clone(),
                final_fidelity,
                ranges_above_0_9: ranges(&flags),
            });
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct TrajectoryKey<'a> {
    format: &'static str,
    qubits: usize,
    coupling: f64,
    field: f64,
    depth: usize,
    seeds: &'a [u64],
    bfgs_iters: usize,
}

pub fn run_vqe_trace(global: &GlobalArgs, args: &VqeTraceArgs) -> CliResult<VqeOutcome> {
    if args.trajectory_seeds.is_empty() {
        return Err(CliError::Usage("--trajectory-seeds needs at least one seed".into()));
    }
    if args.qubits < 2 || args.depth == 0 || args.bfgs_iters == 0 || args.iters == 0 {
        return Err(CliError::Usage(
            "--qubits must be at least 2 and --depth, --bfgs-iters, --iters positive".into(),
        ));
    }
    let started = Instant::now();
    let hamiltonian = tfim_hamiltonian(args.qubits, args.coupling, args.field)?;
    let ansatz = Ansatz::new(args.qubits, args.depth)?;
    let spectrum = exact_diagonalize(&hamiltonian)?;
    let (e0, e1) = (spectrum.eigenvalues[0], spectrum.eigenvalues[1]);
    let ground = spectrum.eigenvectors[0].clone();
    let excited = spectrum.eigenvectors[1].clone();

    let counter = ExecCounter::new();
    let key = hash_json(&TrajectoryKey {
        format: io::TRAJECTORY_HEADER,
        qubits: args.qubits,
        coupling: args.coupling,
        field: args.field,
        depth: args.depth,
        seeds: &args.trajectory_seeds,
        bfgs_iters: args.bfgs_iters,
    });
    let cache_path = cache_dir(global).join(format!("traj-{key}.csv"));
    let opt_start = Instant::now();
    let cached = if global.cache == CachePolicy::Reuse && cache_path.exists() {
        let t = io::read_trajectories(&cache_path)?;
        (t.len() == args.trajectory_seeds.len()).then_some(t)
    } else {
        None
    };
    let trajectory_cache_hit = cached.is_some();
    let trajectories = match cached {
        Some(t) => t,
        None => {
            let options = BfgsOptions {
                max_iters: args.bfgs_iters,
                ..BfgsOptions::default()
            };
            let t = args
                .trajectory_seeds
                .par_iter()
                .enumerate()
                .map(|(i, &seed)| {
                    let theta0 = ansatz.random_parameters(seed);
                    run_vqe(format!("trajectory{i}"), &hamiltonian, &ansatz, &theta0, &options, &counter)
                })
                .collect::<qktsne_core::Result<Vec<_>>>()?;
            io::write_trajectories(&cache_path, &t)?;
            t
        }
    };
    let optimize_seconds = opt_start.elapsed().as_secs_f64();
    let optimize_counts = Counts::from(counter.snapshot());
    eprintln!(
        "vqe: {} trajectories in {:.1}s{}",
        trajectories.len(),
        optimize_seconds,
        if trajectory_cache_hit { " (cached)" } else { "" }
    );
    io::write_trajectories(global.out.join("trajectories.csv"), &trajectories)?;

    let mut summaries = Vec::with_capacity(trajectories.len());
    for (t, &seed) in trajectories.iter().zip(&args.trajectory_seeds) {
        let last = t
            .iterates
            .last()
            .ok_or_else(|| CliError::Data(format!("{} has no iterates", t.label)))?;
        summaries.push(TrajectorySummary {
            label: t.label.clone(),
            seed,
            iterates: t.iterates.len(),
            status: t.status.map_or("cached", |s| s.as_str()).to_string(),
            final_energy: last.energy,
            min_energy: t.energies().into_iter().fold(f64::INFINITY, f64::min),
            final_ground_fidelity: fidelity(&last.state, &ground)?,
        });
    }

    let mut states = Vec::new();
    let mut names = Vec::new();
    let mut rows = Vec::new();
    for t in &trajectories {
        for it in &t.iterates {
            states.push(it.state.clone());
            names.push(t.label.clone());
            rows.push((it.iteration.to_string(), it.energy));
        }
    }
    for (name, state, energy) in [("ground", &ground, e0), ("excited", &excited, e1)] {
        states.push(state.clone());
        names.push(format!("{REFERENCE_PREFIX}{name}"));
        rows.push((String::new(), energy));
    }
    let corpus_size = states.len();
    let refs = KernelData::States(states);
    let kernel = KernelSpec::QuantumFidelity;
    let before_gram = counter.snapshot();
    let (gram, gram_hit) = cached_gram(global, &refs, &kernel, &counter)?;
    let gram_counts = Counts::from(counter.snapshot() - before_gram);

    let config = TrainConfig {
        perplexity: args.perplexity,
        iters: args.iters,
        adam: AdamConfig {
            learning_rate: args.learning_rate,
            ..AdamConfig::default()
        },
        seed: global.seed,
        dim: 2,
        alpha_init_range: (0.0, 0.1),
        exaggeration: None,
    };
    let outcome = train(Arc::new(refs), gram, kernel, &config)?;
    let embedding = outcome
        .model
        .training_embedding()
        .expect("freshly trained model keeps its Gram matrix");

    let out = &global.out;
    io::write_model(out.join("model.txt"), &outcome.model)?;
    let mut table = String::from("id,series,iteration,energy,y0,y1\n");
    for (i, ((name, (iteration, energy)), y)) in names
        .iter()
        .zip(&rows)
        .zip(embedding.view().rows())
        .enumerate()
    {
        table.push_str(&format!(
            "{i},{name},{iteration},{energy:.16e},{:.16e},{:.16e}\n",
            y[0], y[1]
        ));
    }
    write_text(&out.join("vqe_embedding.csv"), &table)?;
    let y: Array2<f64> = embedding.view().to_owned();
    write_text(&out.join("trajectory_points.csv"), &series_table(&y, &names)?)?;
    let points: Vec<(String, [f64; 2])> = names
        .iter()
        .zip(y.rows())
        .map(|(n, r)| (n.clone(), [r[0], r[1]]))
        .collect();
    let (series, markers) = split_series(&points);
    let spec = PlotSpec {
        title: Some(format!(
            "VQE trajectories, TFIM n={} J={} h={}",
            args.qubits, args.coupling, args.field
        )),
        ..PlotSpec::default()
    };
    write_text(&out.join("trajectory.svg"), &trajectory_svg(&series, &markers, &spec)?)?;

    let results = VqeResults {
        ground_energy: e0,
        first_excited_energy: e1,
        corpus_size,
        trajectory_cache: if trajectory_cache_hit { "hit" } else { "miss" },
        gram_cache: if gram_hit { "hit" } else { "miss" },
        trajectories: summaries.clone(),
        overlaps: overlaps(&trajectories)?,
        final_kl: *outcome.cost_history.last().expect("at least one cost"),
    };
    let mut meta = Metadata::new("vqe-trace", global, args, results);
    meta.counters.insert("optimization", optimize_counts);
    meta.counters.insert("embedding_gram", gram_counts);
    meta.counter_totals = Counts::from(counter.snapshot());
    meta.write(out)?;
    for s in &summaries {
        eprintln!(
            "{}: E = {:.6} (E0 = {:.6}), ground fidelity {:.4}",
            s.label, s.final_energy, e0, s.final_ground_fidelity
        );
    }
    eprintln!("vqe-trace: done in {:.1}s", started.elapsed().as_secs_f64());

    Ok(VqeOutcome {
        ground_energy: e0,
        first_excited_energy: e1,
        ground_state: ground,
        trajectories,
        summaries,
        embedding,
        corpus_size,
        trajectory_cache_hit,
        optimize_seconds,
    })
}
