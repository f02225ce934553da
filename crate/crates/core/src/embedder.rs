//! Kernel t-SNE: `y(x) = Σ_i α_i k(x_i, x)` with the coefficients `α` trained
//! by Adam on the t-SNE KL cost. Only `α` is optimized; the kernel and the
//! training Gram matrix stay fixed, so training never touches the quantum device.

use std::sync::Arc;

use ndarray::{Array2, ArrayView2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::kernels::{kernel_rows, GramMatrix, KernelData, KernelSpec};
use crate::rng;
use crate::simulator::ExecCounter;
use crate::tsne::{self, build_p, build_p_from_gram, cost_and_grad_y, Embedding, SimilarityP};

/// Training references kept by a model: states or feature rows.
pub type TrainingRefs = KernelData;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam with bias-corrected moments, shaped like the parameter matrix.
#[derive(Clone, Debug)]
pub struct AdamState {
    config: AdamConfig,
    step: u64,
    m: Array2<f64>,
    v: Array2<f64>,
}

impl AdamState {
    pub fn new(shape: (usize, usize), config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            m: Array2::zeros(shape),
            v: Array2::zeros(shape),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn update(&mut self, params: &mut Array2<f64>, grad: ArrayView2<'_, f64>) {
        debug_assert_eq!(params.dim(), self.m.dim());
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        self.step += 1;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        ndarray::Zip::from(params)
            .and(&mut self.m)
            .and(&mut self.v)
            .and(grad)
            .for_each(|p, m, v, &g| {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            });
    }
}

/// Optional early exaggeration: P is multiplied by `factor` for the first `iters` steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exaggeration {
    pub factor: f64,
    pub iters: usize,
}

impl Default for Exaggeration {
    fn default() -> Self {
        Self {
            factor: 4.0,
            iters: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub perplexity: f64,
    pub iters: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    pub dim: usize,
    /// `α` entries are drawn from `Uniform(lo, hi)`.
    pub alpha_init_range: (f64, f64),
    pub exaggeration: Option<Exaggeration>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iters: 1000,
            adam: AdamConfig::default(),
            seed: 0,
            dim: 2,
            alpha_init_range: (0.0, 1.0),
            exaggeration: None,
        }
    }
}

/// A trained kernel t-SNE map.
#[derive(Clone, Debug)]
pub struct EmbeddingModel {
    alpha: Array2<f64>,
    kernel: KernelSpec,
    training_refs: Arc<TrainingRefs>,
    perplexity: f64,
    seed: u64,
    /// Present after training; models read back from disk do not carry it.
    train_gram: Option<GramMatrix>,
}

impl EmbeddingModel {
    pub fn new(
        alpha: Array2<f64>,
        kernel: KernelSpec,
        training_refs: Arc<TrainingRefs>,
        perplexity: f64,
        seed: u64,
    ) -> Result<Self> {
        if alpha.nrows() != training_refs.len() {
            return Err(Error::DimensionMismatch {
                expected: training_refs.len(),
                actual: alpha.nrows(),
                context: "alpha rows vs training references",
            });
        }
        if alpha.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("alpha".into()));
        }
        Ok(Self {
            alpha,
            kernel,
            training_refs,
            perplexity,
            seed,
            train_gram: None,
        })
    }

    pub fn alpha(&self) -> ArrayView2<'_, f64> {
        self.alpha.view()
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn training_refs(&self) -> &TrainingRefs {
        &self.training_refs
    }

    pub fn perplexity(&self) -> f64 {
        self.perplexity
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_train(&self) -> usize {
        self.alpha.nrows()
    }

    pub fn dim(&self) -> usize {
        self.alpha.ncols()
    }

    pub fn train_gram(&self) -> Option<&GramMatrix> {
        self.train_gram.as_ref()
    }

    /// Embedding of the training set from the stored Gram matrix.
    pub fn training_embedding(&self) -> Option<Embedding> {
        self.train_gram
            .as_ref()
            .map(|g| Embedding::new(g.entries().dot(&self.alpha)).expect("finite alpha and gram"))
    }

    /// Embeds new points. The fidelity kernel costs `N` fidelity evaluations per point.
    pub fn transform(&self, new_points: &KernelData, counter: &ExecCounter) -> Result<Embedding> {
        let rows = kernel_rows(new_points, &self.training_refs, &self.kernel, counter)?;
        map_points(self.alpha.view(), rows.view())
    }
}

/// `y_m = Σ_i α_i k_m[i]` for every row `k_m` of `gram_rows`.
pub fn map_points(alpha: ArrayView2<'_, f64>, gram_rows: ArrayView2<'_, f64>) -> Result<Embedding> {
    if gram_rows.ncols() != alpha.nrows() {
        return Err(Error::DimensionMismatch {
            expected: alpha.nrows(),
            actual: gram_rows.ncols(),
            context: "kernel row length vs alpha rows",
        });
    }
    Embedding::new(gram_rows.dot(&alpha))
}

/// Chain rule through the kernel map: `∂C/∂α_l = Σ_i k(x_l, x_i) ∂C/∂y_i`.
pub fn grad_cost_wrt_alpha(
    p: ArrayView2<'_, f64>,
    alpha: ArrayView2<'_, f64>,
    train_gram: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    Ok(cost_and_grad_alpha(p, alpha, train_gram)?.1)
}

fn cost_and_grad_alpha(
    p: ArrayView2<'_, f64>,
    alpha: ArrayView2<'_, f64>,
    gram: ArrayView2<'_, f64>,
) -> Result<(f64, Array2<f64>)> {
    let n = alpha.nrows();
    if gram.dim() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: gram.nrows(),
            context: "Gram matrix vs alpha rows",
        });
    }
    let y = gram.dot(&alpha);
    let (cost, grad_y) = cost_and_grad_y(p, y.view())?;
    Ok((cost, gram.t().dot(&grad_y)))
}

/// Result of [`train`].
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: EmbeddingModel,
    /// KL cost before every Adam step plus the cost after the last one.
    pub cost_history: Vec<f64>,
    pub similarities: SimilarityP,
}

/// High-dimensional similarities for a training set: fidelity distances for the
/// quantum kernel, squared Euclidean feature distances otherwise.
pub fn training_similarities(
    refs: &TrainingRefs,
    train_gram: &GramMatrix,
    perplexity: f64,
) -> Result<SimilarityP> {
    match refs {
        KernelData::States(_) => build_p_from_gram(train_gram, perplexity),
        KernelData::Features(f) => build_p(crate::kernels::squared_distances(f.view()).view(), perplexity),
    }
}

/// Builds P, draws `α` from the seeded generator and runs Adam for
/// `config.iters` steps.
pub fn train(
    refs: Arc<TrainingRefs>,
    train_gram: GramMatrix,
    kernel: KernelSpec,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if refs.len() != train_gram.n() {
        return Err(Error::DimensionMismatch {
            expected: refs.len(),
            actual: train_gram.n(),
            context: "training references vs Gram size",
        });
    }
    let similarities = training_similarities(&refs, &train_gram, config.perplexity)?;
    let (alpha, cost_history) = fit_alpha(&similarities, &train_gram, config)?;
    let mut model = EmbeddingModel::new(alpha, kernel, refs, config.perplexity, config.seed)?;
    model.train_gram = Some(train_gram);
    Ok(TrainOutcome {
        model,
        cost_history,
        similarities,
    })
}

/// Initial `α`: row-major draws from `Uniform(lo, hi)` on the seeded stream.
pub fn init_alpha(n: usize, dim: usize, range: (f64, f64), seed: u64) -> Result<Array2<f64>> {
    let (lo, hi) = range;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!("bad alpha init range [{lo}, {hi})")));
    }
    let mut rng = rng::derive(seed, 3);
    Ok(Array2::from_shape_simple_fn((n, dim), || rng.random_range(lo..hi)))
}

/// Adam loop over `α` for fixed P and Gram matrix.
pub fn fit_alpha(
    p: &SimilarityP,
    gram: &GramMatrix,
    config: &TrainConfig,
) -> Result<(Array2<f64>, Vec<f64>)> {
    let n = gram.n();
    if p.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: p.n(),
            context: "P vs Gram size",
        });
    }
    if config.dim == 0 {
        return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
    }
    let mut alpha = init_alpha(n, config.dim, config.alpha_init_range, config.seed)?;
    let mut adam = AdamState::new(alpha.dim(), config.adam);
    let exaggerated = config.exaggeration.map(|e| (p.matrix().to_owned() * e.factor, e.iters));
    let mut history = Vec::with_capacity(config.iters + 1);

    for it in 0..config.iters {
        let (cost, grad) = match &exaggerated {
            Some((pe, until)) if it < *until => {
                let (_, g) = cost_and_grad_alpha(pe.view(), alpha.view(), gram.entries())?;
                let y = gram.entries().dot(&alpha);
                let q = tsne::build_q(y.view())?;
                (tsne::kl_cost(p.matrix(), q.q.view()), g)
            }
            _ => cost_and_grad_alpha(p.matrix(), alpha.view(), gram.entries())?,
        };
        if !cost.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("KL cost at Adam step {it} is {cost}")));
        }
        history.push(cost);
        adam.update(&mut alpha, grad.view());
    }
    let y = gram.entries().dot(&alpha);
    let q = tsne::build_q(y.view())?;
    let final_cost = tsne::kl_cost(p.matrix(), q.q.view());
    if !final_cost.is_finite() {
        return Err(Error::NonFinite(format!("final KL cost is {final_cost}")));
    }
    history.push(final_cost);
    Ok((alpha, history))
}
