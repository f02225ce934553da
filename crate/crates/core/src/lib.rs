//! Quantum-kernel t-SNE.
//!
//! Quantum states (either produced by a data-encoding circuit or by some other
//! circuit, e.g. a VQE ansatz) are compared through the fidelity kernel
//! `k(ψ_i, ψ) = |⟨ψ_i|ψ⟩|²`. A kernel t-SNE map `y(ψ) = Σ_i α_i k(ψ_i, ψ)` is then
//! trained on a classical computer by minimizing the t-SNE Kullback-Leibler cost
//! over the coefficients `α`, which also embeds unseen states without any
//! further optimization.
//!
//! Module overview:
//!
//! * [`simulator`]: dense statevector simulator with execution accounting.
//! * [`encoding`]: PCA preprocessing and the data re-uploading feature map.
//! * [`kernels`]: fidelity and Gaussian Gram matrices, kernel rows, Gram cache files.
//! * [`tsne`]: high/low dimensional similarities, KL cost and its gradient.
//! * [`embedder`]: kernel t-SNE training with Adam and out-of-sample transform.
//! * [`knn`]: k-NN cross-validation of embeddings.
//! * [`vqe`]: TFIM Hamiltonian, hardware-efficient ansatz, BFGS and exact diagonalization.
//! * [`plotting`]: dependency-free SVG output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod embedder;
pub mod encoding;
pub mod error;
pub mod io;
pub mod kernels;
pub mod knn;
pub mod plotting;
pub mod rng;
pub mod simulator;
pub mod tsne;
pub mod vqe;

pub use embedder::{AdamConfig, EmbeddingModel, TrainConfig, TrainOutcome, TrainingRefs};
pub use encoding::{Dataset, FeatureMap, PcaScaler};
pub use error::{Error, Result};
pub use kernels::{GramMatrix, KernelData, KernelSpec};
pub use knn::CvReport;
pub use simulator::{Circuit, ExecCounter, ExecCounts, Gate, GateKind, Pauli, PauliTerm, StateVector};
pub use tsne::{Embedding, SimilarityP};
pub use vqe::{Ansatz, Hamiltonian, Trajectory};
