//! # gramentropy
//!
//! Entropy-like functionals on kernel Gram matrices and a supervised metric
//! learner built on them.
//!
//! The central quantity is the matrix-based Renyi entropy
//! `S_alpha(A) = (1/(1-alpha)) log2 tr(A^alpha)` of a unit-trace positive
//! semidefinite matrix, an entropy computed directly from data through a
//! kernel rather than through a density estimate. Hadamard products supply
//! joint and conditional analogues, infinitely divisible kernels make the
//! geometric averages of Gram matrices well behaved, and minimizing the
//! conditional entropy of class labels given a linear projection yields a
//! Mahalanobis metric learner (CEML).
//!
//! Modules:
//!
//! - [`spectra`]: symmetric eigendecomposition, primary matrix functions,
//!   Hadamard/Kronecker products, PSD and centered-negative-definiteness
//!   checks, majorization.
//! - [`entropy`]: Renyi entropy, joint/conditional entropy, spectral
//!   gradients, the second-order trace identity.
//! - [`idkernels`]: Gaussian Gram construction, infinite-divisibility
//!   diagnostics, diagonal normalization, Hilbertian embeddings.
//! - [`ceml`]: the conditional-entropy metric learning objective, its exact
//!   gradient, and projected gradient descent training.
//! - [`eval`]: kNN, stratified cross-validation, baselines, the synthetic
//!   generator and the entropy-order study.
//! - [`io`]: headerless CSV for matrices and labeled datasets.

pub mod ceml;
pub mod entropy;
mod error;
pub mod eval;
pub mod idkernels;
pub mod io;
pub mod spectra;

pub use ceml::{Dataset, MetricModel, TrainConfig, TrainReport};
pub use entropy::{EntropyOrder, EntropyValue};
pub use error::{Error, Result};
pub use eval::{AlphaStudyRow, CVResult, SyntheticSpec};
pub use idkernels::{DistanceMatrix, KernelConfig};
pub use spectra::{DensityLikeMatrix, EigenSystem, SymmetricMatrix};
