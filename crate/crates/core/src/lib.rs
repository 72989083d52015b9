//! Randomized dependence measures and cause-effect classification.
//!
//! The crate is organised bottom-up:
//!
//! * [`rff`]: Gaussian random Fourier feature banks.
//! * [`copula`]: empirical cdf / copula rank transforms.
//! * [`component_analysis`]: CCA, partial CCA, and their random-feature
//!   variants (RCCA, RPCA).
//! * [`dependence`]: the randomized dependence coefficient, its conditional
//!   form, and null-distribution tools.
//! * [`embeddings`]: kernel mean embeddings, MMD and randomized MMD.
//! * [`synth`]: seeded generators of labelled cause-effect samples.
//! * [`causal`]: featurization, classifiers, direction prediction, and
//!   trivariate DAG reconstruction.
//! * [`experiments`]: desk-scale reproduction suites shared by the CLI and
//!   the acceptance tests.
//!
//! All randomness is explicit: every routine that draws numbers takes a
//! `u64` seed, and results are pure functions of their inputs and seed.

pub mod causal;
pub mod component_analysis;
pub mod copula;
pub mod dependence;
pub mod embeddings;
pub mod error;
pub mod experiments;
mod linalg;
pub mod rff;
pub mod seed;
pub mod stats;
pub mod synth;

pub use nalgebra;
pub use nalgebra::{DMatrix, DVector};

pub use component_analysis::{cca, partial_cca, rcca, rpca, CcaResult, PcaResult};
pub use copula::{copula_transform, ecdf_transform, RankedSample};
pub use dependence::{bartlett_pvalue, conditional_rdc, fit_null_beta, rdc, NullModel, RdcConfig};
pub use embeddings::{mean_embed, mmd2, rmmd2, rmmd_permutation_test, MeanEmbedding};
pub use error::{Error, Result};
pub use linalg::symmetric_spectral_norm;
pub use rff::{apply_features, approx_kernel, gaussian_kernel, median_heuristic, sample_bank, FeatureBank};
