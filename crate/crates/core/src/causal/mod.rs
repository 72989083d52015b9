//! Cause-effect classification over kernel mean embeddings.
//!
//! Samples are featurized by [`featurize`], a classifier is trained on
//! synthetic pairs in both orientations ([`train_rcc`]), and predictions are
//! symmetrized so that `p(S) + p(swap(S)) = 1`. The trivariate variant votes
//! over context variables to score every ordered pair of a `d`-variable data
//! set, and [`reconstruct_dag`] turns those scores into an acyclic graph.

pub mod bundle;
pub mod classifier;
mod dag;
mod featurize;
mod rcc;
mod trivariate;

pub use bundle::{load_bundle, save_bundle, ModelBundle, BUNDLE_FORMAT, BUNDLE_VERSION};
pub use classifier::{Classifier, ClassifierConfig, Dataset, ForestConfig, LogisticConfig, ProbabilisticClassifier};
pub use dag::{reconstruct_dag, DagEstimate, Edge, ScoreMatrices};
pub use featurize::{
    build_featurizer, build_trivariate_featurizer, featurize, BandwidthBlock, FeaturizerBank, FeaturizerSpec,
    DEFAULT_BANDWIDTHS, DEFAULT_BLOCK_SIZE,
};
pub use rcc::{
    decision_rate_curve, predict_direction, train_rcc, train_rcc_with, DecisionPoint, RccModel, RccOptions,
    TrainingMeta, FEATURE_SCALING,
};
pub use trivariate::{score_matrices, train_trivariate, train_trivariate_with, TrivariateModel};
