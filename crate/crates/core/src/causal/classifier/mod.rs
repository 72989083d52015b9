//! Probabilistic classifiers over dense feature vectors.
//!
//! Two implementations satisfy the same fit / predict-probability contract: a
//! random forest of Gini CART trees, and an L2-regularized multinomial
//! logistic regression used for fast runs.

mod forest;
mod logistic;

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};

pub use forest::{ForestConfig, MaxFeatures, RandomForest};
pub use logistic::{LogisticConfig, LogisticModel};

/// Row-major design matrix with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    num_features: usize,
    labels: Vec<usize>,
    num_classes: usize,
}

impl Dataset {
    pub fn new(num_features: usize, num_classes: usize) -> Self {
        Self { features: Vec::new(), num_features, labels: Vec::new(), num_classes }
    }

    pub fn push(&mut self, row: &[f64], label: usize) -> Result<()> {
        if row.len() != self.num_features {
            return Err(arg_err(format!("row has {} features, dataset has {}", row.len(), self.num_features)));
        }
        if label >= self.num_classes {
            return Err(arg_err(format!("label {label} out of range for {} classes", self.num_classes)));
        }
        self.features.extend_from_slice(row);
        self.labels.push(label);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.num_features..(i + 1) * self.num_features]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Feature-major copy: entry `f * len + i` is feature `f` of row `i`.
    pub(crate) fn transposed(&self) -> Vec<f64> {
        let n = self.len();
        let p = self.num_features;
        let mut out = vec![0.0; n * p];
        for i in 0..n {
            let row = self.row(i);
            for f in 0..p {
                out[f * n + i] = row[f];
            }
        }
        out
    }
}

/// Any fitted model that returns a class-probability vector.
pub trait ProbabilisticClassifier {
    fn num_classes(&self) -> usize;

    /// Probabilities summing to one, indexed by class.
    fn predict_proba(&self, features: &[f64]) -> Vec<f64>;

    fn predict(&self, features: &[f64]) -> usize {
        argmax(&self.predict_proba(features))
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierConfig {
    Forest(ForestConfig),
    Logistic(LogisticConfig),
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig::Forest(ForestConfig::default())
    }
}

impl ClassifierConfig {
    pub fn logistic() -> Self {
        ClassifierConfig::Logistic(LogisticConfig::default())
    }

    pub fn forest(num_trees: usize) -> Self {
        ClassifierConfig::Forest(ForestConfig { num_trees, ..ForestConfig::default() })
    }

    pub fn fit(&self, data: &Dataset, seed: u64) -> Result<Classifier> {
        match self {
            ClassifierConfig::Forest(c) => RandomForest::fit(c, data, seed).map(Classifier::Forest),
            ClassifierConfig::Logistic(c) => LogisticModel::fit(c, data).map(Classifier::Logistic),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    Forest(RandomForest),
    Logistic(LogisticModel),
}

impl ProbabilisticClassifier for Classifier {
    fn num_classes(&self) -> usize {
        match self {
            Classifier::Forest(m) => m.num_classes(),
            Classifier::Logistic(m) => m.num_classes(),
        }
    }

    fn predict_proba(&self, features: &[f64]) -> Vec<f64> {
        match self {
            Classifier::Forest(m) => m.predict_proba(features),
            Classifier::Logistic(m) => m.predict_proba(features),
        }
    }
}
