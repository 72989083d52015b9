use nalgebra::DMatrix;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::classifier::{argmax, Classifier, ClassifierConfig, Dataset, ProbabilisticClassifier};
use super::dag::ScoreMatrices;
use super::featurize::FeaturizerBank;
use super::rcc::{TrainingMeta, FEATURE_SCALING};
use crate::error::{arg_err, Error, Result};
use crate::seed;
use crate::synth::{enumerate_triple_dags, synth_triple, ObservationalSample, SampleLabel};

/// `(column order, label slot, sign)` for the six training views of a triple.
const VIEWS: [([usize; 3], usize, i8); 6] = [
    ([0, 1, 2], 0, 1),
    ([1, 2, 0], 1, 1),
    ([0, 2, 1], 2, 1),
    ([1, 0, 2], 0, -1),
    ([2, 1, 0], 1, -1),
    ([2, 0, 1], 2, -1),
];

/// Class index of label `l ∈ {−1, 0, +1}`.
fn class_of(label: i8) -> usize {
    (label + 1) as usize
}

const BACKWARD: usize = 0;
const ABSENT: usize = 1;
const FORWARD: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrivariateModel {
    pub featurizer: FeaturizerBank,
    /// Three classes over the first two columns: backward, none, forward.
    pub classifier: Classifier,
    pub meta: TrainingMeta,
}

/// Feature vectors of the six views of a standardized triple.
fn view_features(fb: &FeaturizerBank, points: &DMatrix<f64>) -> Vec<(Vec<f64>, usize, i8)> {
    let marg: Vec<[Vec<f64>; 2]> = (0..3)
        .map(|j| {
            let c = points.column(j);
            [fb.marginal_embedding(c.as_slice(), 0), fb.marginal_embedding(c.as_slice(), 1)]
        })
        .collect();
    VIEWS
        .iter()
        .map(|(order, slot, sign)| {
            let view = points.select_columns(order.iter());
            (fb.embed_with_marginals(&marg[order[0]][0], &marg[order[1]][1], &view), *slot, *sign)
        })
        .collect()
}

impl TrivariateModel {
    /// Class probabilities (backward, none, forward) for the first two
    /// columns of a standardized 3-column sample, with the third as context.
    pub fn predict_labels(&self, sample: &ObservationalSample) -> Result<Vec<f64>> {
        if sample.points.ncols() != 3 {
            return Err(Error::UnsupportedArity(format!("expected 3 columns, got {}", sample.points.ncols())));
        }
        let f = super::featurize::featurize(sample, &self.featurizer)?;
        Ok(self.classifier.predict_proba(&f))
    }
}

fn random_triples(count: usize, n: usize, seed: u64) -> Result<Vec<ObservationalSample>> {
    let dags = enumerate_triple_dags();
    let mut pick = seed::stream(seed, u64::MAX);
    (0..count)
        .map(|i| {
            let dag = &dags[pick.random_range(0..dags.len())];
            synth_triple(dag, n, seed::derive(seed, i as u64))
        })
        .collect()
}

fn triple_labels(s: &ObservationalSample) -> [i8; 3] {
    match s.label {
        SampleLabel::Triple(l) => l,
        _ => unreachable!("synthetic triples are labelled"),
    }
}

/// Fraction of views whose argmax class matches the label.
fn view_accuracy(model: &TrivariateModel, samples: &[ObservationalSample]) -> f64 {
    let mut correct = 0usize;
    let mut total = 0usize;
    for s in samples {
        let labels = triple_labels(s);
        for (f, slot, sign) in view_features(&model.featurizer, &s.points) {
            correct += usize::from(argmax(&model.classifier.predict_proba(&f)) == class_of(sign * labels[slot]));
            total += 1;
        }
    }
    correct as f64 / total.max(1) as f64
}

/// Trains with 100 held-out triples.
pub fn train_trivariate(
    num_triples: usize,
    points_per_triple: usize,
    fb3: &FeaturizerBank,
    classifier: &ClassifierConfig,
    seed: u64,
) -> Result<TrivariateModel> {
    train_trivariate_with(num_triples, points_per_triple, fb3, classifier, seed, 100)
}

/// Draws triples from the eight canonical DAGs uniformly and trains a
/// 3-class classifier on their six views.
pub fn train_trivariate_with(
    num_triples: usize,
    points_per_triple: usize,
    fb3: &FeaturizerBank,
    classifier: &ClassifierConfig,
    seed: u64,
    holdout_triples: usize,
) -> Result<TrivariateModel> {
    if num_triples < 10 {
        return Err(arg_err(format!("training needs at least 10 triples, got {num_triples}")));
    }
    if points_per_triple < 2 {
        return Err(arg_err("triples need at least 2 points"));
    }
    if fb3.arity() != 3 {
        return Err(Error::UnsupportedArity("trivariate training needs a 3-column featurizer".into()));
    }
    let train = random_triples(num_triples, points_per_triple, seed::derive(seed, 0))?;
    let mut data = Dataset::new(fb3.output_dim(), 3);
    for s in &train {
        let labels = triple_labels(s);
        for (f, slot, sign) in view_features(fb3, &s.points) {
            data.push(&f, class_of(sign * labels[slot]))?;
        }
    }
    let fitted = classifier
        .fit(&data, seed::derive(seed, 2))
        .map_err(|e| Error::Fit(format!("classifier on {} vectors of length {}: {e}", data.len(), data.num_features())))?;
    let mut model = TrivariateModel {
        featurizer: fb3.clone(),
        classifier: fitted,
        meta: TrainingMeta {
            num_samples: num_triples,
            points_per_sample: points_per_triple,
            seed,
            classifier: classifier.clone(),
            training_set_size: data.len(),
            holdout_samples: holdout_triples,
            holdout_accuracy: None,
            training_accuracy: 0.0,
            feature_scaling: FEATURE_SCALING.to_string(),
            num_classes: 3,
        },
    };
    drop(data);
    model.meta.training_accuracy = view_accuracy(&model, &train);
    if holdout_triples > 0 {
        let holdout = random_triples(holdout_triples, points_per_triple, seed::derive(seed, 1))?;
        model.meta.holdout_accuracy = Some(view_accuracy(&model, &holdout));
    }
    Ok(model)
}

/// Forward, independent and backward scores for every pair of columns,
/// averaged over all context columns. Each ordered pair is scored from both
/// orientations, so `forward(i, j) == backward(j, i)` and the three scores
/// of an off-diagonal entry sum to one. Diagonals are zero.
pub fn score_matrices(model: &TrivariateModel, sample: &ObservationalSample) -> Result<ScoreMatrices> {
    let d = sample.points.ncols();
    if d < 3 {
        return Err(Error::UnsupportedArity(format!("scoring needs at least 3 variables, got {d}")));
    }
    if !sample.is_standardized() {
        return Err(Error::Contract("sample must be standardized before scoring".into()));
    }
    let fb = &model.featurizer;
    let marg: Vec<[Vec<f64>; 2]> = (0..d)
        .map(|j| {
            let c = sample.points.column(j);
            [fb.marginal_embedding(c.as_slice(), 0), fb.marginal_embedding(c.as_slice(), 1)]
        })
        .collect();
    let proba = |i: usize, j: usize, k: usize| {
        let view = sample.points.select_columns([i, j, k].iter());
        model.classifier.predict_proba(&fb.embed_with_marginals(&marg[i][0], &marg[j][1], &view))
    };
    let mut forward = DMatrix::zeros(d, d);
    let mut independent = DMatrix::zeros(d, d);
    let mut backward = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i + 1..d {
            let (mut f, mut z, mut b) = (0.0, 0.0, 0.0);
            let contexts = (0..d).filter(|k| *k != i && *k != j);
            let count = (d - 2) as f64;
            for k in contexts {
                let p = proba(i, j, k);
                let q = proba(j, i, k);
                f += 0.5 * (p[FORWARD] + q[BACKWARD]);
                z += 0.5 * (p[ABSENT] + q[ABSENT]);
                b += 0.5 * (p[BACKWARD] + q[FORWARD]);
            }
            let (f, z, b) = (f / count, z / count, b / count);
            forward[(i, j)] = f;
            backward[(j, i)] = f;
            backward[(i, j)] = b;
            forward[(j, i)] = b;
            independent[(i, j)] = z;
            independent[(j, i)] = z;
        }
    }
    ScoreMatrices::new(forward, independent, backward)
}
