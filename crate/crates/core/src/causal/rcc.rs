use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::classifier::{Classifier, ClassifierConfig, Dataset, ProbabilisticClassifier};
use super::featurize::{featurize, FeaturizerBank};
use crate::error::{arg_err, shape_err, Error, Result};
use crate::seed;
use crate::synth::{random_pair, synth_confounded, synth_independent, ObservationalSample, PairLabel, SampleLabel};

/// Recorded in [`TrainingMeta`]: features are bare cosine means in `[-1, 1]`.
pub const FEATURE_SCALING: &str = "raw cosine means, no sqrt(2/m) factor";

/// Class indices used by the pair classifier.
const CLASS_Y_TO_X: usize = 0;
const CLASS_X_TO_Y: usize = 1;
const CLASS_CONFOUNDED: usize = 2;
const CLASS_INDEPENDENT: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RccOptions {
    /// Fresh synthetic pairs scored after training.
    pub holdout_pairs: usize,
    /// Adds confounded and independent samples as two more classes.
    pub extended_labels: bool,
}

impl Default for RccOptions {
    fn default() -> Self {
        Self { holdout_pairs: 500, extended_labels: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub num_samples: usize,
    pub points_per_sample: usize,
    pub seed: u64,
    pub classifier: ClassifierConfig,
    pub training_set_size: usize,
    pub holdout_samples: usize,
    pub holdout_accuracy: Option<f64>,
    pub training_accuracy: f64,
    pub feature_scaling: String,
    pub num_classes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RccModel {
    pub featurizer: FeaturizerBank,
    pub classifier: Classifier,
    pub meta: TrainingMeta,
}

fn class_of(label: PairLabel) -> usize {
    match label {
        PairLabel::YCausesX => CLASS_Y_TO_X,
        PairLabel::XCausesY => CLASS_X_TO_Y,
        PairLabel::Confounded => CLASS_CONFOUNDED,
        PairLabel::Independent => CLASS_INDEPENDENT,
    }
}

/// Class index of the swapped sample for each class.
fn swapped_class(c: usize) -> usize {
    match c {
        CLASS_Y_TO_X => CLASS_X_TO_Y,
        CLASS_X_TO_Y => CLASS_Y_TO_X,
        other => other,
    }
}

fn ensure_standardized(sample: &ObservationalSample) -> Result<ObservationalSample> {
    if sample.points.ncols() != 2 {
        return Err(shape_err(format!("pair sample needs 2 columns, got {}", sample.points.ncols())));
    }
    if sample.is_standardized() {
        Ok(sample.clone())
    } else {
        ObservationalSample::new(sample.points.clone(), sample.label.clone())
    }
}

impl RccModel {
    /// Symmetrized class probabilities `½(q(S)[c] + q(swap S)[swap c])`,
    /// indexed as (Y→X, X→Y[, confounded, independent]).
    pub fn label_probabilities(&self, sample: &ObservationalSample) -> Result<Vec<f64>> {
        let s = ensure_standardized(sample)?;
        let fwd = featurize(&s, &self.featurizer)?;
        let bwd = featurize(&s.swap()?, &self.featurizer)?;
        Ok(self.symmetrized(&fwd, &bwd))
    }

    fn symmetrized(&self, fwd: &[f64], bwd: &[f64]) -> Vec<f64> {
        let fwd = self.classifier.predict_proba(fwd);
        let bwd = self.classifier.predict_proba(bwd);
        (0..fwd.len()).map(|c| 0.5 * (fwd[c] + bwd[swapped_class(c)])).collect()
    }
}

fn direction_from(q: &[f64]) -> f64 {
    let (a, b) = (q[CLASS_X_TO_Y], q[CLASS_Y_TO_X]);
    if a + b <= 0.0 {
        return 0.5;
    }
    (0.5 * (1.0 + (a - b) / (a + b))).clamp(0.0, 1.0)
}

/// Probability that the first column causes the second.
///
/// With `a`, `b` the symmetrized probabilities of X→Y and Y→X, returns
/// `½(1 + (a − b)/(a + b))`; swapping the sample exchanges `a` and `b`, so
/// the two predictions sum to one.
pub fn predict_direction(model: &RccModel, sample: &ObservationalSample) -> Result<f64> {
    Ok(direction_from(&model.label_probabilities(sample)?))
}

fn check_pair(n: usize) -> Result<()> {
    if n < 2 {
        return Err(arg_err(format!("pairs need at least 2 points, got {n}")));
    }
    Ok(())
}

/// Fraction of `samples` whose direction is predicted correctly; ties at
/// one half count as errors.
fn direction_accuracy(model: &RccModel, samples: &[ObservationalSample]) -> Result<f64> {
    let mut correct = 0usize;
    for s in samples {
        let p = predict_direction(model, s)?;
        let ok = match s.label {
            SampleLabel::Pair(PairLabel::XCausesY) => p > 0.5,
            SampleLabel::Pair(PairLabel::YCausesX) => p < 0.5,
            _ => return Err(arg_err("direction accuracy needs directed pair labels")),
        };
        correct += usize::from(ok);
    }
    Ok(correct as f64 / samples.len().max(1) as f64)
}

/// Trains with [`RccOptions::default`].
pub fn train_rcc(
    num_pairs: usize,
    points_per_pair: usize,
    fb: &FeaturizerBank,
    classifier: &ClassifierConfig,
    seed: u64,
) -> Result<RccModel> {
    train_rcc_with(num_pairs, points_per_pair, fb, classifier, seed, &RccOptions::default())
}

/// Draws `num_pairs` synthetic X→Y pairs and trains on each pair and its
/// swap with flipped labels.
pub fn train_rcc_with(
    num_pairs: usize,
    points_per_pair: usize,
    fb: &FeaturizerBank,
    classifier: &ClassifierConfig,
    seed: u64,
    options: &RccOptions,
) -> Result<RccModel> {
    if num_pairs < 10 {
        return Err(arg_err(format!("training needs at least 10 pairs, got {num_pairs}")));
    }
    check_pair(points_per_pair)?;
    if fb.arity() != 2 {
        return Err(Error::UnsupportedArity("pair training needs a bivariate featurizer".into()));
    }
    let num_classes = if options.extended_labels { 4 } else { 2 };
    let train_seed = seed::derive(seed, 0);
    let mut data = Dataset::new(fb.output_dim(), num_classes);
    for i in 0..num_pairs {
        let s = random_pair(points_per_pair, seed::derive(train_seed, i as u64))?;
        let swapped = s.swap()?;
        data.push(&featurize(&s, fb)?, class_of(PairLabel::XCausesY))?;
        data.push(&featurize(&swapped, fb)?, class_of(PairLabel::YCausesX))?;
        if options.extended_labels {
            let extra_seed = seed::derive(seed::derive(seed, 4), i as u64);
            let c = synth_confounded(points_per_pair, seed::derive(extra_seed, 0))?;
            let u = synth_independent(points_per_pair, seed::derive(extra_seed, 1))?;
            data.push(&featurize(&c, fb)?, CLASS_CONFOUNDED)?;
            data.push(&featurize(&u, fb)?, CLASS_INDEPENDENT)?;
        }
    }
    let fitted = classifier
        .fit(&data, seed::derive(seed, 2))
        .map_err(|e| Error::Fit(format!("classifier on {} vectors of length {}: {e}", data.len(), data.num_features())))?;
    let mut model = RccModel {
        featurizer: fb.clone(),
        classifier: fitted,
        meta: TrainingMeta {
            num_samples: num_pairs,
            points_per_sample: points_per_pair,
            seed,
            classifier: classifier.clone(),
            training_set_size: data.len(),
            holdout_samples: options.holdout_pairs,
            holdout_accuracy: None,
            training_accuracy: 0.0,
            feature_scaling: FEATURE_SCALING.to_string(),
            num_classes,
        },
    };
    // rows 2i and 2i+1 (or 4i, 4i+1 with extended labels) are pair i and its swap
    let stride = if options.extended_labels { 4 } else { 2 };
    let correct = (0..num_pairs)
        .filter(|i| direction_from(&model.symmetrized(data.row(stride * i), data.row(stride * i + 1))) > 0.5)
        .count();
    model.meta.training_accuracy = correct as f64 / num_pairs as f64;
    drop(data);
    if options.holdout_pairs > 0 {
        let holdout = holdout_pairs(options.holdout_pairs, points_per_pair, seed)?;
        model.meta.holdout_accuracy = Some(direction_accuracy(&model, &holdout)?);
    }
    Ok(model)
}

/// Fresh synthetic pairs in random orientation, disjoint in seed from the
/// training pairs of the same `seed`.
pub(crate) fn holdout_pairs(count: usize, n: usize, seed: u64) -> Result<Vec<ObservationalSample>> {
    let base = seed::derive(seed, 1);
    let mut flip = seed::stream(seed, 3);
    (0..count)
        .map(|i| {
            let s = random_pair(n, seed::derive(base, i as u64))?;
            if flip.random_bool(0.5) {
                s.swap()
            } else {
                Ok(s)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionPoint {
    /// Fraction of cases decided so far.
    pub decision_rate: f64,
    /// Accuracy over the decided cases.
    pub accuracy: f64,
}

/// Accuracy as a function of decision rate: cases are sorted by confidence
/// `|p − ½|` in decreasing order (ties by input order) and accuracy is
/// accumulated over the top fraction. `correct[i]` says whether case `i`
/// was classified correctly; `weights` default to one.
pub fn decision_rate_curve(confidence: &[f64], correct: &[bool], weights: Option<&[f64]>) -> Result<Vec<DecisionPoint>> {
    if confidence.len() != correct.len() || weights.is_some_and(|w| w.len() != correct.len()) {
        return Err(shape_err("confidence, correctness and weights must have equal length"));
    }
    let mut order: Vec<usize> = (0..confidence.len()).collect();
    order.sort_by(|&a, &b| confidence[b].total_cmp(&confidence[a]).then(a.cmp(&b)));
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let total: f64 = (0..correct.len()).map(w).sum();
    let mut seen = 0.0;
    let mut hits = 0.0;
    Ok(order
        .into_iter()
        .map(|i| {
            seen += w(i);
            if correct[i] {
                hits += w(i);
            }
            DecisionPoint { decision_rate: seen / total, accuracy: if seen > 0.0 { hits / seen } else { 0.0 } }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::featurize::build_featurizer;

    fn small_model(extended: bool) -> RccModel {
        let fb = build_featurizer(20, &[0.1, 1.0, 10.0], 3).unwrap();
        let opts = RccOptions { holdout_pairs: 20, extended_labels: extended };
        train_rcc_with(40, 100, &fb, &ClassifierConfig::logistic(), 5, &opts).unwrap()
    }

    #[test]
    fn training_set_holds_both_orientations() {
        let m = small_model(false);
        assert_eq!(m.meta.training_set_size, 80);
        assert_eq!(m.meta.num_classes, 2);
        let ext = small_model(true);
        assert_eq!(ext.meta.training_set_size, 160);
        assert_eq!(ext.meta.num_classes, 4);
    }

    #[test]
    fn prediction_is_symmetric() {
        for model in [small_model(false), small_model(true)] {
            for i in 0..10 {
                let s = random_pair(80, 100 + i).unwrap();
                let p = predict_direction(&model, &s).unwrap();
                let q = predict_direction(&model, &s.swap().unwrap()).unwrap();
                assert!((0.0..=1.0).contains(&p));
                assert!((p + q - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unstandardized_input_is_standardized_first() {
        let model = small_model(false);
        let s = random_pair(60, 9).unwrap();
        let scaled = ObservationalSample::raw(s.points.map(|v| 3.0 * v + 1.0), s.label.clone());
        let a = predict_direction(&model, &s).unwrap();
        let b = predict_direction(&model, &scaled).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_arguments() {
        let fb = build_featurizer(4, &[1.0], 0).unwrap();
        assert!(train_rcc(5, 50, &fb, &ClassifierConfig::logistic(), 0).is_err());
        let model = small_model(false);
        let three = ObservationalSample::raw(nalgebra::DMatrix::zeros(5, 3), SampleLabel::Unlabeled);
        assert!(matches!(predict_direction(&model, &three), Err(Error::Shape(_))));
    }

    #[test]
    fn decision_curve_orders_by_confidence() {
        let curve = decision_rate_curve(&[0.1, 0.4, 0.2], &[false, true, true], None).unwrap();
        let acc: Vec<f64> = curve.iter().map(|p| p.accuracy).collect();
        assert_eq!(acc, vec![1.0, 1.0, 2.0 / 3.0]);
        assert_eq!(curve.last().unwrap().decision_rate, 1.0);
    }
}
