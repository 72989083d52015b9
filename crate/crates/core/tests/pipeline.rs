//! Statistical checks of the trained cause-effect pipeline on moderately
//! sized models shared across tests.

use std::sync::OnceLock;

use randep::causal::*;
use randep::synth::{enumerate_triple_dags, random_pair, synth_triple, ObservationalSample, SampleLabel};
use randep::{seed, DMatrix};

fn pair_model() -> &'static RccModel {
    static MODEL: OnceLock<RccModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let fb = build_featurizer(100, &DEFAULT_BANDWIDTHS, 1).unwrap();
        let options = RccOptions { holdout_pairs: 300, extended_labels: false };
        train_rcc_with(400, 300, &fb, &ClassifierConfig::forest(300), 7, &options).unwrap()
    })
}

fn triple_model() -> &'static TrivariateModel {
    static MODEL: OnceLock<TrivariateModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let fb3 = build_trivariate_featurizer(100, &DEFAULT_BANDWIDTHS, 2).unwrap();
        train_trivariate_with(300, 500, &fb3, &ClassifierConfig::forest(200), 8, 50).unwrap()
    })
}

#[test]
fn pair_model_is_accurate_enough_for_the_checks() {
    let meta = &pair_model().meta;
    assert_eq!(meta.training_set_size, 800);
    assert!(meta.holdout_accuracy.unwrap() >= 0.7, "{:?}", meta.holdout_accuracy);
}

#[test]
fn training_accuracy_is_at_least_holdout_accuracy() {
    let meta = &pair_model().meta;
    assert!(meta.training_accuracy >= meta.holdout_accuracy.unwrap(), "{meta:?}");
    let meta = &triple_model().meta;
    assert!(meta.training_accuracy >= meta.holdout_accuracy.unwrap(), "{meta:?}");
}

#[test]
#[ignore = "models trained on the noise-dominated synthetic pairs orient noise-free x -> x^2 backward"]
fn noise_free_quadratic_points_forward() {
    let model = pair_model();
    let mut forward = 0;
    for s in 0..50u64 {
        // Causes come from the generator's mixture distribution.
        let cause = random_pair(1000, seed::derive(100, s)).unwrap().points.column(0).into_owned();
        let points = DMatrix::from_fn(1000, 2, |i, j| if j == 0 { cause[i] } else { cause[i] * cause[i] });
        let sample = ObservationalSample::new(points, SampleLabel::Unlabeled).unwrap();
        forward += (predict_direction(model, &sample).unwrap() > 0.5) as usize;
    }
    assert!(forward >= 40, "{forward} of 50 quadratic samples oriented x -> y");
}

#[test]
fn predictions_are_symmetric_probabilities() {
    let model = pair_model();
    for s in 0..20u64 {
        let sample = random_pair(300, seed::derive(200, s)).unwrap();
        let p = predict_direction(model, &sample).unwrap();
        let q = predict_direction(model, &sample.swap().unwrap()).unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert!((p + q - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn empty_dag_views_favour_no_edge() {
    let model = triple_model();
    let empty = enumerate_triple_dags().into_iter().find(|d| d.edges.is_empty()).unwrap();
    let mut mean = [0.0; 3];
    for s in 0..30u64 {
        let sample = synth_triple(&empty, 500, seed::derive(300, s)).unwrap();
        for (m, p) in mean.iter_mut().zip(model.predict_labels(&sample).unwrap()) {
            *m += p / 30.0;
        }
    }
    // Class order is (backward, none, forward).
    assert!(mean[1] > mean[0] && mean[1] > mean[2], "{mean:?}");
}

#[test]
fn chain_scores_orient_the_second_edge() {
    let model = triple_model();
    let chain = enumerate_triple_dags().into_iter().find(|d| d.edges == vec![(0, 1), (1, 2)]).unwrap();
    let mut hits = 0;
    for s in 0..20u64 {
        let sample = synth_triple(&chain, 2000, seed::derive(400, s)).unwrap();
        let sc = score_matrices(model, &sample).unwrap();
        let f = sc.forward[(1, 2)];
        hits += (f > sc.independent[(1, 2)] && f > sc.backward[(1, 2)]) as usize;
    }
    assert!(hits >= 14, "forward(1, 2) won in {hits} of 20 chains");
}

#[test]
fn score_matrices_are_probabilities_with_mirrored_directions() {
    let model = triple_model();
    let dag = &enumerate_triple_dags()[5];
    let sample = synth_triple(dag, 500, 9).unwrap();
    let sc = score_matrices(model, &sample).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                let total = sc.forward[(i, j)] + sc.independent[(i, j)] + sc.backward[(i, j)];
                assert!((total - 1.0).abs() < 1e-12);
                assert_eq!(sc.forward[(i, j)].to_bits(), sc.backward[(j, i)].to_bits());
            }
        }
    }
    assert!(reconstruct_dag(&sc).is_acyclic());
}

#[test]
fn training_is_deterministic() {
    let fb = build_featurizer(20, &DEFAULT_BANDWIDTHS, 3).unwrap();
    let options = RccOptions { holdout_pairs: 20, extended_labels: false };
    let a = train_rcc_with(30, 100, &fb, &ClassifierConfig::forest(20), 5, &options).unwrap();
    let b = train_rcc_with(30, 100, &fb, &ClassifierConfig::forest(20), 5, &options).unwrap();
    assert_eq!(a, b);
}

#[test]
fn bundles_round_trip_trained_models() {
    let bundle = ModelBundle::Pair(pair_model().clone());
    let back = ModelBundle::from_json(&bundle.to_json().unwrap()).unwrap();
    assert_eq!(back, bundle);
}
