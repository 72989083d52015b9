use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use randep::causal::{
    build_featurizer, build_trivariate_featurizer, decision_rate_curve, load_bundle, predict_direction,
    reconstruct_dag, save_bundle, score_matrices, train_rcc_with, train_trivariate_with, ClassifierConfig,
    ModelBundle, RccModel, RccOptions, TrainingMeta, TrivariateModel, DEFAULT_BANDWIDTHS, DEFAULT_BLOCK_SIZE,
};
use randep::synth::{ObservationalSample, PairLabel, SampleLabel};
use serde::Deserialize;
use serde_json::json;

use crate::fail::{usage, CmdResult, Failure};
use crate::input::{read_pair_file, read_table};
use crate::{ClassifierKind, DagArgs, EvalDirArgs, PredictArgs, TrainArgs};

/// Keys accepted in a `--config` TOML file; flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainFile {
    pairs: Option<usize>,
    points: Option<usize>,
    classifier: Option<ClassifierKind>,
    trees: Option<usize>,
    block_size: Option<usize>,
    bandwidths: Option<Vec<f64>>,
    holdout: Option<usize>,
    extended_labels: Option<bool>,
    trivariate: Option<bool>,
}

fn load_train_file(path: Option<&Path>) -> Result<TrainFile, Failure> {
    let Some(path) = path else { return Ok(TrainFile::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn meta_lines(out: &mut String, meta: &TrainingMeta) {
    let _ = writeln!(out, "training_set {}", meta.training_set_size);
    let _ = writeln!(out, "training_accuracy {:.4}", meta.training_accuracy);
    if let Some(h) = meta.holdout_accuracy {
        let _ = writeln!(out, "holdout_accuracy {h:.4} ({} samples)", meta.holdout_samples);
    }
}

pub fn train(a: &TrainArgs) -> CmdResult {
    let file = load_train_file(a.config.as_deref())?;
    let trivariate = a.trivariate || file.trivariate.unwrap_or(false);
    let pairs = a.pairs.or(file.pairs).unwrap_or(2000);
    let points = a.points.or(file.points).unwrap_or(500);
    let block_size = a.block_size.or(file.block_size).unwrap_or(DEFAULT_BLOCK_SIZE);
    let bandwidths = a.bandwidths.clone().or(file.bandwidths).unwrap_or_else(|| DEFAULT_BANDWIDTHS.to_vec());
    let holdout = a.holdout.or(file.holdout).unwrap_or(if trivariate { 100 } else { 500 });
    let trees = a.trees.or(file.trees).unwrap_or(1000);
    let classifier = match a.classifier.or(file.classifier).unwrap_or(ClassifierKind::Forest) {
        ClassifierKind::Forest => ClassifierConfig::forest(trees),
        ClassifierKind::Logistic => ClassifierConfig::logistic(),
    };
    let extended = a.extended_labels || file.extended_labels.unwrap_or(false);
    let seed = a.seed.seed;
    let (bundle, meta) = if trivariate {
        if extended {
            return Err(usage("--extended-labels applies to pair models only"));
        }
        let fb = build_trivariate_featurizer(block_size, &bandwidths, seed)?;
        let model = train_trivariate_with(pairs, points, &fb, &classifier, seed, holdout)?;
        let meta = model.meta.clone();
        (ModelBundle::Trivariate(model), meta)
    } else {
        let fb = build_featurizer(block_size, &bandwidths, seed)?;
        let options = RccOptions { holdout_pairs: holdout, extended_labels: extended };
        let model = train_rcc_with(pairs, points, &fb, &classifier, seed, &options)?;
        let meta = model.meta.clone();
        (ModelBundle::Pair(model), meta)
    };
    save_bundle(&bundle, &a.out)?;
    if a.json {
        let v = json!({ "model": a.out, "kind": bundle.kind(), "meta": meta });
        return Ok(format!("{v}\n"));
    }
    let mut out = format!("model {}\nkind {}\n", a.out.display(), bundle.kind());
    meta_lines(&mut out, &meta);
    Ok(out)
}

fn load_pair_model(path: &Path) -> Result<RccModel, Failure> {
    match load_bundle(path).map_err(|e| bundle_failure(path, e))? {
        ModelBundle::Pair(m) => Ok(m),
        other => Err(usage(format!("{} holds a {} model, expected a pair model", path.display(), other.kind()))),
    }
}

fn load_trivariate_model(path: &Path) -> Result<TrivariateModel, Failure> {
    match load_bundle(path).map_err(|e| bundle_failure(path, e))? {
        ModelBundle::Trivariate(m) => Ok(m),
        other => Err(usage(format!("{} holds a {} model, expected a trivariate model", path.display(), other.kind()))),
    }
}

fn bundle_failure(path: &Path, e: randep::Error) -> Failure {
    match e {
        randep::Error::Version { expected, found } => usage(format!(
            "{}: model bundle version {found} is not supported (expected {expected}); retrain the model",
            path.display()
        )),
        other => usage(format!("{}: {other}", path.display())),
    }
}

pub fn predict(a: &PredictArgs) -> CmdResult {
    let model = load_pair_model(&a.model)?;
    let table = read_pair_file(&a.input)?;
    // `synth pair` writes `# label=...`; echo it so predictions can be checked by eye
    let known = table.metadata.get("label").cloned();
    let sample = ObservationalSample::new(table.data, SampleLabel::Unlabeled)?;
    let p = predict_direction(&model, &sample)?;
    if a.json {
        let labels = model.label_probabilities(&sample)?;
        let v = json!({
            "p_x_causes_y": p,
            "confidence": (p - 0.5).abs(),
            "label_probabilities": labels,
            "file_label": known,
        });
        return Ok(format!("{v}\n"));
    }
    let mut out = format!("p_x_causes_y {p:.6}\nconfidence {:.6}\n", (p - 0.5).abs());
    if let Some(l) = known {
        let _ = writeln!(out, "file_label {l}");
    }
    Ok(out)
}

struct LabelledPair {
    id: String,
    label: PairLabel,
    weight: f64,
}

/// Tübingen `pairmeta.txt`: `id cause_first cause_last effect_first effect_last weight`.
/// Only scalar pairs in columns 1 and 2 are kept.
fn parse_pairmeta(text: &str) -> Vec<LabelledPair> {
    text.lines()
        .filter_map(|line| {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() < 6 {
                return None;
            }
            let n: Vec<u32> = f[1..5].iter().map(|s| s.parse().ok()).collect::<Option<_>>()?;
            let weight = f[5].parse().ok()?;
            let label = match (n[0], n[1], n[2], n[3]) {
                (1, 1, 2, 2) => PairLabel::XCausesY,
                (2, 2, 1, 1) => PairLabel::YCausesX,
                _ => return None,
            };
            Some(LabelledPair { id: f[0].to_string(), label, weight })
        })
        .collect()
}

/// Sidecar labels: one `id direction [weight]` entry per line, comma or
/// whitespace separated; `direction` is `x->y`, `y->x`, `1` or `-1`.
fn parse_sidecar(text: &str, origin: &str) -> Result<Vec<LabelledPair>, Failure> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = if line.contains(',') {
            line.split(',').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        if f.len() < 2 {
            return Err(usage(format!("{origin}:{}: expected `id direction [weight]`", i + 1)));
        }
        let label: PairLabel = f[1].parse().map_err(|e| usage(format!("{origin}:{}: {e}", i + 1)))?;
        if !matches!(label, PairLabel::XCausesY | PairLabel::YCausesX) {
            return Err(usage(format!("{origin}:{}: only directed labels can be evaluated", i + 1)));
        }
        let weight = match f.get(2) {
            Some(w) => w.parse().map_err(|_| usage(format!("{origin}:{}: bad weight {w:?}", i + 1)))?,
            None => 1.0,
        };
        out.push(LabelledPair { id: f[0].to_string(), label, weight });
    }
    Ok(out)
}

fn find_labels(a: &EvalDirArgs) -> Result<(PathBuf, bool), Failure> {
    if let Some(p) = &a.labels {
        let meta = p.file_name().is_some_and(|n| n == "pairmeta.txt");
        return Ok((p.clone(), meta));
    }
    for (name, meta) in [("labels.txt", false), ("labels.csv", false), ("pairmeta.txt", true)] {
        let p = a.dir.join(name);
        if p.is_file() {
            return Ok((p, meta));
        }
    }
    Err(usage(format!("{}: no labels.txt, labels.csv or pairmeta.txt found; pass --labels", a.dir.display())))
}

fn find_pair_file(dir: &Path, id: &str) -> Option<PathBuf> {
    [id.to_string(), format!("{id}.txt"), format!("{id}.csv"), format!("pair{id}.txt"), format!("pair{id}.csv")]
        .into_iter()
        .map(|n| dir.join(n))
        .find(|p| p.is_file())
}

pub fn eval_dir(a: &EvalDirArgs) -> CmdResult {
    let model = load_pair_model(&a.model)?;
    let (labels_path, tuebingen) = find_labels(a)?;
    let text = std::fs::read_to_string(&labels_path)
        .map_err(|e| usage(format!("cannot read {}: {e}", labels_path.display())))?;
    let entries = if tuebingen { parse_pairmeta(&text) } else { parse_sidecar(&text, &labels_path.display().to_string())? };
    let mut rows = Vec::new();
    let mut skipped = BTreeMap::new();
    for e in entries {
        let Some(path) = find_pair_file(&a.dir, &e.id) else {
            skipped.insert(e.id, "file not found".to_string());
            continue;
        };
        let table = match read_pair_file(&path) {
            Ok(t) => t,
            Err(err) => {
                skipped.insert(e.id, err.to_string());
                continue;
            }
        };
        let sample = match ObservationalSample::new(table.data, SampleLabel::Pair(e.label)) {
            Ok(s) => s,
            Err(err) => {
                skipped.insert(e.id, err.to_string());
                continue;
            }
        };
        let p = predict_direction(&model, &sample)?;
        let correct = match e.label {
            PairLabel::XCausesY => p > 0.5,
            _ => p < 0.5,
        };
        rows.push((e.id, e.label, e.weight, p, correct));
    }
    if rows.is_empty() {
        return Err(usage(format!("{}: no labelled pair could be evaluated", a.dir.display())));
    }
    let confidence: Vec<f64> = rows.iter().map(|r| (r.3 - 0.5).abs()).collect();
    let correct: Vec<bool> = rows.iter().map(|r| r.4).collect();
    let weights: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let curve = decision_rate_curve(&confidence, &correct, Some(&weights))?;
    let accuracy = correct.iter().filter(|c| **c).count() as f64 / rows.len() as f64;
    let weighted = curve.last().map_or(0.0, |p| p.accuracy);
    if a.json {
        let pairs: Vec<_> = rows
            .iter()
            .map(|(id, l, w, p, c)| json!({ "id": id, "label": l.as_str(), "weight": w, "p_x_causes_y": p, "correct": c }))
            .collect();
        let v = json!({
            "pairs": rows.len(),
            "accuracy": accuracy,
            "weighted_accuracy": weighted,
            "curve": curve,
            "results": pairs,
            "skipped": skipped,
        });
        return Ok(format!("{v}\n"));
    }
    let mut out = format!(
        "# pairs={} accuracy={accuracy:.4} weighted_accuracy={weighted:.4} skipped={}\n",
        rows.len(),
        skipped.len()
    );
    out.push_str("decision_rate,accuracy\n");
    for p in &curve {
        let _ = writeln!(out, "{:.4},{:.4}", p.decision_rate, p.accuracy);
    }
    Ok(out)
}

pub fn dag(a: &DagArgs) -> CmdResult {
    let model = load_trivariate_model(&a.model3)?;
    let table = read_table(&a.input)?;
    if table.data.ncols() < 3 {
        return Err(usage(format!("{}: DAG reconstruction needs at least 3 columns", a.input.display())));
    }
    let names = table.names.clone();
    let sample = ObservationalSample::new(table.data, SampleLabel::Unlabeled)?;
    let est = reconstruct_dag(&score_matrices(&model, &sample)?);
    let dot = est.to_dot(names.as_deref());
    if let Some(path) = &a.out {
        std::fs::write(path, &dot)?;
    }
    if a.json {
        let v = json!({
            "num_nodes": est.num_nodes,
            "names": names,
            "edges": est.edges,
            "pruned": est.pruned,
            "acyclic": est.is_acyclic(),
        });
        return Ok(format!("{v}\n"));
    }
    if a.out.is_none() {
        return Ok(dot);
    }
    let label = |i: usize| names.as_ref().and_then(|n| n.get(i).cloned()).unwrap_or_else(|| i.to_string());
    let mut out = String::new();
    for e in &est.edges {
        let _ = writeln!(out, "{} -> {} {:.4}", label(e.from), label(e.to), e.confidence);
    }
    Ok(out)
}
