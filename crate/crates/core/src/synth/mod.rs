//! Seeded generators of labelled cause-effect samples.
//!
//! A bivariate sample is drawn from a random mechanism: a Gaussian mixture
//! cause `x`, a random natural spline `f`, and additive Gaussian noise,
//! `y = f(x) + ε`. Trivariate samples follow one of the eight canonical DAGs on
//! three nodes, generating every non-root node as a sum of per-parent random
//! splines plus noise. All samples leave the generator standardized.

mod spline;

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::seed;

pub use spline::NaturalSpline;

/// Retries allowed when a draw produces a degenerate mechanism or cause.
const MAX_RETRIES: u64 = 16;

/// Tolerances used by [`ObservationalSample::is_standardized`].
pub const STANDARDIZED_MEAN_TOL: f64 = 1e-9;
pub const STANDARDIZED_VAR_TOL: f64 = 1e-6;

/// Random hyperparameters of one bivariate mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairHyperparams {
    /// Mixture components of the cause, in `1..10`.
    pub components: usize,
    /// Scale of the component means, in `[0, 10)`.
    pub mean_scale: f64,
    /// Scale of the component standard deviations, in `[1, 10)`.
    pub std_scale: f64,
    /// Noise variance, in `[0, 10)`.
    pub noise_variance: f64,
    /// Spline knot count, in `4..10`.
    pub knots: usize,
    /// `(relative position in [0, 1], value)` of each knot. Positions are
    /// stretched over the observed range of the cause when the sample is drawn.
    pub spline: Vec<(f64, f64)>,
}

impl PairHyperparams {
    fn draw(rng: &mut seed::Rng) -> Self {
        let components = rng.random_range(1..10);
        let mean_scale = rng.random_range(0.0..10.0);
        let std_scale = rng.random_range(1.0..10.0);
        let noise_variance = rng.random_range(0.0..10.0);
        let knots = rng.random_range(4..10);
        let spline = random_knots(rng, knots);
        Self { components, mean_scale, std_scale, noise_variance, knots, spline }
    }
}

fn random_knots(rng: &mut seed::Rng, count: usize) -> Vec<(f64, f64)> {
    (0..count)
        .map(|i| (i as f64 / (count - 1) as f64, rng.sample::<f64, _>(StandardNormal)))
        .collect()
}

/// Draws mechanism hyperparameters from `seed`.
pub fn sample_pair_hyperparams(seed: u64) -> PairHyperparams {
    PairHyperparams::draw(&mut seed::rng(seed))
}

/// Causal label of a bivariate sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairLabel {
    XCausesY,
    YCausesX,
    Confounded,
    Independent,
}

impl PairLabel {
    pub fn swapped(self) -> Self {
        match self {
            PairLabel::XCausesY => PairLabel::YCausesX,
            PairLabel::YCausesX => PairLabel::XCausesY,
            other => other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PairLabel::XCausesY => "x->y",
            PairLabel::YCausesX => "y->x",
            PairLabel::Confounded => "confounded",
            PairLabel::Independent => "independent",
        }
    }
}

impl std::str::FromStr for PairLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x->y" | "->" | "1" | "+1" => Ok(PairLabel::XCausesY),
            "y->x" | "<-" | "-1" => Ok(PairLabel::YCausesX),
            "confounded" => Ok(PairLabel::Confounded),
            "independent" | "0" => Ok(PairLabel::Independent),
            other => Err(arg_err(format!("unknown pair label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SampleLabel {
    Pair(PairLabel),
    /// `(l₁, l₂, l₃)` for the node pairs (0, 1), (1, 2), (0, 2); +1 forward,
    /// −1 backward, 0 absent.
    Triple([i8; 3]),
    Unlabeled,
}

/// A bag of iid points with an optional causal label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationalSample {
    pub points: DMatrix<f64>,
    pub label: SampleLabel,
    pub standardized: bool,
}

impl ObservationalSample {
    /// Standardizes the columns of `points` and attaches `label`.
    pub fn new(points: DMatrix<f64>, label: SampleLabel) -> Result<Self> {
        let points = standardize_columns(points)?;
        Ok(Self { points, label, standardized: true })
    }

    /// Wraps `points` as given.
    pub fn raw(points: DMatrix<f64>, label: SampleLabel) -> Self {
        Self { points, label, standardized: false }
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    /// Exchanges the two columns of a bivariate sample and flips its label.
    pub fn swap(&self) -> Result<Self> {
        if self.points.ncols() != 2 {
            return Err(Error::UnsupportedArity(format!("swap needs 2 columns, got {}", self.points.ncols())));
        }
        let points = self.points.select_columns([1usize, 0].iter());
        let label = match &self.label {
            SampleLabel::Pair(l) => SampleLabel::Pair(l.swapped()),
            other => other.clone(),
        };
        Ok(Self { points, label, standardized: self.standardized })
    }

    /// Checks column means and (population) variances against the
    /// standardization tolerances.
    pub fn is_standardized(&self) -> bool {
        let n = self.points.nrows() as f64;
        self.points.column_iter().all(|c| {
            let m = c.sum() / n;
            let v = c.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
            m.abs() <= STANDARDIZED_MEAN_TOL && (v - 1.0).abs() <= STANDARDIZED_VAR_TOL
        })
    }

    /// CSV text: a `#` comment line with label and seed, a header, and one
    /// row per point.
    pub fn to_csv(&self, seed: u64) -> String {
        let label = match &self.label {
            SampleLabel::Pair(l) => l.as_str().to_string(),
            SampleLabel::Triple(l) => format!("{},{},{}", l[0], l[1], l[2]),
            SampleLabel::Unlabeled => "none".to_string(),
        };
        let names = ["x", "y", "z"];
        let mut out = String::new();
        let _ = writeln!(out, "# label={label} seed={seed}");
        let header: Vec<String> = (0..self.points.ncols())
            .map(|j| names.get(j).map_or_else(|| format!("v{j}"), |s| s.to_string()))
            .collect();
        let _ = writeln!(out, "{}", header.join(","));
        for row in self.points.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// Zero mean, unit population variance per column.
pub fn standardize_columns(mut points: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = points.nrows();
    if n < 2 {
        return Err(arg_err("standardizing needs at least 2 points"));
    }
    for (j, mut col) in points.column_iter_mut().enumerate() {
        let m = col.sum() / n as f64;
        col.apply(|v| *v -= m);
        let sd = (col.norm_squared() / n as f64).sqrt();
        if !(sd > 0.0) || !sd.is_finite() {
            return Err(Error::DegenerateData(format!("column {j} has no spread")));
        }
        col.apply(|v| *v /= sd);
        // recentre to absorb rounding from the division
        let m2 = col.sum() / n as f64;
        col.apply(|v| *v -= m2);
    }
    Ok(points)
}

fn draw_gmm(rng: &mut seed::Rng, hp: &PairHyperparams, n: usize) -> Vec<f64> {
    let k = hp.components;
    let mut weights: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter_mut().for_each(|w| *w /= total);
    } else {
        weights.iter_mut().for_each(|w| *w = 1.0 / k as f64);
    }
    let means: Vec<f64> = (0..k).map(|_| hp.mean_scale * rng.sample::<f64, _>(StandardNormal)).collect();
    let sds: Vec<f64> = (0..k).map(|_| (hp.std_scale * rng.sample::<f64, _>(StandardNormal)).abs()).collect();
    let mut cumulative = weights.clone();
    for i in 1..k {
        cumulative[i] += cumulative[i - 1];
    }
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let c = cumulative.iter().position(|c| u < *c).unwrap_or(k - 1);
            means[c] + sds[c] * rng.sample::<f64, _>(StandardNormal)
        })
        .collect()
}

/// Spline through `knots` (relative positions) stretched over the range of
/// `x`, evaluated at every element of `x`.
fn apply_mechanism(knots: &[(f64, f64)], x: &[f64]) -> Result<Vec<f64>> {
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if !(hi > lo) {
        return Err(Error::DegenerateData("cause has no spread".into()));
    }
    let positions = knots.iter().map(|(p, _)| lo + p * (hi - lo)).collect();
    let values = knots.iter().map(|(_, v)| *v).collect();
    let spline = NaturalSpline::new(positions, values)?;
    Ok(x.iter().map(|v| spline.eval(*v)).collect())
}

fn knots_degenerate(knots: &[(f64, f64)]) -> bool {
    knots.iter().all(|(_, v)| *v == knots[0].1)
}

fn add_noise(rng: &mut seed::Rng, values: &mut [f64], variance: f64) {
    let sd = variance.sqrt();
    for v in values.iter_mut() {
        *v += sd * rng.sample::<f64, _>(StandardNormal);
    }
}

fn columns_to_matrix(cols: &[Vec<f64>]) -> DMatrix<f64> {
    let n = cols[0].len();
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}

/// Tries `attempt(seed′)` on derived seeds until it produces a non-degenerate
/// sample.
fn with_retries<T>(seed: u64, mut attempt: impl FnMut(u64) -> Result<T>) -> Result<T> {
    let mut last = None;
    for r in 0..MAX_RETRIES {
        let s = if r == 0 { seed } else { seed::derive(seed, 0xD0_0000 + r) };
        match attempt(s) {
            Ok(v) => return Ok(v),
            Err(e @ Error::DegenerateData(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::DegenerateData("generator retries exhausted".into())))
}

fn one_pair(hp: &PairHyperparams, n: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rng = seed::rng(seed);
    let mut knots = hp.spline.clone();
    if knots_degenerate(&knots) {
        knots = random_knots(&mut rng, hp.knots);
        if knots_degenerate(&knots) {
            return Err(Error::DegenerateData("spline is constant".into()));
        }
    }
    let x = draw_gmm(&mut rng, hp, n);
    let mut y = apply_mechanism(&knots, &x)?;
    add_noise(&mut rng, &mut y, hp.noise_variance);
    Ok((x, y))
}

/// Draws `n` points `(x, f(x) + ε)` from the mechanism `hp`, labelled x → y.
pub fn synth_pair(hp: &PairHyperparams, n: usize, seed: u64) -> Result<ObservationalSample> {
    if n < 2 {
        return Err(arg_err(format!("a sample needs at least 2 points, got {n}")));
    }
    with_retries(seed, |s| {
        let (x, y) = one_pair(hp, n, s)?;
        ObservationalSample::new(columns_to_matrix(&[x, y]), SampleLabel::Pair(PairLabel::XCausesY))
    })
}

/// Hyperparameters and sample from a single seed; the two draws use
/// independent streams.
pub fn random_pair(n: usize, seed: u64) -> Result<ObservationalSample> {
    let hp = sample_pair_hyperparams(seed::derive(seed, 0));
    synth_pair(&hp, n, seed::derive(seed, 1))
}

/// Both variables driven by a hidden common cause and no direct link.
pub fn synth_confounded(n: usize, seed: u64) -> Result<ObservationalSample> {
    if n < 2 {
        return Err(arg_err(format!("a sample needs at least 2 points, got {n}")));
    }
    with_retries(seed, |s| {
        let mut rng = seed::rng(s);
        let hp = PairHyperparams::draw(&mut rng);
        let z = draw_gmm(&mut rng, &hp, n);
        let count = rng.random_range(4..10);
        let other = random_knots(&mut rng, count);
        let mut x = apply_mechanism(&hp.spline, &z)?;
        let mut y = apply_mechanism(&other, &z)?;
        let x_noise = rng.random_range(0.0..10.0);
        add_noise(&mut rng, &mut x, x_noise);
        add_noise(&mut rng, &mut y, hp.noise_variance);
        ObservationalSample::new(columns_to_matrix(&[x, y]), SampleLabel::Pair(PairLabel::Confounded))
    })
}

/// Two independent mixture variables.
pub fn synth_independent(n: usize, seed: u64) -> Result<ObservationalSample> {
    if n < 2 {
        return Err(arg_err(format!("a sample needs at least 2 points, got {n}")));
    }
    with_retries(seed, |s| {
        let mut rng = seed::rng(s);
        let hx = PairHyperparams::draw(&mut rng);
        let hy = PairHyperparams::draw(&mut rng);
        let x = draw_gmm(&mut rng, &hx, n);
        let y = draw_gmm(&mut rng, &hy, n);
        ObservationalSample::new(columns_to_matrix(&[x, y]), SampleLabel::Pair(PairLabel::Independent))
    })
}

/// Directed acyclic graph on three nodes `0, 1, 2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TripleDag {
    /// `(from, to)` pairs.
    pub edges: Vec<(usize, usize)>,
    pub labels: [i8; 3],
}

/// Node pairs addressed by the three labels.
pub const TRIPLE_LABEL_PAIRS: [(usize, usize); 3] = [(0, 1), (1, 2), (0, 2)];

impl TripleDag {
    pub fn from_edges(edges: &[(usize, usize)]) -> Result<Self> {
        let mut labels = [0i8; 3];
        for &(a, b) in edges {
            if a > 2 || b > 2 || a == b {
                return Err(arg_err(format!("invalid edge ({a}, {b})")));
            }
            let slot = TRIPLE_LABEL_PAIRS
                .iter()
                .position(|&(u, v)| (u, v) == (a, b) || (u, v) == (b, a))
                .expect("every off-diagonal pair has a slot");
            if labels[slot] != 0 {
                return Err(arg_err(format!("pair ({a}, {b}) has two edges")));
            }
            labels[slot] = if TRIPLE_LABEL_PAIRS[slot] == (a, b) { 1 } else { -1 };
        }
        let dag = Self { edges: edges.to_vec(), labels };
        if dag.topological_order().is_none() {
            return Err(arg_err("edges contain a cycle"));
        }
        Ok(dag)
    }

    pub fn parents(&self, node: usize) -> Vec<usize> {
        self.edges.iter().filter(|(_, b)| *b == node).map(|(a, _)| *a).collect()
    }

    /// Topological order, or `None` if the edges contain a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indeg = [0usize; 3];
        for &(_, b) in &self.edges {
            indeg[b] += 1;
        }
        let mut order = Vec::with_capacity(3);
        let mut ready: Vec<usize> = (0..3).filter(|&v| indeg[v] == 0).collect();
        while let Some(v) = ready.pop() {
            order.push(v);
            for &(a, b) in &self.edges {
                if a == v {
                    indeg[b] -= 1;
                    if indeg[b] == 0 {
                        ready.push(b);
                    }
                }
            }
        }
        (order.len() == 3).then_some(order)
    }
}

/// The eight DAGs used for trivariate training, with nodes (x, y, z):
/// empty; x→y; chain x→y→z; collider x→y←z; fork x←y→z; and the chain,
/// collider and fork each with an added x→z shortcut.
pub fn enumerate_triple_dags() -> Vec<TripleDag> {
    let structures: [&[(usize, usize)]; 8] = [
        &[],
        &[(0, 1)],
        &[(0, 1), (1, 2)],
        &[(0, 1), (2, 1)],
        &[(1, 0), (1, 2)],
        &[(0, 1), (1, 2), (0, 2)],
        &[(0, 1), (2, 1), (0, 2)],
        &[(1, 0), (1, 2), (0, 2)],
    ];
    structures
        .iter()
        .map(|e| TripleDag::from_edges(e).expect("canonical DAGs are valid"))
        .collect()
}

fn one_triple(dag: &TripleDag, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = seed::rng(seed);
    let order = dag.topological_order().ok_or_else(|| arg_err("graph is cyclic"))?;
    let mut cols: Vec<Option<Vec<f64>>> = vec![None, None, None];
    for node in order {
        let parents = dag.parents(node);
        let hp = PairHyperparams::draw(&mut rng);
        let values = if parents.is_empty() {
            draw_gmm(&mut rng, &hp, n)
        } else {
            let mut acc = vec![0.0; n];
            for (k, p) in parents.iter().enumerate() {
                let knots = if k == 0 {
                    hp.spline.clone()
                } else {
                    let count = rng.random_range(4..10);
                    random_knots(&mut rng, count)
                };
                if knots_degenerate(&knots) {
                    return Err(Error::DegenerateData("spline is constant".into()));
                }
                let parent = cols[*p].as_ref().expect("parents precede children");
                for (a, v) in acc.iter_mut().zip(apply_mechanism(&knots, parent)?) {
                    *a += v;
                }
            }
            add_noise(&mut rng, &mut acc, hp.noise_variance);
            acc
        };
        let standardized = standardize_columns(DMatrix::from_column_slice(n, 1, &values))?;
        cols[node] = Some(standardized.as_slice().to_vec());
    }
    Ok(cols.into_iter().map(|c| c.expect("all nodes generated")).collect())
}

/// Draws `n` points from random mechanisms along the edges of `dag`.
pub fn synth_triple(dag: &TripleDag, n: usize, seed: u64) -> Result<ObservationalSample> {
    if n < 2 {
        return Err(arg_err(format!("a sample needs at least 2 points, got {n}")));
    }
    with_retries(seed, |s| {
        let cols = one_triple(dag, n, s)?;
        ObservationalSample::new(columns_to_matrix(&cols), SampleLabel::Triple(dag.labels))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperparameter_ranges() {
        for s in 0..500 {
            let hp = sample_pair_hyperparams(s);
            assert!((1..10).contains(&hp.components));
            assert!((0.0..10.0).contains(&hp.mean_scale));
            assert!((1.0..10.0).contains(&hp.std_scale));
            assert!((0.0..10.0).contains(&hp.noise_variance));
            assert!((4..10).contains(&hp.knots));
            assert_eq!(hp.spline.len(), hp.knots);
        }
        assert_eq!(sample_pair_hyperparams(3), sample_pair_hyperparams(3));
    }

    #[test]
    fn pairs_are_standardized_and_reproducible() {
        let hp = sample_pair_hyperparams(1);
        let s = synth_pair(&hp, 300, 2).unwrap();
        assert_eq!(s.points.shape(), (300, 2));
        assert!(s.is_standardized());
        assert_eq!(s.label, SampleLabel::Pair(PairLabel::XCausesY));
        assert_eq!(s, synth_pair(&hp, 300, 2).unwrap());
        assert_ne!(s, synth_pair(&hp, 300, 3).unwrap());
        assert!(synth_pair(&hp, 1, 2).is_err());
    }

    #[test]
    fn constant_spline_is_redrawn() {
        let mut hp = sample_pair_hyperparams(4);
        hp.spline.iter_mut().for_each(|k| k.1 = 0.5);
        let s = synth_pair(&hp, 100, 5).unwrap();
        assert!(s.is_standardized());
    }

    #[test]
    fn swap_flips_columns_and_label() {
        let s = random_pair(50, 9).unwrap();
        let t = s.swap().unwrap();
        assert_eq!(t.points.column(0), s.points.column(1));
        assert_eq!(t.label, SampleLabel::Pair(PairLabel::YCausesX));
        assert_eq!(t.swap().unwrap(), s);
    }

    #[test]
    fn eight_acyclic_dags_with_consistent_labels() {
        let dags = enumerate_triple_dags();
        assert_eq!(dags.len(), 8);
        assert!(dags[0].edges.is_empty());
        assert_eq!(dags[0].labels, [0, 0, 0]);
        assert_eq!(dags[2].labels, [1, 1, 0]);
        assert_eq!(dags[4].labels, [-1, 1, 0]);
        for d in &dags {
            assert!(d.topological_order().is_some());
            assert_eq!(d.labels.iter().filter(|l| **l != 0).count(), d.edges.len());
        }
        assert!(TripleDag::from_edges(&[(0, 1), (1, 2), (2, 0)]).is_err());
    }

    #[test]
    fn triples_are_standardized_and_reproducible() {
        for dag in enumerate_triple_dags() {
            let s = synth_triple(&dag, 200, 7).unwrap();
            assert_eq!(s.points.ncols(), 3);
            assert!(s.is_standardized());
            assert_eq!(s.label, SampleLabel::Triple(dag.labels));
            assert_eq!(s, synth_triple(&dag, 200, 7).unwrap());
        }
    }

    #[test]
    fn extra_pair_kinds() {
        let c = synth_confounded(100, 1).unwrap();
        assert_eq!(c.label, SampleLabel::Pair(PairLabel::Confounded));
        assert!(c.is_standardized());
        let i = synth_independent(100, 1).unwrap();
        assert_eq!(i.label, SampleLabel::Pair(PairLabel::Independent));
    }

    #[test]
    fn csv_export_has_header_comment() {
        let s = random_pair(3, 1).unwrap();
        let text = s.to_csv(1);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# label=x->y seed=1"));
        assert_eq!(lines.next(), Some("x,y"));
        assert_eq!(lines.count(), 3);
    }
}
