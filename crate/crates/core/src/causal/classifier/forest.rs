//! Random forest of Gini CART trees with bootstrap resampling and per-split
//! feature subsampling. Class probabilities are the mean of the leaf class
//! frequencies over trees.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Dataset, ProbabilisticClassifier};
use crate::error::{arg_err, Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, p: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((p as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::All => p,
            MaxFeatures::Count(k) => k.clamp(1, p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub num_trees: usize,
    pub max_features: MaxFeatures,
    /// `None` grows every tree until its leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { num_trees: 1000, max_features: MaxFeatures::Sqrt, max_depth: None, min_samples_split: 2, bootstrap: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
    Leaf { probs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn leaf_probs(&self, x: &[f64]) -> &[f64] {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf { probs } => return probs,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature as usize] <= *threshold { *left as usize } else { *right as usize };
                }
            }
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<Tree>,
    num_classes: usize,
    num_features: usize,
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
}

struct TreeBuilder<'a> {
    columns: &'a [f64],
    labels: &'a [usize],
    n: usize,
    p: usize,
    k: usize,
    mtry: usize,
    config: &'a ForestConfig,
    rng: seed::Rng,
    feature_pool: Vec<usize>,
    scratch: Vec<(f64, usize)>,
}

impl TreeBuilder<'_> {
    fn counts(&self, idx: &[u32]) -> Vec<usize> {
        let mut c = vec![0usize; self.k];
        for &i in idx {
            c[self.labels[i as usize]] += 1;
        }
        c
    }

    /// Best split of `idx` on feature `f`, maximizing `Σ cₗ²/nₗ + Σ cᵣ²/nᵣ`
    /// (equivalently minimizing the weighted Gini impurity).
    fn best_on_feature(&mut self, idx: &[u32], f: usize, total: &[usize]) -> Option<Split> {
        let col = &self.columns[f * self.n..(f + 1) * self.n];
        self.scratch.clear();
        self.scratch.extend(idx.iter().map(|&i| (col[i as usize], self.labels[i as usize])));
        self.scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let m = self.scratch.len();
        if self.scratch[0].0 == self.scratch[m - 1].0 {
            return None;
        }
        let mut left = vec![0usize; self.k];
        let mut best: Option<Split> = None;
        for s in 0..m - 1 {
            left[self.scratch[s].1] += 1;
            let (v, next) = (self.scratch[s].0, self.scratch[s + 1].0);
            if v == next {
                continue;
            }
            let nl = (s + 1) as f64;
            let nr = (m - s - 1) as f64;
            let mut sl = 0.0;
            let mut sr = 0.0;
            for c in 0..self.k {
                let l = left[c] as f64;
                let r = (total[c] - left[c]) as f64;
                sl += l * l;
                sr += r * r;
            }
            let score = sl / nl + sr / nr;
            if best.as_ref().is_none_or(|b| score > b.score) {
                let mid = 0.5 * (v + next);
                let threshold = if mid < next { mid } else { v };
                best = Some(Split { feature: f, threshold, score });
            }
        }
        best
    }

    fn find_split(&mut self, idx: &[u32], total: &[usize]) -> Option<Split> {
        let mut best: Option<Split> = None;
        let mut evaluated = 0;
        let mut drawn = 0;
        // partial Fisher-Yates over the feature pool; keep drawing past
        // constant features until `mtry` usable ones have been tried
        while drawn < self.p && evaluated < self.mtry {
            let j = self.rng.random_range(drawn..self.p);
            self.feature_pool.swap(drawn, j);
            let f = self.feature_pool[drawn];
            drawn += 1;
            if let Some(s) = self.best_on_feature(idx, f, total) {
                evaluated += 1;
                if best.as_ref().is_none_or(|b| s.score > b.score) {
                    best = Some(s);
                }
            }
        }
        best
    }

    fn build(mut self, root: Vec<u32>) -> Tree {
        let mut nodes = vec![Node::Leaf { probs: Vec::new() }];
        let mut stack = vec![(0usize, root, 0usize)];
        while let Some((slot, idx, depth)) = stack.pop() {
            let counts = self.counts(&idx);
            let m = idx.len();
            let pure = counts.iter().filter(|c| **c > 0).count() <= 1;
            let depth_capped = self.config.max_depth.is_some_and(|d| depth >= d);
            let split = if pure || depth_capped || m < self.config.min_samples_split {
                None
            } else {
                let parent = counts.iter().map(|c| (*c as f64).powi(2)).sum::<f64>() / m as f64;
                self.find_split(&idx, &counts).filter(|s| s.score > parent * (1.0 + 1e-12))
            };
            match split {
                None => {
                    let probs = counts.iter().map(|c| *c as f64 / m as f64).collect();
                    nodes[slot] = Node::Leaf { probs };
                }
                Some(s) => {
                    let col = &self.columns[s.feature * self.n..(s.feature + 1) * self.n];
                    let (l, r): (Vec<u32>, Vec<u32>) = idx.iter().partition(|&&i| col[i as usize] <= s.threshold);
                    let left = nodes.len();
                    nodes.push(Node::Leaf { probs: Vec::new() });
                    nodes.push(Node::Leaf { probs: Vec::new() });
                    nodes[slot] = Node::Split {
                        feature: s.feature as u32,
                        threshold: s.threshold,
                        left: left as u32,
                        right: (left + 1) as u32,
                    };
                    stack.push((left + 1, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
            }
        }
        Tree { nodes }
    }
}

impl RandomForest {
    pub fn fit(config: &ForestConfig, data: &Dataset, seed: u64) -> Result<Self> {
        if config.num_trees == 0 {
            return Err(arg_err("forest needs at least one tree"));
        }
        if data.is_empty() || data.num_features() == 0 {
            return Err(Error::Fit("empty training set".into()));
        }
        if config.min_samples_split < 2 {
            return Err(arg_err("min_samples_split must be at least 2"));
        }
        let n = data.len();
        let p = data.num_features();
        let columns = data.transposed();
        let mtry = config.max_features.resolve(p);
        let trees = (0..config.num_trees)
            .map(|t| {
                let mut rng = seed::stream(seed, t as u64);
                let root: Vec<u32> = if config.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n) as u32).collect()
                } else {
                    (0..n as u32).collect()
                };
                TreeBuilder {
                    columns: &columns,
                    labels: data.labels(),
                    n,
                    p,
                    k: data.num_classes(),
                    mtry,
                    config,
                    rng,
                    feature_pool: (0..p).collect(),
                    scratch: Vec::with_capacity(n),
                }
                .build(root)
            })
            .collect();
        Ok(Self { trees, num_classes: data.num_classes(), num_features: p })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }
}

impl ProbabilisticClassifier for RandomForest {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn predict_proba(&self, features: &[f64]) -> Vec<f64> {
        assert_eq!(features.len(), self.num_features, "feature vector length");
        let mut acc = vec![0.0; self.num_classes];
        for tree in &self.trees {
            for (a, p) in acc.iter_mut().zip(tree.leaf_probs(features)) {
                *a += p;
            }
        }
        let t = self.trees.len() as f64;
        acc.iter_mut().for_each(|a| *a /= t);
        acc
    }
}
