use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, shape_err, Result};

/// Per-pair class probabilities over `d` variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrices {
    /// `forward[(i, j)]`: probability of `i → j`.
    pub forward: DMatrix<f64>,
    pub independent: DMatrix<f64>,
    pub backward: DMatrix<f64>,
}

impl ScoreMatrices {
    pub fn new(forward: DMatrix<f64>, independent: DMatrix<f64>, backward: DMatrix<f64>) -> Result<Self> {
        let d = forward.nrows();
        for m in [&forward, &independent, &backward] {
            if m.nrows() != d || m.ncols() != d {
                return Err(shape_err(format!("score matrices must all be {d}×{d}")));
            }
            if m.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(arg_err("scores must lie in [0, 1]"));
            }
        }
        Ok(Self { forward, independent, backward })
    }

    pub fn num_nodes(&self) -> usize {
        self.forward.nrows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// Winning score.
    pub confidence: f64,
    /// Winning score minus the runner-up.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DagEstimate {
    pub num_nodes: usize,
    pub adjacency: DMatrix<bool>,
    /// Winning score on retained edges, zero elsewhere.
    pub confidence: DMatrix<f64>,
    pub scores: ScoreMatrices,
    pub edges: Vec<Edge>,
    /// Edges removed to break cycles, in removal order.
    pub pruned: Vec<Edge>,
}

/// Whether `target` is reachable from `start` along `edges`.
fn reaches(d: usize, edges: &[Edge], start: usize, target: usize) -> bool {
    let mut seen = vec![false; d];
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        if v == target {
            return true;
        }
        if std::mem::replace(&mut seen[v], true) {
            continue;
        }
        stack.extend(edges.iter().filter(|e| e.from == v).map(|e| e.to));
    }
    false
}

fn is_acyclic(d: usize, edges: &[Edge]) -> bool {
    topological_order(d, edges).is_some()
}

fn topological_order(d: usize, edges: &[Edge]) -> Option<Vec<usize>> {
    let mut indeg = vec![0usize; d];
    for e in edges {
        indeg[e.to] += 1;
    }
    let mut ready: Vec<usize> = (0..d).rev().filter(|v| indeg[*v] == 0).collect();
    let mut order = Vec::with_capacity(d);
    while let Some(v) = ready.pop() {
        order.push(v);
        for e in edges.iter().filter(|e| e.from == v) {
            indeg[e.to] -= 1;
            if indeg[e.to] == 0 {
                ready.push(e.to);
            }
        }
    }
    (order.len() == d).then_some(order)
}

/// Picks each pair's edge type by the largest score (ties go to "no edge",
/// then to the forward direction), then removes the lowest-margin edge lying
/// on a cycle until the graph is acyclic. Margin ties are broken by the
/// lexicographically smallest `(from, to)`.
pub fn reconstruct_dag(scores: &ScoreMatrices) -> DagEstimate {
    let d = scores.num_nodes();
    let mut edges = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            let f = scores.forward[(i, j)];
            let z = scores.independent[(i, j)];
            let b = scores.backward[(i, j)];
            if z >= f && z >= b {
                continue;
            }
            let (from, to, win, other) = if f >= b { (i, j, f, b) } else { (j, i, b, f) };
            edges.push(Edge { from, to, confidence: win, margin: win - other.max(z) });
        }
    }
    let mut pruned = Vec::new();
    while !is_acyclic(d, &edges) {
        let victim = edges
            .iter()
            .enumerate()
            .filter(|(_, e)| reaches(d, &edges, e.to, e.from))
            .min_by(|(_, a), (_, b)| a.margin.total_cmp(&b.margin).then((a.from, a.to).cmp(&(b.from, b.to))))
            .map(|(k, _)| k)
            .expect("a cyclic graph has an edge on a cycle");
        pruned.push(edges.remove(victim));
    }
    edges.sort_by_key(|e| (e.from, e.to));
    let mut adjacency = DMatrix::from_element(d, d, false);
    let mut confidence = DMatrix::zeros(d, d);
    for e in &edges {
        adjacency[(e.from, e.to)] = true;
        confidence[(e.from, e.to)] = e.confidence;
    }
    DagEstimate { num_nodes: d, adjacency, confidence, scores: scores.clone(), edges, pruned }
}

impl DagEstimate {
    pub fn edge_set(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.from, e.to)).collect()
    }

    pub fn is_acyclic(&self) -> bool {
        is_acyclic(self.num_nodes, &self.edges)
    }

    pub fn topological_order(&self) -> Option<Vec<usize>> {
        topological_order(self.num_nodes, &self.edges)
    }

    /// Graphviz text. Nodes are named by `names` when given, else by index.
    pub fn to_dot(&self, names: Option<&[String]>) -> String {
        let name = |i: usize| match names.and_then(|n| n.get(i)) {
            Some(s) => format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"")),
            None => format!("n{i}"),
        };
        let mut out = String::from("digraph dag {\n");
        for i in 0..self.num_nodes {
            let _ = writeln!(out, "  {};", name(i));
        }
        for e in &self.edges {
            let _ = writeln!(out, "  {} -> {} [label=\"{:.3}\"];", name(e.from), name(e.to), e.confidence);
        }
        out.push_str("}\n");
        out
    }
}
