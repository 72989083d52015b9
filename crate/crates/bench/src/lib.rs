//! Fixtures shared by the criterion benchmarks.

use randep::synth::{random_pair, ObservationalSample};
use randep::DMatrix;

/// Deterministic `n × d` matrix with entries in `[-1, 1)`.
pub fn grid_data(n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |i, j| (((i * 7919 + j * 104_729) % 2048) as f64 / 1024.0) - 1.0)
}

/// Paired `(x, y)` columns with a nonlinear relation.
pub fn paired_columns(n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let x = grid_data(n, 1);
    let y = x.map(|v| (3.0 * v).sin() + 0.1 * v * v);
    (x, y)
}

pub fn pair_sample(n: usize, seed: u64) -> ObservationalSample {
    random_pair(n, seed).expect("synthetic pair")
}
