//! Gaussian random Fourier features.
//!
//! A [`FeatureBank`] freezes `m` frequency vectors `w_j ~ N(0, 2γ I_d)` and
//! phases `b_j ~ U[0, 2π)`. The feature map
//!
//! ```text
//! φ(x)_j = sqrt(2/m) · cos(⟨w_j, x⟩ + b_j)
//! ```
//!
//! satisfies `⟨φ(x), φ(y)⟩ → exp(-γ‖x − y‖²)` pointwise as `m → ∞`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample as sample_indices;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, shape_err, Error, Result};
use crate::seed;

/// Subsample size used by [`median_heuristic`] callers that have no opinion.
pub const DEFAULT_MEDIAN_SUBSAMPLE: usize = 1000;

/// Frozen parameters of a Gaussian random feature map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBank {
    frequencies: DMatrix<f64>,
    phases: DVector<f64>,
    bandwidth: f64,
    seed: u64,
}

impl FeatureBank {
    /// Draws a bank of `num_features` frequencies for `input_dim`-dimensional
    /// inputs approximating `exp(-bandwidth · ‖x − y‖²)`.
    ///
    /// A zero bandwidth is accepted and yields all-zero frequencies.
    pub fn sample(input_dim: usize, num_features: usize, bandwidth: f64, seed: u64) -> Result<Self> {
        if input_dim == 0 || num_features == 0 {
            return Err(arg_err(format!(
                "feature bank needs positive dimensions, got input_dim={input_dim}, num_features={num_features}"
            )));
        }
        if !(bandwidth >= 0.0) || !bandwidth.is_finite() {
            return Err(arg_err(format!("bandwidth must be finite and nonnegative, got {bandwidth}")));
        }
        let scale = (2.0 * bandwidth).sqrt();
        let mut rng = seed::rng(seed);
        let mut frequencies = DMatrix::zeros(input_dim, num_features);
        let mut phases = DVector::zeros(num_features);
        for j in 0..num_features {
            for i in 0..input_dim {
                let z: f64 = rng.sample(StandardNormal);
                frequencies[(i, j)] = scale * z;
            }
            phases[j] = uniform_phase(&mut rng);
        }
        Ok(Self { frequencies, phases, bandwidth, seed })
    }

    /// Assembles a bank from explicit parameters.
    pub fn from_parts(frequencies: DMatrix<f64>, phases: DVector<f64>, bandwidth: f64, seed: u64) -> Result<Self> {
        if frequencies.ncols() != phases.len() {
            return Err(shape_err(format!(
                "{} frequency columns but {} phases",
                frequencies.ncols(),
                phases.len()
            )));
        }
        if frequencies.nrows() == 0 || frequencies.ncols() == 0 {
            return Err(arg_err("feature bank needs positive dimensions"));
        }
        if let Some(p) = phases.iter().find(|p| !(0.0..TAU).contains(*p)) {
            return Err(arg_err(format!("phase {p} outside [0, 2π)")));
        }
        if !(bandwidth >= 0.0) {
            return Err(arg_err(format!("bandwidth must be nonnegative, got {bandwidth}")));
        }
        Ok(Self { frequencies, phases, bandwidth, seed })
    }

    pub fn input_dim(&self) -> usize {
        self.frequencies.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.frequencies.ncols()
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `input_dim × num_features`; column `j` is the frequency vector `w_j`.
    pub fn frequencies(&self) -> &DMatrix<f64> {
        &self.frequencies
    }

    pub fn phases(&self) -> &DVector<f64> {
        &self.phases
    }

    /// Per-feature scale `sqrt(2/m)`.
    pub fn scale(&self) -> f64 {
        (2.0 / self.num_features() as f64).sqrt()
    }

    /// Raw projections `⟨w_j, x_i⟩ + b_j` for every row of `data`.
    pub fn project(&self, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if data.ncols() != self.input_dim() {
            return Err(shape_err(format!(
                "data has {} columns, bank expects {}",
                data.ncols(),
                self.input_dim()
            )));
        }
        let mut proj = data * &self.frequencies;
        for (j, mut col) in proj.column_iter_mut().enumerate() {
            let b = self.phases[j];
            col.apply(|v| *v += b);
        }
        Ok(proj)
    }

    /// Feature vector of a single point.
    pub fn features_of(&self, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.input_dim() {
            return Err(shape_err(format!("point has {} coordinates, bank expects {}", x.len(), self.input_dim())));
        }
        let scale = self.scale();
        Ok(DVector::from_fn(self.num_features(), |j, _| {
            let dot: f64 = self.frequencies.column(j).iter().zip(x).map(|(w, v)| w * v).sum();
            scale * (dot + self.phases[j]).cos()
        }))
    }
}

fn uniform_phase(rng: &mut seed::Rng) -> f64 {
    let p = rng.random::<f64>() * TAU;
    // the product can round up to exactly 2π
    if p >= TAU {
        0.0
    } else {
        p
    }
}

/// Samples a frozen bank. See [`FeatureBank::sample`].
pub fn sample_bank(input_dim: usize, num_features: usize, bandwidth: f64, seed: u64) -> Result<FeatureBank> {
    FeatureBank::sample(input_dim, num_features, bandwidth, seed)
}

/// Maps every row of `data` (n × d) to its `m` random features (n × m).
pub fn apply_features(bank: &FeatureBank, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut z = bank.project(data)?;
    let scale = bank.scale();
    z.apply(|v| *v = scale * v.cos());
    Ok(z)
}

/// Random-feature estimate `⟨φ(x), φ(y)⟩` of the Gaussian kernel.
pub fn approx_kernel(bank: &FeatureBank, x: &[f64], y: &[f64]) -> Result<f64> {
    let fx = bank.features_of(x)?;
    let fy = bank.features_of(y)?;
    Ok(fx.dot(&fy))
}

/// Exact Gaussian kernel `exp(-γ‖x − y‖²)`.
pub fn gaussian_kernel(x: &[f64], y: &[f64], bandwidth: f64) -> f64 {
    (-bandwidth * squared_distance(x, y)).exp()
}

pub(crate) fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub(crate) fn row_vec(data: &DMatrix<f64>, i: usize) -> Vec<f64> {
    data.row(i).iter().copied().collect()
}

/// Inverse of the median pairwise squared distance over (at most) `subsample`
/// randomly chosen rows.
pub fn median_heuristic(data: &DMatrix<f64>, subsample: usize, seed: u64) -> Result<f64> {
    let n = data.nrows();
    if n < 2 {
        return Err(arg_err(format!("median heuristic needs at least 2 points, got {n}")));
    }
    if subsample < 2 {
        return Err(arg_err("subsample must be at least 2"));
    }
    let rows: Vec<Vec<f64>> = if n > subsample {
        let mut rng = seed::rng(seed);
        let mut idx = sample_indices(&mut rng, n, subsample).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| row_vec(data, i)).collect()
    } else {
        (0..n).map(|i| row_vec(data, i)).collect()
    };
    let mut dists = Vec::with_capacity(rows.len() * (rows.len() - 1) / 2);
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            dists.push(squared_distance(&rows[i], &rows[j]));
        }
    }
    let med = median(&mut dists);
    if !(med > 0.0) {
        return Err(Error::DegenerateData("median pairwise distance is zero".into()));
    }
    Ok(1.0 / med)
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}
