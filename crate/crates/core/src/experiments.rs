//! Desk-scale reproduction suites, shared by the `bench` command and the
//! acceptance tests. Each suite returns typed rows and renders them as CSV.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dependence::{fit_null_beta, rdc, simulate_null, RdcConfig};
use crate::error::{arg_err, Result};
use crate::linalg::symmetric_spectral_norm;
use crate::rff::{apply_features, gaussian_kernel, sample_bank, FeatureBank};
use crate::{seed, stats};

/// Exact Gaussian kernel matrix of the rows of `data`.
pub fn kernel_matrix(data: &DMatrix<f64>, bandwidth: f64) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = (0..data.nrows()).map(|i| data.row(i).iter().copied().collect()).collect();
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| gaussian_kernel(&rows[i], &rows[j], bandwidth))
}

/// `Z Zᵀ` for the random features `Z` of `data`.
pub fn approx_kernel_matrix(data: &DMatrix<f64>, bank: &FeatureBank) -> Result<DMatrix<f64>> {
    let z = apply_features(bank, data)?;
    Ok(&z * z.transpose())
}

/// Right-hand side of the matrix Bernstein bound
/// `sqrt(3 B ‖K‖ log n / m) + 2 B log n / m`.
pub fn bernstein_bound(kernel_norm: f64, b: f64, n: usize, m: usize) -> f64 {
    let ln = (n as f64).ln();
    let m = m as f64;
    (3.0 * b * kernel_norm * ln / m).sqrt() + 2.0 * b * ln / m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinConfig {
    pub n: usize,
    pub dim: usize,
    pub bandwidth: f64,
    pub num_features: Vec<usize>,
    pub seeds: usize,
    pub seed: u64,
}

impl Default for BernsteinConfig {
    fn default() -> Self {
        Self { n: 200, dim: 1, bandwidth: 1.0, num_features: vec![256, 1024, 4096], seeds: 20, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinRow {
    pub m: usize,
    /// Mean of `‖K̂ − K‖₂` over seeds.
    pub error_norm: f64,
    /// Mean of `‖K‖₂`.
    pub kernel_norm: f64,
    /// Mean of `‖K̂ − K‖₂ / n`.
    pub normalized_error: f64,
    /// Bound for `K/n` with `B = 2`.
    pub normalized_bound: f64,
    /// Bound for `K` with `B = 2`, taken literally.
    pub literal_bound: f64,
}

/// Approximation error of random-feature kernel matrices on standard
/// Gaussian data. Seed `s` fixes the data and the bank for every `m`.
pub fn bernstein_suite(config: &BernsteinConfig) -> Result<Vec<BernsteinRow>> {
    if config.n < 2 || config.dim == 0 || config.seeds == 0 || config.num_features.is_empty() {
        return Err(arg_err("bernstein suite needs n ≥ 2, dim ≥ 1, seeds ≥ 1 and at least one m"));
    }
    let n = config.n;
    let nf = n as f64;
    let mut acc = vec![(0.0, 0.0); config.num_features.len()];
    for s in 0..config.seeds {
        let run = seed::derive(config.seed, s as u64);
        let mut rng = seed::stream(run, 0);
        let data = DMatrix::from_fn(n, config.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let k = kernel_matrix(&data, config.bandwidth);
        let knorm = symmetric_spectral_norm(&k);
        for (slot, &m) in acc.iter_mut().zip(&config.num_features) {
            let bank = sample_bank(config.dim, m, config.bandwidth, seed::derive(run, m as u64))?;
            let err = symmetric_spectral_norm(&(approx_kernel_matrix(&data, &bank)? - &k));
            slot.0 += err;
            slot.1 += knorm;
        }
    }
    let t = config.seeds as f64;
    Ok(config
        .num_features
        .iter()
        .zip(acc)
        .map(|(&m, (e, k))| {
            let (error_norm, kernel_norm) = (e / t, k / t);
            BernsteinRow {
                m,
                error_norm,
                kernel_norm,
                normalized_error: error_norm / nf,
                normalized_bound: bernstein_bound(kernel_norm / nf, 2.0, n, m),
                literal_bound: bernstein_bound(kernel_norm, 2.0, n, m),
            }
        })
        .collect())
}

pub fn bernstein_csv(rows: &[BernsteinRow]) -> String {
    let mut out = String::from("m,error_norm,kernel_norm,normalized_error,normalized_bound,literal_bound\n");
    for r in rows {
        out += &format!(
            "{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}\n",
            r.m, r.error_norm, r.kernel_norm, r.normalized_error, r.normalized_bound, r.literal_bound
        );
    }
    out
}

/// Noise-free association patterns on `x ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    Linear,
    Quadratic,
    Cubic,
    SineFour,
    SineSixteen,
    FourthRoot,
    Circle,
    Step,
}

impl Pattern {
    pub const ALL: [Pattern; 8] = [
        Pattern::Linear,
        Pattern::Quadratic,
        Pattern::Cubic,
        Pattern::SineFour,
        Pattern::SineSixteen,
        Pattern::FourthRoot,
        Pattern::Circle,
        Pattern::Step,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pattern::Linear => "linear",
            Pattern::Quadratic => "quadratic",
            Pattern::Cubic => "cubic",
            Pattern::SineFour => "sin_4pi",
            Pattern::SineSixteen => "sin_16pi",
            Pattern::FourthRoot => "fourth_root",
            Pattern::Circle => "circle",
            Pattern::Step => "step",
        }
    }

    /// `f(x)`; the circle draws its branch sign from `coin`.
    pub fn apply(self, x: f64, coin: bool) -> f64 {
        match self {
            Pattern::Linear => x,
            Pattern::Quadratic => 4.0 * (x - 0.5).powi(2),
            Pattern::Cubic => 128.0 * (x - 1.0 / 3.0).powi(3) - 48.0 * (x - 1.0 / 3.0).powi(2) - 12.0 * (x - 1.0 / 3.0),
            Pattern::SineFour => (4.0 * PI * x).sin(),
            Pattern::SineSixteen => (16.0 * PI * x).sin(),
            Pattern::FourthRoot => x.powf(0.25),
            Pattern::Circle => {
                let r = (1.0 - (2.0 * x - 1.0).powi(2)).max(0.0).sqrt();
                if coin {
                    r
                } else {
                    -r
                }
            }
            Pattern::Step => f64::from(u8::from(x > 0.5)),
        }
    }
}

impl std::str::FromStr for Pattern {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Pattern::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| arg_err(format!("unknown pattern {s:?}")))
    }
}

/// `n` points `(x, f(x) + ε)` with `x ~ U[0, 1]`, `ε ~ N(0, noise_variance)`.
pub fn pattern_sample(pattern: Pattern, n: usize, noise_variance: f64, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = seed::rng(seed);
    let sd = noise_variance.sqrt();
    let mut x = DMatrix::zeros(n, 1);
    let mut y = DMatrix::zeros(n, 1);
    for i in 0..n {
        let u: f64 = rng.random();
        let coin = rng.random_bool(0.5);
        let e: f64 = rng.sample(StandardNormal);
        x[(i, 0)] = u;
        y[(i, 0)] = pattern.apply(u, coin) + sd * e;
    }
    (x, y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub n: usize,
    pub repetitions: usize,
    pub patterns: Vec<Pattern>,
    pub noise_variances: Vec<f64>,
    /// Rejection level of the permutation test.
    pub level: f64,
    /// Row permutations of each dependent sample added to the null pool.
    pub null_permutations: usize,
    pub rdc: RdcConfig,
    pub seed: u64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            n: 500,
            repetitions: 100,
            patterns: vec![Pattern::Linear, Pattern::Quadratic, Pattern::SineFour],
            noise_variances: vec![1.0 / 30.0],
            level: 0.05,
            null_permutations: 10,
            rdc: RdcConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub pattern: Pattern,
    pub noise_variance: f64,
    /// Fraction of dependent samples above the null threshold.
    pub power: f64,
    /// Fraction of fresh independent samples above the same threshold.
    pub null_rejection: f64,
    pub threshold: f64,
}

/// Power of RDC against a permutation null. For every repetition the
/// dependent sample is scored, its `y` is row-permuted to give
/// `null_permutations` null values, and `x` is redrawn to give an independent sample with equal
/// marginals. The threshold is the `1 − level` quantile of the permutation
/// null values.
pub fn power_suite(config: &PowerConfig) -> Result<Vec<PowerRow>> {
    if config.repetitions < 2 || config.n < 3 || config.null_permutations == 0 || !(config.level > 0.0 && config.level < 1.0) {
        return Err(arg_err("power suite needs ≥ 2 repetitions, n ≥ 3, a null permutation and a level in (0, 1)"));
    }
    let mut rows = Vec::new();
    for (pi, &pattern) in config.patterns.iter().enumerate() {
        for (vi, &noise) in config.noise_variances.iter().enumerate() {
            if !(noise >= 0.0) {
                return Err(arg_err("noise variance must be nonnegative"));
            }
            let cell = seed::derive(seed::derive(config.seed, pi as u64), vi as u64);
            let mut dependent = Vec::with_capacity(config.repetitions);
            let mut permuted = Vec::with_capacity(config.repetitions);
            let mut independent = Vec::with_capacity(config.repetitions);
            for r in 0..config.repetitions {
                let rep = seed::derive(cell, r as u64);
                let cfg = config.rdc.with_seed(seed::derive(rep, 0));
                let (x, y) = pattern_sample(pattern, config.n, noise, seed::derive(rep, 1));
                dependent.push(rdc(&x, &y, &cfg)?);
                let mut order: Vec<usize> = (0..config.n).collect();
                let mut perm_rng = seed::stream(rep, 2);
                for _ in 0..config.null_permutations {
                    crate::dependence::shuffle(&mut order, &mut perm_rng);
                    permuted.push(rdc(&x, &y.select_rows(order.iter()), &cfg)?);
                }
                let mut rng = seed::stream(rep, 3);
                let fresh = DMatrix::from_fn(config.n, 1, |_, _| rng.random::<f64>());
                independent.push(rdc(&fresh, &y, &cfg)?);
            }
            let threshold = stats::quantile(&permuted, 1.0 - config.level);
            let rate = |v: &[f64]| v.iter().filter(|s| **s > threshold).count() as f64 / v.len() as f64;
            rows.push(PowerRow {
                pattern,
                noise_variance: noise,
                power: rate(&dependent),
                null_rejection: rate(&independent),
                threshold,
            });
        }
    }
    Ok(rows)
}

pub fn power_csv(rows: &[PowerRow]) -> String {
    let mut out = String::from("pattern,noise_variance,power,null_rejection,threshold\n");
    for r in rows {
        out += &format!("{},{:.6e},{:.4},{:.4},{:.6}\n", r.pattern.name(), r.noise_variance, r.power, r.null_rejection, r.threshold);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullConfig {
    pub n: usize,
    pub replicates: usize,
    pub rdc: RdcConfig,
}

impl Default for NullConfig {
    fn default() -> Self {
        Self { n: 500, replicates: 1000, rdc: RdcConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullReport {
    pub alpha: f64,
    pub beta: f64,
    /// `(i/10, empirical decile, fitted cdf at it)` for `i = 1..=9`.
    pub deciles: Vec<(f64, f64, f64)>,
    /// Largest `|F(decile_i) − i/10|`.
    pub max_deviation: f64,
}

/// Beta fit to the simulated scalar null and its agreement with the
/// empirical deciles.
pub fn null_suite(config: &NullConfig) -> Result<NullReport> {
    let model = fit_null_beta(config.n, config.replicates, &config.rdc)?;
    let values = simulate_null(config.n, config.replicates, &config.rdc)?;
    let mut deciles = Vec::with_capacity(9);
    let mut max_deviation: f64 = 0.0;
    for i in 1..10 {
        let q = i as f64 / 10.0;
        let v = stats::quantile(&values, q);
        let f = model.cdf(v)?;
        max_deviation = max_deviation.max((f - q).abs());
        deciles.push((q, v, f));
    }
    Ok(NullReport { alpha: model.beta_alpha, beta: model.beta_beta, deciles, max_deviation })
}

pub fn null_csv(report: &NullReport) -> String {
    let mut out = format!("# alpha={:.6} beta={:.6} max_deviation={:.6}\n", report.alpha, report.beta, report.max_deviation);
    out += "probability,empirical_quantile,fitted_cdf\n";
    for (q, v, f) in &report.deciles {
        out += &format!("{q:.1},{v:.6},{f:.6}\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_matrices_agree_for_large_m() {
        let data = DMatrix::from_row_slice(3, 1, &[0.0, 0.5, 2.0]);
        let k = kernel_matrix(&data, 1.0);
        assert_eq!(k[(0, 0)], 1.0);
        assert!((k[(0, 1)] - (-0.25f64).exp()).abs() < 1e-15);
        let bank = sample_bank(1, 20000, 1.0, 3).unwrap();
        let kh = approx_kernel_matrix(&data, &bank).unwrap();
        assert!((kh - k).abs().max() < 0.05);
    }

    #[test]
    fn bound_formula() {
        let b = bernstein_bound(4.0, 2.0, 100, 50);
        let ln = 100f64.ln();
        assert!((b - ((24.0 * ln / 50.0).sqrt() + 4.0 * ln / 50.0)).abs() < 1e-15);
    }

    #[test]
    fn small_suites_run() {
        let rows = bernstein_suite(&BernsteinConfig { n: 30, seeds: 2, num_features: vec![16, 256], ..Default::default() }).unwrap();
        assert!(rows[1].error_norm < rows[0].error_norm);
        let power = power_suite(&PowerConfig { n: 100, repetitions: 10, ..Default::default() }).unwrap();
        assert_eq!(power.len(), 3);
        assert!(bernstein_csv(&rows).starts_with("m,"));
        assert!(power_csv(&power).lines().count() == 4);
    }

    #[test]
    fn patterns_parse_by_name() {
        for p in Pattern::ALL {
            assert_eq!(p.name().parse::<Pattern>().unwrap(), p);
        }
        assert!("nope".parse::<Pattern>().is_err());
    }
}
