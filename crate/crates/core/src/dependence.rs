//! The randomized dependence coefficient (RDC) and its hypothesis tests.
//!
//! RDC is the largest canonical correlation between random Fourier features
//! of the empirical copula transforms of two samples. Each view gets its own
//! bank with bandwidth `γ = bandwidth_scale / d`, where `d` is the view's
//! dimensionality. Banks are derived from `config.seed` by view index, so the
//! coefficient is a pure function of the data ranks and the seed.

use nalgebra::DMatrix;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::component_analysis::{cca, partial_cca, DEFAULT_RIDGE};
use crate::copula::copula_transform;
use crate::error::{arg_err, shape_err, Error, Result};
use crate::rff::{apply_features, sample_bank};
use crate::seed;
use crate::stats;

const STREAM_X: u64 = 0;
const STREAM_Y: u64 = 1;
const STREAM_Z: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdcConfig {
    /// Random features per view.
    pub num_features: usize,
    /// `s` in `γ = s / d`.
    pub bandwidth_scale: f64,
    pub ridge: f64,
    pub seed: u64,
}

impl Default for RdcConfig {
    fn default() -> Self {
        Self { num_features: 20, bandwidth_scale: 1.0 / 6.0, ridge: DEFAULT_RIDGE, seed: 0 }
    }
}

impl RdcConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.num_features == 0 {
            return Err(arg_err("RDC needs at least one random feature"));
        }
        if !(self.bandwidth_scale > 0.0) || !self.bandwidth_scale.is_finite() {
            return Err(arg_err(format!("bandwidth scale must be positive, got {}", self.bandwidth_scale)));
        }
        Ok(())
    }
}

/// RDC value together with the full canonical correlation vector it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdcReport {
    pub value: f64,
    pub correlations: Vec<f64>,
    pub sample_size: usize,
}

fn copula_features(view: &DMatrix<f64>, config: &RdcConfig, stream: u64) -> Result<DMatrix<f64>> {
    let ranked = copula_transform(view)?;
    let d = view.ncols();
    let bank = sample_bank(d, config.num_features, config.bandwidth_scale / d as f64, seed::derive(config.seed, stream))?;
    apply_features(&bank, ranked.values())
}

fn check_views(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<()> {
    if x.nrows() != y.nrows() {
        return Err(shape_err(format!("samples have {} and {} rows", x.nrows(), y.nrows())));
    }
    if x.nrows() < 3 {
        return Err(arg_err(format!("RDC needs at least 3 observations, got {}", x.nrows())));
    }
    if x.ncols() == 0 || y.ncols() == 0 {
        return Err(shape_err("RDC views need at least one column"));
    }
    Ok(())
}

/// Full RDC computation, keeping every canonical correlation.
pub fn rdc_report(x: &DMatrix<f64>, y: &DMatrix<f64>, config: &RdcConfig) -> Result<RdcReport> {
    config.validate()?;
    check_views(x, y)?;
    let fx = copula_features(x, config, STREAM_X)?;
    let fy = copula_features(y, config, STREAM_Y)?;
    let res = cca(&fx, &fy, config.ridge)?;
    Ok(RdcReport {
        value: res.top().clamp(0.0, 1.0),
        correlations: res.correlations.iter().copied().collect(),
        sample_size: x.nrows(),
    })
}

/// Randomized dependence coefficient of `x` (n × p) and `y` (n × q).
pub fn rdc(x: &DMatrix<f64>, y: &DMatrix<f64>, config: &RdcConfig) -> Result<f64> {
    rdc_report(x, y, config).map(|r| r.value)
}

/// RDC of `x` and `y` given `z`: the largest partial canonical correlation of
/// the three random feature maps. A `z` without columns gives [`rdc`].
pub fn conditional_rdc(x: &DMatrix<f64>, y: &DMatrix<f64>, z: &DMatrix<f64>, config: &RdcConfig) -> Result<f64> {
    config.validate()?;
    check_views(x, y)?;
    if z.nrows() != x.nrows() {
        return Err(shape_err(format!("conditioning sample has {} rows, expected {}", z.nrows(), x.nrows())));
    }
    if z.ncols() == 0 {
        return rdc(x, y, config);
    }
    let fx = copula_features(x, config, STREAM_X)?;
    let fy = copula_features(y, config, STREAM_Y)?;
    let fz = copula_features(z, config, STREAM_Z)?;
    Ok(partial_cca(&fx, &fy, &fz, config.ridge)?.top().clamp(0.0, 1.0))
}

/// Bartlett's chi-square approximation of the null of `k` canonical
/// correlations from `n` observations:
/// `((2k + 3)/2 − n) · ln Π(1 − ρᵢ²) ~ χ²(k²)`.
pub fn bartlett_statistic(correlations: &[f64], n: usize) -> Result<f64> {
    let k = correlations.len();
    if k == 0 {
        return Err(arg_err("Bartlett test needs at least one correlation"));
    }
    if n <= k {
        return Err(arg_err(format!("Bartlett test needs n > k, got n={n}, k={k}")));
    }
    if let Some(r) = correlations.iter().find(|r| !(0.0..1.0).contains(*r)) {
        return Err(arg_err(format!("canonical correlation {r} outside [0, 1)")));
    }
    let log_prod: f64 = correlations.iter().map(|r| (-r * r).ln_1p()).sum();
    let stat = ((2 * k + 3) as f64 / 2.0 - n as f64) * log_prod;
    // log_prod ≤ 0 and the prefactor is negative, so stat ≥ 0 up to -0.0
    Ok(stat.max(0.0))
}

/// Upper-tail p-value of [`bartlett_statistic`].
pub fn bartlett_pvalue(correlations: &[f64], n: usize) -> Result<f64> {
    let stat = bartlett_statistic(correlations, n)?;
    let k = correlations.len() as f64;
    stats::chi_squared_sf(stat, k * k)
}

/// Permutation p-value of `rdc(x, y)`: `y` rows are shuffled `replicates`
/// times (seeded by `perm_seed`) while the feature banks stay fixed.
pub fn permutation_pvalue(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    config: &RdcConfig,
    replicates: usize,
    perm_seed: u64,
) -> Result<f64> {
    let observed = rdc(x, y, config)?;
    let null = permutation_null(x, y, config, replicates, perm_seed)?;
    Ok(stats::exceedance_pvalue(observed, &null))
}

/// RDC values of `x` against row-permuted copies of `y`.
pub fn permutation_null(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    config: &RdcConfig,
    replicates: usize,
    perm_seed: u64,
) -> Result<Vec<f64>> {
    if replicates == 0 {
        return Err(arg_err("need at least one permutation"));
    }
    let n = y.nrows();
    (0..replicates)
        .map(|r| {
            let mut rng = seed::stream(perm_seed, r as u64);
            let mut order: Vec<usize> = (0..n).collect();
            shuffle(&mut order, &mut rng);
            let yp = y.select_rows(order.iter());
            rdc(x, &yp, config)
        })
        .collect()
}

pub(crate) fn shuffle<T>(items: &mut [T], rng: &mut seed::Rng) {
    use rand::seq::SliceRandom;
    items.shuffle(rng);
}

/// Beta approximation of the RDC null distribution for scalar samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullModel {
    pub beta_alpha: f64,
    pub beta_beta: f64,
    pub sample_size: usize,
    pub replicates: usize,
}

impl NullModel {
    /// Method-of-moments Beta fit to simulated null values.
    pub fn from_samples(values: &[f64], sample_size: usize) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Fit("need at least two null values".into()));
        }
        let mu = stats::mean(values);
        let var = stats::variance(values);
        if !(var > 0.0) {
            return Err(Error::Fit("simulated null has zero variance".into()));
        }
        let common = mu * (1.0 - mu) / var - 1.0;
        if !(common > 0.0) || !(mu > 0.0 && mu < 1.0) {
            return Err(Error::Fit(format!("moments (mean {mu}, variance {var}) admit no Beta fit")));
        }
        Ok(Self {
            beta_alpha: mu * common,
            beta_beta: (1.0 - mu) * common,
            sample_size,
            replicates: values.len(),
        })
    }

    pub fn mean(&self) -> f64 {
        self.beta_alpha / (self.beta_alpha + self.beta_beta)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        stats::beta_cdf(x, self.beta_alpha, self.beta_beta)
    }

    /// Upper-tail p-value of an observed RDC.
    pub fn pvalue(&self, rdc_value: f64) -> Result<f64> {
        Ok(1.0 - self.cdf(rdc_value)?)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        stats::beta_inverse_cdf(p, self.beta_alpha, self.beta_beta)
    }
}

/// RDC values on `replicates` independent pairs of scalar uniform samples of
/// size `n`. Replicate `r` draws its data and banks from streams of
/// `config.seed`.
pub fn simulate_null(n: usize, replicates: usize, config: &RdcConfig) -> Result<Vec<f64>> {
    (0..replicates)
        .map(|r| {
            let rep_seed = seed::derive(config.seed, r as u64);
            let mut rng = seed::stream(rep_seed, 0);
            let x = DMatrix::from_fn(n, 1, |_, _| rng.random::<f64>());
            let y = DMatrix::from_fn(n, 1, |_, _| rng.random::<f64>());
            rdc(&x, &y, &config.with_seed(seed::derive(rep_seed, 1)))
        })
        .collect()
}

/// Simulates the scalar RDC null at sample size `n` and fits a Beta to it.
pub fn fit_null_beta(n: usize, replicates: usize, config: &RdcConfig) -> Result<NullModel> {
    if replicates < 100 {
        return Err(arg_err(format!("null fit needs at least 100 replicates, got {replicates}")));
    }
    let values = simulate_null(n, replicates, config)?;
    NullModel::from_samples(&values, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    fn sample(n: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut rng = seed::rng(seed);
        let x = DMatrix::from_fn(n, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DMatrix::from_fn(n, 1, |i, _| x[(i, 0)].powi(2) + 0.1 * rng.sample::<f64, _>(StandardNormal));
        (x, y)
    }

    #[test]
    fn defaults() {
        let c = RdcConfig::default();
        assert_eq!(c.num_features, 20);
        assert!((c.bandwidth_scale - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(c.ridge, 1e-8);
    }

    #[test]
    fn identical_samples_score_high() {
        let (x, _) = sample(500, 1);
        assert!(rdc(&x, &x, &RdcConfig::default()).unwrap() >= 0.95);
    }

    #[test]
    fn monotone_maps_leave_rdc_bit_identical() {
        let (x, y) = sample(300, 2);
        let ex = x.map(f64::exp);
        let cy = y.map(|v| v * v * v + v);
        let c = RdcConfig::default().with_seed(9);
        assert_eq!(rdc(&x, &y, &c).unwrap().to_bits(), rdc(&ex, &cy, &c).unwrap().to_bits());
    }

    #[test]
    fn nan_is_rejected() {
        let (mut x, y) = sample(10, 3);
        x[(4, 0)] = f64::NAN;
        assert!(matches!(rdc(&x, &y, &RdcConfig::default()), Err(Error::InvalidData(_))));
    }

    #[test]
    fn empty_conditioning_set() {
        let (x, y) = sample(200, 4);
        let z = DMatrix::zeros(200, 0);
        let c = RdcConfig::default();
        assert_eq!(conditional_rdc(&x, &y, &z, &c).unwrap(), rdc(&x, &y, &c).unwrap());
    }

    #[test]
    fn bartlett_examples() {
        assert_eq!(bartlett_pvalue(&[0.0, 0.0, 0.0], 50).unwrap(), 1.0);
        // (2.5 − 100) · ln(0.91) and its χ²₁ tail, from scipy.stats.chi2.sf
        let stat = bartlett_statistic(&[0.3], 100).unwrap();
        assert!((stat - 9.195_291_248_446).abs() < 1e-9, "{stat}");
        let p = bartlett_pvalue(&[0.3], 100).unwrap();
        assert!((p - 0.002_426_384_804_622).abs() < 1e-9, "{p}");
        assert!(bartlett_pvalue(&[0.35], 100).unwrap() < p);
        assert!(bartlett_pvalue(&[1.0], 100).is_err());
        assert!(bartlett_pvalue(&[0.1, 0.2], 2).is_err());
    }

    #[test]
    fn null_fit_matches_moments_and_is_deterministic() {
        let c = RdcConfig::default().with_seed(5);
        let values = simulate_null(100, 150, &c).unwrap();
        let model = fit_null_beta(100, 150, &c).unwrap();
        assert!((model.mean() - stats::mean(&values)).abs() < 1e-9);
        assert_eq!(model, fit_null_beta(100, 150, &c).unwrap());
        assert!(model.beta_alpha > 0.0 && model.beta_beta > 0.0);
        assert!(fit_null_beta(100, 10, &c).is_err());
        assert!(NullModel::from_samples(&[0.3, 0.3, 0.3], 10).is_err());
    }
}
