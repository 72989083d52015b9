//! Kernel mean embeddings, MMD, and randomized MMD.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, shape_err, Result};
use crate::rff::{apply_features, gaussian_kernel, row_vec, FeatureBank};

/// Random-feature mean embedding of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanEmbedding {
    pub vector: DVector<f64>,
    pub bank_seed: u64,
    pub bandwidth: f64,
    pub sample_size: usize,
}

/// Row mean of `apply_features(bank, sample)`.
pub fn mean_embed(sample: &DMatrix<f64>, bank: &FeatureBank) -> Result<MeanEmbedding> {
    if sample.nrows() == 0 {
        return Err(arg_err("cannot embed an empty sample"));
    }
    let z = apply_features(bank, sample)?;
    let n = sample.nrows() as f64;
    let vector = DVector::from_iterator(z.ncols(), z.column_iter().map(|c| c.sum() / n));
    Ok(MeanEmbedding { vector, bank_seed: bank.seed(), bandwidth: bank.bandwidth(), sample_size: sample.nrows() })
}

fn check_samples(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<()> {
    if x.nrows() == 0 || y.nrows() == 0 {
        return Err(arg_err("MMD needs two nonempty samples"));
    }
    if x.ncols() != y.ncols() {
        return Err(shape_err(format!("samples have {} and {} columns", x.ncols(), y.ncols())));
    }
    Ok(())
}

fn mean_kernel(a: &[Vec<f64>], b: &[Vec<f64>], bandwidth: f64) -> f64 {
    let mut total = 0.0;
    for u in a {
        for v in b {
            total += gaussian_kernel(u, v, bandwidth);
        }
    }
    total / (a.len() * b.len()) as f64
}

/// Biased (V-statistic) squared MMD under the Gaussian kernel
/// `exp(-bandwidth · ‖u − v‖²)`.
pub fn mmd2(x: &DMatrix<f64>, y: &DMatrix<f64>, bandwidth: f64) -> Result<f64> {
    check_samples(x, y)?;
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(arg_err(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if x == y {
        return Ok(0.0);
    }
    let xr: Vec<Vec<f64>> = (0..x.nrows()).map(|i| row_vec(x, i)).collect();
    let yr: Vec<Vec<f64>> = (0..y.nrows()).map(|i| row_vec(y, i)).collect();
    let kxx = mean_kernel(&xr, &xr, bandwidth);
    let kyy = mean_kernel(&yr, &yr, bandwidth);
    // the cross term is symmetric; order it so mmd2(x, y) and mmd2(y, x) agree bitwise
    let kxy = if (x.nrows(), x.as_slice()) <= (y.nrows(), y.as_slice()) {
        mean_kernel(&xr, &yr, bandwidth)
    } else {
        mean_kernel(&yr, &xr, bandwidth)
    };
    let (lo, hi) = if kxx <= kyy { (kxx, kyy) } else { (kyy, kxx) };
    Ok((lo + hi - 2.0 * kxy).max(0.0))
}

/// Randomized squared MMD `‖mean_embed(x) − mean_embed(y)‖²`.
pub fn rmmd2(x: &DMatrix<f64>, y: &DMatrix<f64>, bank: &FeatureBank) -> Result<f64> {
    check_samples(x, y)?;
    let ex = mean_embed(x, bank)?;
    let ey = mean_embed(y, bank)?;
    Ok((ex.vector - ey.vector).norm_squared())
}

/// Permutation p-value of `rmmd2(x, y)`. The pooled sample is featurized
/// once; each replicate reassigns rows to the two groups with a shuffle drawn
/// from stream `r` of `perm_seed`. Returns `(observed, p_value)` with the
/// `(1 + #{null ≥ observed}) / (1 + replicates)` convention.
pub fn rmmd_permutation_test(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    bank: &FeatureBank,
    replicates: usize,
    perm_seed: u64,
) -> Result<(f64, f64)> {
    check_samples(x, y)?;
    if replicates == 0 {
        return Err(arg_err("need at least one permutation"));
    }
    let observed = rmmd2(x, y, bank)?;
    let pooled = DMatrix::from_fn(x.nrows() + y.nrows(), x.ncols(), |i, j| {
        if i < x.nrows() {
            x[(i, j)]
        } else {
            y[(i - x.nrows(), j)]
        }
    });
    let z = apply_features(bank, &pooled)?;
    let nx = x.nrows();
    let total = pooled.nrows();
    let mut order: Vec<usize> = (0..total).collect();
    let mut null = Vec::with_capacity(replicates);
    for r in 0..replicates {
        crate::dependence::shuffle(&mut order, &mut crate::seed::stream(perm_seed, r as u64));
        let mut ex = DVector::zeros(z.ncols());
        let mut ey = DVector::zeros(z.ncols());
        for (pos, &row) in order.iter().enumerate() {
            if pos < nx {
                ex += z.row(row).transpose();
            } else {
                ey += z.row(row).transpose();
            }
        }
        let d = ex / nx as f64 - ey / (total - nx) as f64;
        null.push(d.norm_squared());
    }
    Ok((observed, crate::stats::exceedance_pvalue(observed, &null)))
}
