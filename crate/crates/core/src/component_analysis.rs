//! Linear CCA, random-feature PCA and CCA, and partial CCA.
//!
//! CCA is computed by whitening each view through its thin SVD. With
//! standardized data `X = U S Vᵀ` and `C_xx = V S² Vᵀ / (n − 1)`, the ridge
//! whitened scores are `U · diag(sqrt(λ / (λ + ridge)))` where `λ = s²/(n−1)`.
//! The canonical correlations are the singular values of the product of the
//! two whitened score matrices, which keeps them inside `[0, 1]` up to
//! rounding even for nearly collinear random features.

use nalgebra::{DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, shape_err, Error, Result};
use crate::linalg::{center, ensure_finite, sorted_symmetric_eigen, standardize};
use crate::rff::{apply_features, FeatureBank};

/// Ridge used when the caller has no opinion.
pub const DEFAULT_RIDGE: f64 = 1e-8;

/// Canonical correlations outside `[0, 1]` by at most this much are clamped.
pub const CLAMP_TOLERANCE: f64 = 1e-8;

/// Relative singular value below which an unregularized covariance is
/// reported as singular.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcaResult {
    /// Canonical correlations, descending.
    pub correlations: DVector<f64>,
    /// `p × r` projection weights for the first view, in input units.
    pub basis_x: DMatrix<f64>,
    /// `q × r` projection weights for the second view, in input units.
    pub basis_y: DMatrix<f64>,
    pub regularizer: f64,
}

impl CcaResult {
    /// Largest canonical correlation, or 0 when there is none.
    pub fn top(&self) -> f64 {
        self.correlations.iter().copied().next().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    /// `m × r`, orthonormal columns.
    pub components: DMatrix<f64>,
    pub explained_variance: DVector<f64>,
    pub mean: DVector<f64>,
    /// Trace of the full feature covariance.
    pub total_variance: f64,
}

impl PcaResult {
    /// Projects already-featurized rows onto the components.
    pub fn project(&self, features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if features.ncols() != self.mean.len() {
            return Err(shape_err(format!(
                "features have {} columns, model expects {}",
                features.ncols(),
                self.mean.len()
            )));
        }
        let mut centered = features.clone();
        for (j, mut col) in centered.column_iter_mut().enumerate() {
            let m = self.mean[j];
            col.apply(|v| *v -= m);
        }
        Ok(centered * &self.components)
    }
}

struct Whitened {
    /// `n × k` whitened scores.
    scores: DMatrix<f64>,
    /// `p × k` map from centered/standardized coordinates to scores.
    transform: DMatrix<f64>,
}

fn whiten(data: &DMatrix<f64>, ridge: f64, view: &str) -> Result<Whitened> {
    let n = data.nrows();
    let p = data.ncols();
    let dof = (n - 1) as f64;
    let svd = SVD::new(data.clone(), true, true);
    let u = svd.u.ok_or_else(|| Error::Numerical("SVD did not return U".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::Numerical("SVD did not return Vᵀ".into()))?;
    let s = svd.singular_values;
    let s_max = s.iter().fold(0.0_f64, |a, b| a.max(*b));
    let k = s.len();
    if ridge == 0.0 && (k < p || s.iter().any(|v| *v <= RANK_TOLERANCE * s_max) || s_max == 0.0) {
        return Err(Error::NumericalRank(format!("{view} covariance is singular and ridge is zero")));
    }
    let mut scores = u;
    let mut transform = v_t.transpose();
    for i in 0..k {
        let lambda = s[i] * s[i] / dof;
        let denom = (lambda + ridge).sqrt();
        let factor = if denom > 0.0 { lambda.sqrt() / denom } else { 0.0 };
        scores.column_mut(i).scale_mut(factor);
        let t = if denom > 0.0 { 1.0 / (denom * dof.sqrt()) } else { 0.0 };
        transform.column_mut(i).scale_mut(t);
    }
    Ok(Whitened { scores, transform })
}

fn check_pair(x: &DMatrix<f64>, y: &DMatrix<f64>, ridge: f64) -> Result<()> {
    if x.nrows() != y.nrows() {
        return Err(shape_err(format!("views have {} and {} rows", x.nrows(), y.nrows())));
    }
    if x.nrows() < 2 {
        return Err(arg_err(format!("CCA needs at least 2 observations, got {}", x.nrows())));
    }
    if x.ncols() == 0 || y.ncols() == 0 {
        return Err(shape_err("CCA views need at least one column"));
    }
    if !(ridge >= 0.0) || !ridge.is_finite() {
        return Err(arg_err(format!("ridge must be finite and nonnegative, got {ridge}")));
    }
    ensure_finite(x, "x")?;
    ensure_finite(y, "y")
}

fn clamp_unit(v: f64) -> Result<f64> {
    if v > 1.0 + CLAMP_TOLERANCE || v < -CLAMP_TOLERANCE || !v.is_finite() {
        return Err(Error::Numerical(format!("canonical correlation {v} outside [0, 1]")));
    }
    Ok(v.clamp(0.0, 1.0))
}

/// CCA of two prepared (centered) views; `scales` undo the standardization
/// when reporting the bases.
fn cca_prepared(
    xs: &DMatrix<f64>,
    ys: &DMatrix<f64>,
    scales_x: &DVector<f64>,
    scales_y: &DVector<f64>,
    ridge: f64,
) -> Result<CcaResult> {
    let wx = whiten(xs, ridge, "x")?;
    let wy = whiten(ys, ridge, "y")?;
    let cross = wx.scores.transpose() * &wy.scores;
    let svd = SVD::new(cross, true, true);
    let a = svd.u.ok_or_else(|| Error::Numerical("SVD did not return U".into()))?;
    let b = svd.v_t.ok_or_else(|| Error::Numerical("SVD did not return Vᵀ".into()))?.transpose();

    let r = xs.ncols().min(ys.ncols()).min(svd.singular_values.len());
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    order.truncate(r);

    let correlations = order
        .iter()
        .map(|&i| clamp_unit(svd.singular_values[i]))
        .collect::<Result<Vec<_>>>()?;
    let a_sorted = DMatrix::from_columns(&order.iter().map(|&i| a.column(i)).collect::<Vec<_>>());
    let b_sorted = DMatrix::from_columns(&order.iter().map(|&i| b.column(i)).collect::<Vec<_>>());
    let mut basis_x = &wx.transform * a_sorted;
    let mut basis_y = &wy.transform * b_sorted;
    for (i, mut row) in basis_x.row_iter_mut().enumerate() {
        row /= scales_x[i];
    }
    for (i, mut row) in basis_y.row_iter_mut().enumerate() {
        row /= scales_y[i];
    }
    Ok(CcaResult {
        correlations: DVector::from_vec(correlations),
        basis_x,
        basis_y,
        regularizer: ridge,
    })
}

/// Canonical correlation analysis of `x` (n × p) and `y` (n × q) with
/// covariance ridge `ridge` applied to the standardized views.
pub fn cca(x: &DMatrix<f64>, y: &DMatrix<f64>, ridge: f64) -> Result<CcaResult> {
    check_pair(x, y, ridge)?;
    let sx = standardize(x);
    let sy = standardize(y);
    cca_prepared(&sx.data, &sy.data, &sx.scales, &sy.scales, ridge)
}

/// CCA on the random features of each view.
pub fn rcca(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    bank_x: &FeatureBank,
    bank_y: &FeatureBank,
    ridge: f64,
) -> Result<CcaResult> {
    let fx = apply_features(bank_x, x)?;
    let fy = apply_features(bank_y, y)?;
    cca(&fx, &fy, ridge)
}

/// Removes from `data` its ridge least-squares fit on `z` (both standardized).
fn residualize(data: &DMatrix<f64>, z: &DMatrix<f64>, ridge: f64) -> Result<DMatrix<f64>> {
    let dof = (z.nrows() - 1) as f64;
    let mut czz = z.transpose() * z / dof;
    for i in 0..czz.nrows() {
        czz[(i, i)] += ridge;
    }
    let czx = z.transpose() * data / dof;
    let coef = match czz.clone().cholesky() {
        Some(ch) => ch.solve(&czx),
        None => {
            if ridge == 0.0 {
                return Err(Error::NumericalRank("z covariance is singular and ridge is zero".into()));
            }
            // ridge > 0 makes czz positive definite, so this is rounding trouble
            czz.clone().lu()
                .solve(&czx)
                .ok_or_else(|| Error::Numerical("conditioning regression failed".into()))?
        }
    };
    if ridge == 0.0 {
        let s = czz.singular_values();
        let s_max = s.iter().fold(0.0_f64, |a, b| a.max(*b));
        if s.iter().any(|v| *v <= RANK_TOLERANCE * s_max) {
            return Err(Error::NumericalRank("z covariance is singular and ridge is zero".into()));
        }
    }
    Ok(data - z * coef)
}

/// Partial CCA: canonical correlations of `x` and `y` after removing the
/// linear effect of `z`. With ridge zero the partial covariances are exactly
/// `C_ij − C_iz C_zz⁻¹ C_zj`. A `z` with no columns reduces to [`cca`].
pub fn partial_cca(x: &DMatrix<f64>, y: &DMatrix<f64>, z: &DMatrix<f64>, ridge: f64) -> Result<CcaResult> {
    check_pair(x, y, ridge)?;
    if z.nrows() != x.nrows() {
        return Err(shape_err(format!("conditioning view has {} rows, expected {}", z.nrows(), x.nrows())));
    }
    if z.ncols() == 0 {
        return cca(x, y, ridge);
    }
    ensure_finite(z, "z")?;
    let sx = standardize(x);
    let sy = standardize(y);
    let sz = standardize(z);
    let rx = residualize(&sx.data, &sz.data, ridge)?;
    let ry = residualize(&sy.data, &sz.data, ridge)?;
    cca_prepared(&rx, &ry, &sx.scales, &sy.scales, ridge)
}

/// PCA of the random-feature matrix `apply_features(bank, x)`.
pub fn rpca(x: &DMatrix<f64>, bank: &FeatureBank, num_components: usize) -> Result<PcaResult> {
    if num_components == 0 || num_components > bank.num_features() {
        return Err(arg_err(format!(
            "num_components must be in 1..={}, got {num_components}",
            bank.num_features()
        )));
    }
    if x.nrows() < 2 {
        return Err(arg_err("PCA needs at least 2 observations"));
    }
    ensure_finite(x, "x")?;
    let z = apply_features(bank, x)?;
    let (zc, mean) = center(&z);
    let cov = zc.transpose() * &zc / (x.nrows() - 1) as f64;
    let total_variance = cov.trace();
    let (values, vectors) = sorted_symmetric_eigen(cov);
    let floor = 1e-12 * values[0].abs().max(f64::MIN_POSITIVE);
    let explained_variance = DVector::from_iterator(
        num_components,
        values.iter().take(num_components).map(|v| if *v <= floor { 0.0 } else { *v }),
    );
    let components = vectors.columns(0, num_components).into_owned();
    Ok(PcaResult { components, explained_variance, mean, total_variance })
}
