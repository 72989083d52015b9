//! Small dense helpers shared by the component-analysis routines.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Column means and sample standard deviations (n − 1 denominator).
/// Columns with zero spread report a placeholder scale of 1.
pub(crate) fn column_moments(x: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
    let n = x.nrows() as f64;
    let means = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n));
    let scales = DVector::from_iterator(
        x.ncols(),
        x.column_iter().zip(means.iter()).map(|(c, m)| {
            let ss: f64 = c.iter().map(|v| (v - m) * (v - m)).sum();
            let sd = (ss / (n - 1.0)).sqrt();
            if sd > 0.0 && sd.is_finite() {
                sd
            } else {
                1.0
            }
        }),
    );
    (means, scales)
}

pub(crate) struct Standardized {
    pub data: DMatrix<f64>,
    pub scales: DVector<f64>,
}

/// Zero-mean, unit-variance columns. Constant columns become exactly zero.
pub(crate) fn standardize(x: &DMatrix<f64>) -> Standardized {
    let (means, scales) = column_moments(x);
    let mut data = x.clone();
    for (j, mut col) in data.column_iter_mut().enumerate() {
        let (m, s) = (means[j], scales[j]);
        let constant = col.iter().all(|v| *v == col[0]);
        if constant {
            col.fill(0.0);
        } else {
            col.apply(|v| *v = (*v - m) / s);
        }
    }
    Standardized { data, scales }
}

pub(crate) fn center(x: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let (means, _) = column_moments(x);
    let mut data = x.clone();
    for (j, mut col) in data.column_iter_mut().enumerate() {
        let m = means[j];
        col.apply(|v| *v -= m);
    }
    (data, means)
}

pub(crate) fn ensure_finite(x: &DMatrix<f64>, what: &str) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::InvalidData(format!(
            "{what} has a non-finite entry at row {}, column {}",
            k % x.nrows().max(1),
            k / x.nrows().max(1)
        ))),
        None => Ok(()),
    }
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted
/// descending and eigenvectors permuted to match.
pub(crate) fn sorted_symmetric_eigen(a: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    (values, vectors)
}

/// Spectral norm of a symmetric matrix (largest absolute eigenvalue).
pub fn symmetric_spectral_norm(a: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.clone())
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardize_handles_constant_columns() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let s = standardize(&x);
        assert!(s.data.column(1).iter().all(|v| *v == 0.0));
        assert_eq!(s.scales[1], 1.0);
        assert!((s.data.column(0).sum()).abs() < 1e-15);
        assert!((s.data.column(0).norm_squared() / 2.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -3.0, 2.0]));
        assert_eq!(symmetric_spectral_norm(&a), 3.0);
        let (vals, _) = sorted_symmetric_eigen(a);
        assert_eq!(vals.as_slice(), &[2.0, 1.0, -3.0]);
    }
}
