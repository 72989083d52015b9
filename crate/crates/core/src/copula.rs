//! Empirical cdf and empirical copula transformation.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Data whose columns have been replaced by their empirical cdf values.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedSample {
    values: DMatrix<f64>,
}

impl RankedSample {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }
}

/// `out_i = #{j : v_j ≤ v_i} / n`. Tied values all receive the largest rank
/// of their group.
pub fn ecdf_transform(column: &[f64]) -> Result<Vec<f64>> {
    let n = column.len();
    if n == 0 {
        return Err(Error::InvalidArgument("ecdf of an empty column".into()));
    }
    if let Some(i) = column.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidData(format!("non-finite value {} at index {i}", column[i])));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| column[a].total_cmp(&column[b]));

    let n_f = n as f64;
    let mut out = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && column[order[end]] == column[order[start]] {
            end += 1;
        }
        let rank = end as f64 / n_f;
        for &idx in &order[start..end] {
            out[idx] = rank;
        }
        start = end;
    }
    Ok(out)
}

/// Applies [`ecdf_transform`] to every column of `data` independently.
pub fn copula_transform(data: &DMatrix<f64>) -> Result<RankedSample> {
    let mut values = DMatrix::zeros(data.nrows(), data.ncols());
    for (j, col) in data.column_iter().enumerate() {
        let ranked = ecdf_transform(col.as_slice())?;
        values.column_mut(j).copy_from_slice(&ranked);
    }
    Ok(RankedSample { values })
}
