//! Summary statistics and distribution tails used across the crate.

use statrs::distribution::{Beta, Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};

use crate::error::{arg_err, Result};

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample variance with `n − 1` denominator.
pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
}

pub fn std_dev(v: &[f64]) -> f64 {
    variance(v).sqrt()
}

/// Pearson correlation coefficient of two equal-length slices.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Linear-interpolated empirical quantile (type 7), `q` in `[0, 1]`.
pub fn quantile(v: &[f64], q: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    let h = (s.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

pub fn median(v: &[f64]) -> f64 {
    quantile(v, 0.5)
}

/// Permutation-style p-value `(1 + #{null ≥ observed}) / (1 + B)`.
pub fn exceedance_pvalue(observed: f64, null: &[f64]) -> f64 {
    let hits = null.iter().filter(|v| **v >= observed).count();
    (1 + hits) as f64 / (1 + null.len()) as f64
}

pub fn chi_squared_sf(statistic: f64, dof: f64) -> Result<f64> {
    let dist = ChiSquared::new(dof).map_err(|e| arg_err(format!("chi-square with {dof} dof: {e}")))?;
    Ok(dist.sf(statistic))
}

pub fn beta_cdf(x: f64, alpha: f64, beta: f64) -> Result<f64> {
    let dist = Beta::new(alpha, beta).map_err(|e| arg_err(format!("beta({alpha}, {beta}): {e}")))?;
    Ok(dist.cdf(x))
}

pub fn beta_inverse_cdf(p: f64, alpha: f64, beta: f64) -> Result<f64> {
    let dist = Beta::new(alpha, beta).map_err(|e| arg_err(format!("beta({alpha}, {beta}): {e}")))?;
    Ok(dist.inverse_cdf(p))
}

/// `P[X ≥ k]` for `X ~ Binomial(n, p)`.
pub fn binomial_upper_tail(k: u64, n: u64, p: f64) -> Result<f64> {
    if k == 0 {
        return Ok(1.0);
    }
    let dist = Binomial::new(p, n).map_err(|e| arg_err(format!("binomial({n}, {p}): {e}")))?;
    Ok(dist.sf(k - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let v = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(median(&v), 2.5);
    }

    #[test]
    fn tails() {
        // P[χ²₁ ≥ 3.841459] = 0.05
        assert!((chi_squared_sf(3.841_458_820_694_124, 1.0).unwrap() - 0.05).abs() < 1e-9);
        // P[Bin(10, 0.5) ≥ 8] = 56/1024
        assert!((binomial_upper_tail(8, 10, 0.5).unwrap() - 56.0 / 1024.0).abs() < 1e-12);
        assert!((beta_cdf(0.5, 2.0, 2.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pearson_of_affine_copy() {
        let a = [1.0, 2.0, 4.0, 7.0];
        let b: Vec<f64> = a.iter().map(|x| -3.0 * x + 1.0).collect();
        assert!((pearson(&a, &b) + 1.0).abs() < 1e-12);
        assert_eq!(exceedance_pvalue(5.0, &[1.0, 6.0, 5.0]), 0.75);
    }
}
