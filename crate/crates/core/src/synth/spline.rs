//! Natural cubic interpolating splines.

use crate::error::{arg_err, Result};

/// Natural cubic spline through `(knots[i], values[i])`; linear beyond the
/// outer knots.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = knots.len();
        if n < 2 || values.len() != n {
            return Err(arg_err(format!("spline needs ≥ 2 matching knots and values, got {n} and {}", values.len())));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(arg_err("spline knots must be strictly increasing"));
        }
        // Tridiagonal system for the interior second derivatives (Thomas algorithm).
        let mut second = vec![0.0; n];
        if n > 2 {
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut upper = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for i in 0..m {
                let h0 = knots[i + 1] - knots[i];
                let h1 = knots[i + 2] - knots[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((values[i + 2] - values[i + 1]) / h1 - (values[i + 1] - values[i]) / h0);
            }
            for i in 1..m {
                let lower = knots[i + 1] - knots[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                second[i + 1] = (rhs[i] - upper[i] * second[i + 2]) / diag[i];
            }
        }
        Ok(Self { knots, values, second })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        let n = k.len();
        if x <= k[0] {
            return self.values[0] + self.slope_at(0) * (x - k[0]);
        }
        if x >= k[n - 1] {
            return self.values[n - 1] + self.slope_at(n - 1) * (x - k[n - 1]);
        }
        let i = match k.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => return self.values[i],
            Err(i) => i - 1,
        };
        let h = k[i + 1] - k[i];
        let a = (k[i + 1] - x) / h;
        let b = (x - k[i]) / h;
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h / 6.0
    }

    fn slope_at(&self, i: usize) -> f64 {
        let k = &self.knots;
        let v = &self.values;
        let s = &self.second;
        let n = k.len();
        if i == 0 {
            let h = k[1] - k[0];
            (v[1] - v[0]) / h - h * (2.0 * s[0] + s[1]) / 6.0
        } else {
            let h = k[n - 1] - k[n - 2];
            (v[n - 1] - v[n - 2]) / h + h * (s[n - 2] + 2.0 * s[n - 1]) / 6.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_knots() {
        let s = NaturalSpline::new(vec![0.0, 1.0, 2.5, 4.0], vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        for (x, y) in [(0.0, 1.0), (1.0, -2.0), (2.5, 0.5), (4.0, 3.0)] {
            assert!((s.eval(x) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn reproduces_lines_exactly() {
        let knots = vec![-1.0, 0.0, 0.5, 2.0, 3.0];
        let values: Vec<f64> = knots.iter().map(|x| 2.0 * x - 1.0).collect();
        let s = NaturalSpline::new(knots, values).unwrap();
        for x in [-5.0, -0.3, 0.7, 2.9, 10.0] {
            assert!((s.eval(x) - (2.0 * x - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn continuous_with_zero_end_curvature() {
        let s = NaturalSpline::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let e = 1e-7;
        for &x in &[1.0, 2.0] {
            assert!((s.eval(x - e) - s.eval(x + e)).abs() < 1e-5);
        }
        let c = |x: f64| (s.eval(x + 1e-4) - 2.0 * s.eval(x) + s.eval(x - 1e-4)) / 1e-8;
        assert!(c(1e-3).abs() < 0.05);
        assert!(c(3.0 - 1e-3).abs() < 0.05);
    }

    #[test]
    fn rejects_unsorted_knots() {
        assert!(NaturalSpline::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(NaturalSpline::new(vec![0.0], vec![1.0]).is_err());
    }
}
