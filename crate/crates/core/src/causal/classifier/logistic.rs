//! Multinomial logistic regression with an L2 penalty, fitted by L-BFGS on
//! standardized features.

use serde::{Deserialize, Serialize};

use super::{Dataset, ProbabilisticClassifier};
use crate::error::{arg_err, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    /// Penalty `l2/2 · ‖W‖²` added to the mean negative log-likelihood.
    /// Intercepts are not penalized.
    pub l2: f64,
    pub max_iter: usize,
    /// Stop when the gradient infinity-norm falls below this.
    pub tolerance: f64,
    pub history: usize,
    pub standardize: bool,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self { l2: 1e-3, max_iter: 300, tolerance: 1e-6, history: 10, standardize: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// Class-major: `weights[c * p + f]`.
    weights: Vec<f64>,
    intercepts: Vec<f64>,
    means: Vec<f64>,
    scales: Vec<f64>,
    num_classes: usize,
    iterations: usize,
}

struct Problem<'a> {
    x: &'a [f64],
    labels: &'a [usize],
    n: usize,
    p: usize,
    k: usize,
    l2: f64,
}

impl Problem<'_> {
    fn dim(&self) -> usize {
        self.k * (self.p + 1)
    }

    /// Objective and gradient at `theta = [W (k×p, class-major) | b (k)]`.
    fn eval(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let (k, p) = (self.k, self.p);
        let (w, b) = theta.split_at(k * p);
        grad.fill(0.0);
        let mut loss = 0.0;
        let mut z = vec![0.0; k];
        for i in 0..self.n {
            let row = &self.x[i * p..(i + 1) * p];
            for c in 0..k {
                z[c] = b[c] + dot(&w[c * p..(c + 1) * p], row);
            }
            let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut norm = 0.0;
            for v in &mut z {
                *v = (*v - max).exp();
                norm += *v;
            }
            loss -= (z[self.labels[i]] / norm).ln();
            for c in 0..k {
                let r = z[c] / norm - f64::from(u8::from(c == self.labels[i]));
                grad[k * p + c] += r;
                let g = &mut grad[c * p..(c + 1) * p];
                for (gf, xf) in g.iter_mut().zip(row) {
                    *gf += r * xf;
                }
            }
        }
        let inv_n = 1.0 / self.n as f64;
        loss *= inv_n;
        grad.iter_mut().for_each(|g| *g *= inv_n);
        let mut pen = 0.0;
        for (g, wv) in grad[..k * p].iter_mut().zip(w) {
            *g += self.l2 * wv;
            pen += wv * wv;
        }
        loss + 0.5 * self.l2 * pen
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Limited-memory BFGS with a backtracking Armijo line search. Returns the
/// number of iterations taken.
fn lbfgs(problem: &Problem<'_>, theta: &mut [f64], config: &LogisticConfig) -> Result<usize> {
    let dim = problem.dim();
    let mut grad = vec![0.0; dim];
    let mut f = problem.eval(theta, &mut grad);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut new_theta = vec![0.0; dim];
    let mut new_grad = vec![0.0; dim];
    for iter in 0..config.max_iter {
        if !f.is_finite() {
            return Err(Error::Numerical("logistic objective is not finite".into()));
        }
        if inf_norm(&grad) < config.tolerance {
            return Ok(iter);
        }
        // two-loop recursion
        let mut d: Vec<f64> = grad.iter().map(|g| -g).collect();
        let m = s_hist.len();
        let mut alpha = vec![0.0; m];
        for j in (0..m).rev() {
            let rho = 1.0 / dot(&y_hist[j], &s_hist[j]);
            alpha[j] = rho * dot(&s_hist[j], &d);
            for (dv, yv) in d.iter_mut().zip(&y_hist[j]) {
                *dv -= alpha[j] * yv;
            }
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|v| *v *= gamma);
        } else {
            let scale = 1.0 / inf_norm(&grad).max(1.0);
            d.iter_mut().for_each(|v| *v *= scale);
        }
        for j in 0..m {
            let rho = 1.0 / dot(&y_hist[j], &s_hist[j]);
            let beta = rho * dot(&y_hist[j], &d);
            for (dv, sv) in d.iter_mut().zip(&s_hist[j]) {
                *dv += (alpha[j] - beta) * sv;
            }
        }
        let mut slope = dot(&grad, &d);
        if slope >= 0.0 {
            d = grad.iter().map(|g| -g).collect();
            slope = -dot(&grad, &grad);
            s_hist.clear();
            y_hist.clear();
        }
        let mut step = 1.0;
        let mut new_f;
        loop {
            for ((nt, t), dv) in new_theta.iter_mut().zip(theta.iter()).zip(&d) {
                *nt = t + step * dv;
            }
            new_f = problem.eval(&new_theta, &mut new_grad);
            if new_f.is_finite() && new_f <= f + 1e-4 * step * slope {
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                return Ok(iter);
            }
        }
        let s: Vec<f64> = new_theta.iter().zip(theta.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        theta.copy_from_slice(&new_theta);
        grad.copy_from_slice(&new_grad);
        let converged = (f - new_f).abs() <= 1e-12 * f.abs().max(1.0);
        f = new_f;
        if dot(&s, &y) > 1e-12 {
            if s_hist.len() == config.history {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
        }
        if converged {
            return Ok(iter + 1);
        }
    }
    Ok(config.max_iter)
}

impl LogisticModel {
    pub fn fit(config: &LogisticConfig, data: &Dataset) -> Result<Self> {
        if !(config.l2 >= 0.0) || config.history == 0 {
            return Err(arg_err("logistic regression needs l2 >= 0 and a positive history"));
        }
        if data.is_empty() {
            return Err(Error::Fit("empty training set".into()));
        }
        let n = data.len();
        let p = data.num_features();
        let k = data.num_classes();
        let mut means = vec![0.0; p];
        let mut scales = vec![1.0; p];
        if config.standardize {
            for i in 0..n {
                for (m, v) in means.iter_mut().zip(data.row(i)) {
                    *m += v;
                }
            }
            means.iter_mut().for_each(|m| *m /= n as f64);
            let mut var = vec![0.0; p];
            for i in 0..n {
                for ((s, v), m) in var.iter_mut().zip(data.row(i)).zip(&means) {
                    *s += (v - m) * (v - m);
                }
            }
            for (s, v) in scales.iter_mut().zip(var) {
                let sd = (v / n as f64).sqrt();
                *s = if sd > 1e-12 { sd } else { 1.0 };
            }
        }
        let mut x = Vec::with_capacity(n * p);
        for i in 0..n {
            x.extend(data.row(i).iter().zip(&means).zip(&scales).map(|((v, m), s)| (v - m) / s));
        }
        let problem = Problem { x: &x, labels: data.labels(), n, p, k, l2: config.l2 };
        let mut theta = vec![0.0; problem.dim()];
        let iterations = lbfgs(&problem, &mut theta, config)?;
        let intercepts = theta.split_off(k * p);
        Ok(Self { weights: theta, intercepts, means, scales, num_classes: k, iterations })
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

impl ProbabilisticClassifier for LogisticModel {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn predict_proba(&self, features: &[f64]) -> Vec<f64> {
        let p = self.means.len();
        assert_eq!(features.len(), p, "feature vector length");
        let x: Vec<f64> = features.iter().zip(&self.means).zip(&self.scales).map(|((v, m), s)| (v - m) / s).collect();
        let mut z: Vec<f64> =
            (0..self.num_classes).map(|c| self.intercepts[c] + dot(&self.weights[c * p..(c + 1) * p], &x)).collect();
        let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut norm = 0.0;
        for v in &mut z {
            *v = (*v - max).exp();
            norm += *v;
        }
        z.iter_mut().for_each(|v| *v /= norm);
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_matches_finite_differences() {
        let data = crate::causal::classifier::test_data::blobs(30, 3, 3, 1.0, 5);
        let x: Vec<f64> = (0..data.len()).flat_map(|i| data.row(i).to_vec()).collect();
        let problem = Problem { x: &x, labels: data.labels(), n: data.len(), p: 3, k: 3, l2: 0.1 };
        let theta: Vec<f64> = (0..problem.dim()).map(|i| 0.1 * (i as f64).sin()).collect();
        let mut g = vec![0.0; problem.dim()];
        problem.eval(&theta, &mut g);
        let mut scratch = vec![0.0; problem.dim()];
        for j in 0..problem.dim() {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[j] += 1e-6;
            tm[j] -= 1e-6;
            let fd = (problem.eval(&tp, &mut scratch) - problem.eval(&tm, &mut scratch)) / 2e-6;
            assert!((fd - g[j]).abs() < 1e-6, "coordinate {j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn separable_data_converges_with_penalty() {
        let mut data = Dataset::new(1, 2);
        for i in 0..20 {
            let v = i as f64 - 9.5;
            data.push(&[v], usize::from(v > 0.0)).unwrap();
        }
        let model = LogisticModel::fit(&LogisticConfig::default(), &data).unwrap();
        assert!(model.iterations() < 300);
        assert!(model.predict_proba(&[5.0])[1] > 0.9);
        assert!(model.predict_proba(&[-5.0])[0] > 0.9);
    }

    #[test]
    fn uninformative_features_give_class_priors() {
        let mut data = Dataset::new(2, 2);
        for i in 0..40 {
            data.push(&[1.0, 2.0], usize::from(i % 4 == 0)).unwrap();
        }
        let model = LogisticModel::fit(&LogisticConfig::default(), &data).unwrap();
        let p = model.predict_proba(&[1.0, 2.0]);
        assert!((p[1] - 0.25).abs() < 1e-4, "{p:?}");
    }
}
