//! Elastic net (cyclic coordinate descent) and logistic regression (batch
//! gradient descent). Both fit on standardized columns and report
//! coefficients in the original feature space.

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnStats, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticNetParams {
    pub l1: f64,
    pub l2: f64,
    pub max_sweeps: usize,
    /// Stop once the largest coefficient change in a sweep falls below this.
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Sweeps (elastic net) or iterations (logistic) actually run.
    pub iterations: usize,
}

impl LinearFit {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(row)
                .map(|(w, x)| w * x)
                .sum::<f64>()
    }

    /// Map coefficients learned on standardized columns back to raw units.
    fn from_standardized(w: Vec<f64>, b: f64, stats: &ColumnStats, iterations: usize) -> Self {
        let coefficients: Vec<f64> = w
            .iter()
            .zip(&stats.stds)
            .map(|(w, s)| if *s > 0.0 { w / s } else { 0.0 })
            .collect();
        let intercept = b - coefficients
            .iter()
            .zip(&stats.means)
            .map(|(w, m)| w * m)
            .sum::<f64>();
        LinearFit {
            coefficients,
            intercept,
            iterations,
        }
    }
}

fn soft_threshold(value: f64, lambda: f64) -> f64 {
    if value > lambda {
        value - lambda
    } else if value < -lambda {
        value + lambda
    } else {
        0.0
    }
}

/// ½·MSE + l1·‖w‖₁ + ½·l2·‖w‖₂² for centered inputs with intercept `b`.
pub fn elastic_net_objective(z: &Matrix, y: &[f64], w: &[f64], b: f64, params: &ElasticNetParams) -> f64 {
    let n = z.n_rows() as f64;
    let sse: f64 = z
        .iter_rows()
        .zip(y)
        .map(|(row, yi)| {
            let pred = b + row.iter().zip(w).map(|(x, w)| x * w).sum::<f64>();
            (yi - pred).powi(2)
        })
        .sum();
    let l1: f64 = w.iter().map(|v| v.abs()).sum();
    let l2: f64 = w.iter().map(|v| v * v).sum();
    0.5 * sse / n + params.l1 * l1 + 0.5 * params.l2 * l2
}

/// Coordinate descent on standardized columns `z`. Returns the
/// standardized-space weights, intercept, sweep count and, when `trace` is
/// set, the objective after every sweep (entry 0 is the starting point).
pub fn elastic_net_standardized(
    z: &Matrix,
    y: &[f64],
    params: &ElasticNetParams,
    trace: bool,
) -> (Vec<f64>, f64, usize, Vec<f64>) {
    let n = z.n_rows();
    let p = z.n_cols();
    let nf = n as f64;
    let b = y.iter().sum::<f64>() / nf;
    let mut w = vec![0.0; p];
    let mut residual: Vec<f64> = y.iter().map(|v| v - b).collect();
    let col_sq: Vec<f64> = (0..p)
        .map(|j| z.column(j).map(|v| v * v).sum::<f64>() / nf)
        .collect();
    let mut history = Vec::new();
    if trace {
        history.push(elastic_net_objective(z, y, &w, b, params));
    }
    let mut sweeps = 0;
    while sweeps < params.max_sweeps {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            let denom = col_sq[j] + params.l2;
            let old = w[j];
            let rho = (0..n)
                .map(|i| z.get(i, j) * (residual[i] + z.get(i, j) * old))
                .sum::<f64>()
                / nf;
            let new = if denom > 0.0 {
                soft_threshold(rho, params.l1) / denom
            } else {
                0.0
            };
            if new != old {
                let delta = new - old;
                for (i, r) in residual.iter_mut().enumerate() {
                    *r -= z.get(i, j) * delta;
                }
                w[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if trace {
            history.push(elastic_net_objective(z, y, &w, b, params));
        }
        if max_change < params.tol {
            break;
        }
    }
    (w, b, sweeps, history)
}

pub fn fit_elastic_net(x: &Matrix, y: &[f64], stats: &ColumnStats, params: &ElasticNetParams) -> LinearFit {
    let z = stats.standardize(x);
    let (w, b, sweeps, _) = elastic_net_standardized(&z, y, params, false);
    LinearFit::from_standardized(w, b, stats, sweeps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub step: f64,
    pub max_iter: usize,
    /// Stop once the loss changes by less than this between iterations.
    pub tol: f64,
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean log-loss and its gradient with respect to (`w`, `b`).
pub fn logistic_loss_gradient(x: &Matrix, y: &[f64], w: &[f64], b: f64) -> (f64, Vec<f64>, f64) {
    let n = x.n_rows() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; w.len()];
    let mut grad_b = 0.0;
    for (row, &yi) in x.iter_rows().zip(y) {
        let z = b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
        loss += softplus(z) - yi * z;
        let err = sigmoid(z) - yi;
        for (g, a) in grad_w.iter_mut().zip(row) {
            *g += err * a;
        }
        grad_b += err;
    }
    grad_w.iter_mut().for_each(|g| *g /= n);
    (loss / n, grad_w, grad_b / n)
}

pub fn fit_logistic(x: &Matrix, y: &[f64], stats: &ColumnStats, params: &LogisticParams) -> LinearFit {
    let z = stats.standardize(x);
    let mut w = vec![0.0; z.n_cols()];
    let mut b = 0.0;
    let mut prev = f64::INFINITY;
    let mut iterations = 0;
    while iterations < params.max_iter {
        let (loss, gw, gb) = logistic_loss_gradient(&z, y, &w, b);
        if (prev - loss).abs() < params.tol {
            break;
        }
        prev = loss;
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= params.step * g;
        }
        b -= params.step * gb;
        iterations += 1;
    }
    LinearFit::from_standardized(w, b, stats, iterations)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unpenalized_line_through_origin() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0]]);
        let y = [2.0, 4.0, 6.0];
        let stats = ColumnStats::compute(&x);
        let params = ElasticNetParams {
            l1: 0.0,
            l2: 0.0,
            max_sweeps: 1000,
            tol: 1e-6,
        };
        let fit = fit_elastic_net(&x, &y, &stats, &params);
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-6);
        assert!(fit.intercept.abs() < 1e-6);
    }

    #[test]
    fn strong_l1_zeroes_coefficients() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0], [4.0]]);
        let y = [1.0, 2.1, 2.9, 4.2];
        let stats = ColumnStats::compute(&x);
        let params = ElasticNetParams {
            l1: 100.0,
            l2: 0.0,
            max_sweeps: 100,
            tol: 1e-9,
        };
        let fit = fit_elastic_net(&x, &y, &stats, &params);
        assert_eq!(fit.coefficients, vec![0.0]);
        assert!((fit.intercept - 2.55).abs() < 1e-12);
    }

    #[test]
    fn constant_column_gets_zero_weight() {
        let x = Matrix::from_rows(&[[1.0, 7.0], [2.0, 7.0], [3.0, 7.0]]);
        let stats = ColumnStats::compute(&x);
        let params = ElasticNetParams {
            l1: 0.0,
            l2: 0.0,
            max_sweeps: 1000,
            tol: 1e-10,
        };
        let fit = fit_elastic_net(&x, &[1.0, 2.0, 3.0], &stats, &params);
        assert_eq!(fit.coefficients[1], 0.0);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
    }

    #[test]
    fn logistic_separates_simple_data() {
        let x = Matrix::from_rows(&[[-2.0], [-1.0], [1.0], [2.0]]);
        let y = [0.0, 0.0, 1.0, 1.0];
        let stats = ColumnStats::compute(&x);
        let params = LogisticParams {
            step: 0.1,
            max_iter: 5000,
            tol: 1e-8,
        };
        let fit = fit_logistic(&x, &y, &stats, &params);
        assert!(sigmoid(fit.decision(&[-2.0])) < 0.2);
        assert!(sigmoid(fit.decision(&[2.0])) > 0.8);
    }
}
