//! Random forest and SAMME AdaBoost over CART trees.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{Impurity, SplitProblem, Tree, TreeParams};
use crate::dataset::Matrix;
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    pub bootstrap: bool,
}

/// Trees are grown in parallel; tree `t` draws from a generator seeded with
/// `derive_seed(seed, t)`, so the forest does not depend on scheduling.
pub fn fit_forest(x: &Matrix, y: &[f64], params: &ForestParams, seed: u64) -> Vec<Tree> {
    let n = x.n_rows();
    let problem = SplitProblem::new(x, y);
    (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, t as u64));
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            Tree::fit(&problem, &rows, &params.tree, Some(&mut rng))
        })
        .collect()
}

pub fn predict_forest(trees: &[Tree], row: &[f64]) -> f64 {
    trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / trees.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostFit {
    pub stumps: Vec<Tree>,
    pub alphas: Vec<f64>,
    /// Weighted base rate, used when no stump beats chance.
    pub base_rate: f64,
}

/// Lower bound on weighted error when computing a stump's vote.
pub const MIN_STUMP_ERROR: f64 = 1e-10;

fn vote(tree: &Tree, row: &[f64]) -> f64 {
    if tree.predict_row(row) >= 0.5 {
        1.0
    } else {
        -1.0
    }
}

/// Binary SAMME with depth-1 Gini stumps. Returns the fit and the sample
/// weight vector after every round (entry 0 is the uniform start).
pub fn fit_adaboost(x: &Matrix, y: &[f64], n_estimators: usize) -> (AdaBoostFit, Vec<Vec<f64>>) {
    let n = x.n_rows();
    let rows: Vec<usize> = (0..n).collect();
    let mut weights = vec![1.0 / n as f64; n];
    let mut history = vec![weights.clone()];
    let base_rate = y.iter().sum::<f64>() / n as f64;
    let params = TreeParams {
        max_depth: Some(1),
        min_samples_leaf: 1,
        max_features: None,
        impurity: Impurity::Gini,
    };
    let targets: Vec<f64> = y.iter().map(|&v| if v == 1.0 { 1.0 } else { -1.0 }).collect();
    let mut stumps = Vec::new();
    let mut alphas = Vec::new();
    let presorted = super::tree::Presorted::new(x, &rows);
    for _ in 0..n_estimators {
        let problem = SplitProblem::weighted(x, y, &weights);
        let stump = Tree::fit_presorted(&problem, &presorted, &params, None);
        let missed: Vec<bool> = x
            .iter_rows()
            .zip(&targets)
            .map(|(row, t)| vote(&stump, row) != *t)
            .collect();
        let error: f64 = weights
            .iter()
            .zip(&missed)
            .filter(|(_, m)| **m)
            .map(|(w, _)| w)
            .sum();
        if error >= 0.5 {
            break;
        }
        let eps = error.max(MIN_STUMP_ERROR);
        let alpha = ((1.0 - eps) / eps).ln();
        stumps.push(stump);
        alphas.push(alpha);
        if error <= 0.0 {
            break;
        }
        for (w, m) in weights.iter_mut().zip(&missed) {
            if *m {
                *w *= alpha.exp();
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        history.push(weights.clone());
    }
    (
        AdaBoostFit {
            stumps,
            alphas,
            base_rate,
        },
        history,
    )
}

impl AdaBoostFit {
    /// Alpha-weighted share of votes for class 1.
    pub fn probability(&self, row: &[f64]) -> f64 {
        let total: f64 = self.alphas.iter().sum();
        if self.stumps.is_empty() || total <= 0.0 {
            return self.base_rate;
        }
        let score: f64 = self
            .stumps
            .iter()
            .zip(&self.alphas)
            .map(|(s, a)| a * vote(s, row))
            .sum();
        (0.5 * (1.0 + score / total)).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaboost_weights_stay_a_distribution() {
        let x = Matrix::from_rows(&[[0.1], [0.4], [0.35], [0.8], [0.9], [0.5], [0.2], [0.7]]);
        let y = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        let (fit, history) = fit_adaboost(&x, &y, 20);
        assert!(!fit.stumps.is_empty());
        for w in history {
            assert!(w.iter().all(|v| *v >= 0.0));
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_stump_stops_early_with_capped_vote() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]);
        let y = [0.0, 0.0, 1.0, 1.0];
        let (fit, _) = fit_adaboost(&x, &y, 50);
        assert_eq!(fit.stumps.len(), 1);
        assert!((fit.alphas[0] - ((1.0 - 1e-10) / 1e-10f64).ln()).abs() < 1e-9);
        assert_eq!(fit.probability(&[3.0]), 1.0);
        assert_eq!(fit.probability(&[0.0]), 0.0);
    }
}
