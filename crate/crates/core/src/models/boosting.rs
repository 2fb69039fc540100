//! Gradient-boosted regression trees with first-order leaf values.
//!
//! Each round fits a depth-limited variance tree to the negative gradient of
//! the loss at the current raw scores and adds `learning_rate` times its
//! output. Leaf values are plain residual means (no Hessian weighting).

use serde::{Deserialize, Serialize};

use super::linear::{sigmoid, softplus};
use super::tree::{Presorted, SplitProblem, Tree, TreeParams};
use crate::dataset::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    /// ½(y − f)², regression.
    Squared,
    /// Binary log-loss on raw scores, classification.
    Logistic,
}

/// Clamp applied to the base rate before taking log-odds.
const BASE_RATE_CLAMP: f64 = 1e-6;

impl Loss {
    pub fn initial_score(self, y: &[f64]) -> f64 {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        match self {
            Loss::Squared => mean,
            Loss::Logistic => {
                let p = mean.clamp(BASE_RATE_CLAMP, 1.0 - BASE_RATE_CLAMP);
                (p / (1.0 - p)).ln()
            }
        }
    }

    /// Negative derivative of the per-sample loss at raw score `f`.
    pub fn negative_gradient(self, y: f64, f: f64) -> f64 {
        match self {
            Loss::Squared => y - f,
            Loss::Logistic => y - sigmoid(f),
        }
    }

    /// Mean loss over the training set.
    pub fn mean_loss(self, y: &[f64], scores: &[f64]) -> f64 {
        let total: f64 = y
            .iter()
            .zip(scores)
            .map(|(&y, &f)| match self {
                Loss::Squared => 0.5 * (y - f) * (y - f),
                Loss::Logistic => softplus(f) - y * f,
            })
            .sum();
        total / y.len() as f64
    }

    /// Map a raw score to the model output (identity or probability).
    pub fn output(self, score: f64) -> f64 {
        match self {
            Loss::Squared => score,
            Loss::Logistic => sigmoid(score),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub tree: TreeParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedTrees {
    pub loss: Loss,
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl BoostedTrees {
    pub fn score(&self, row: &[f64]) -> f64 {
        self.init
            + self
                .trees
                .iter()
                .map(|t| self.learning_rate * t.predict_row(row))
                .sum::<f64>()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.loss.output(self.score(row))
    }
}

fn round_with(
    scores: &[f64],
    x: &Matrix,
    y: &[f64],
    loss: Loss,
    params: &BoostParams,
    presorted: &Presorted,
) -> (Tree, Vec<f64>) {
    let gradient: Vec<f64> = y
        .iter()
        .zip(scores)
        .map(|(&y, &f)| loss.negative_gradient(y, f))
        .collect();
    let tree = Tree::fit_presorted(&SplitProblem::new(x, &gradient), presorted, &params.tree, None);
    let updated = scores
        .iter()
        .zip(x.iter_rows())
        .map(|(f, row)| f + params.learning_rate * tree.predict_row(row))
        .collect();
    (tree, updated)
}

/// One boosting round from raw `scores`: fit a tree to the negative
/// gradient and return it with the updated scores.
pub fn gbt_round(
    scores: &[f64],
    x: &Matrix,
    y: &[f64],
    loss: Loss,
    params: &BoostParams,
) -> (Tree, Vec<f64>) {
    let rows: Vec<usize> = (0..x.n_rows()).collect();
    round_with(scores, x, y, loss, params, &Presorted::new(x, &rows))
}

/// Full boosting run. Returns the ensemble and the mean training loss after
/// every round (entry 0 is the loss of the initial constant).
pub fn fit_boosted(x: &Matrix, y: &[f64], loss: Loss, params: &BoostParams) -> (BoostedTrees, Vec<f64>) {
    let rows: Vec<usize> = (0..x.n_rows()).collect();
    let presorted = Presorted::new(x, &rows);
    let init = loss.initial_score(y);
    let mut scores = vec![init; y.len()];
    let mut history = vec![loss.mean_loss(y, &scores)];
    let mut trees = Vec::with_capacity(params.n_rounds);
    for _ in 0..params.n_rounds {
        let (tree, updated) = round_with(&scores, x, y, loss, params, &presorted);
        scores = updated;
        history.push(loss.mean_loss(y, &scores));
        trees.push(tree);
    }
    (
        BoostedTrees {
            loss,
            init,
            learning_rate: params.learning_rate,
            trees,
        },
        history,
    )
}
