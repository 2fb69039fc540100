//! The learner zoo behind one fit / predict contract.
//!
//! Every learner is described by a [`LearnerSpec`] (kind, task,
//! hyperparameters, seed) and produces an immutable [`Model`]. Regression
//! models predict raw values; classification models predict the probability
//! of class 1. Elastic net, logistic regression and KNN work on
//! standardized columns (training statistics are stored in the model);
//! tree learners consume raw values.
//!
//! Hyperparameter names and defaults:
//!
//! | kind | hyperparameters |
//! |------|-----------------|
//! | `elastic_net` | `l1`=0.01, `l2`=0.01, `max_sweeps`=1000, `tol`=1e-6 |
//! | `logistic_regression` | `step`=0.1, `max_iter`=5000, `tol`=1e-8 |
//! | `knn` | `k`=5 |
//! | `decision_tree` | `max_depth`=6, `min_samples_leaf`=2 |
//! | `random_forest` | `n_trees`=100, `max_depth`=6, `min_samples_leaf`=2, `max_features`=0 (√cols), `bootstrap`=1 |
//! | `adaboost` | `n_estimators`=50 |
//! | `gbt_regressor`, `gbt_classifier` | `n_rounds`=100, `max_depth`=3, `learning_rate`=0.1, `min_samples_leaf`=1 |
//!
//! A `max_depth` of 0 means unlimited depth.

pub mod boosting;
pub mod ensemble;
pub mod linear;
pub mod tree;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{ColumnStats, Dataset, Matrix};
use crate::features::FeatureVector;
use boosting::{BoostParams, BoostedTrees, Loss};
use ensemble::{AdaBoostFit, ForestParams};
use linear::{ElasticNetParams, LinearFit, LogisticParams};
use tree::{Impurity, SplitProblem, Tree, TreeParams};

pub const MODEL_FORMAT_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot fit on an empty dataset")]
    EmptyDataset,
    #[error("{0:?} requires 0/1 labels")]
    NonBinaryLabels(LearnerKind),
    #[error("model expects {expected} columns, got {found}")]
    ColumnMismatch { expected: usize, found: usize },
    #[error("{0:?} is a regression model; classification needs a classifier")]
    NotClassifier(LearnerKind),
    #[error("threshold must lie strictly between 0 and 1, got {0}")]
    BadThreshold(f64),
    #[error("{kind:?}: {reason}")]
    InvalidHyperparameter { kind: LearnerKind, reason: String },
    #[error("{kind:?} cannot be used for {task:?}")]
    TaskMismatch { kind: LearnerKind, task: Task },
    #[error("unsupported model format version '{0}'")]
    UnsupportedVersion(String),
    #[error("model serialization: {0}")]
    Serialization(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    MeanBaseline,
    ModeBaseline,
    ElasticNet,
    LogisticRegression,
    Knn,
    DecisionTree,
    RandomForest,
    Adaboost,
    GbtRegressor,
    GbtClassifier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 10] = [
        LearnerKind::MeanBaseline,
        LearnerKind::ModeBaseline,
        LearnerKind::ElasticNet,
        LearnerKind::LogisticRegression,
        LearnerKind::Knn,
        LearnerKind::DecisionTree,
        LearnerKind::RandomForest,
        LearnerKind::Adaboost,
        LearnerKind::GbtRegressor,
        LearnerKind::GbtClassifier,
    ];

    pub fn default_task(self) -> Task {
        match self {
            LearnerKind::MeanBaseline
            | LearnerKind::ElasticNet
            | LearnerKind::Knn
            | LearnerKind::DecisionTree
            | LearnerKind::RandomForest
            | LearnerKind::GbtRegressor => Task::Regression,
            LearnerKind::ModeBaseline
            | LearnerKind::LogisticRegression
            | LearnerKind::Adaboost
            | LearnerKind::GbtClassifier => Task::Classification,
        }
    }

    /// Kinds whose task is fixed by construction.
    fn fixed_task(self) -> Option<Task> {
        match self {
            LearnerKind::ElasticNet | LearnerKind::GbtRegressor => Some(Task::Regression),
            LearnerKind::LogisticRegression | LearnerKind::Adaboost | LearnerKind::GbtClassifier => {
                Some(Task::Classification)
            }
            _ => None,
        }
    }

    fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            LearnerKind::MeanBaseline | LearnerKind::ModeBaseline => &[],
            LearnerKind::ElasticNet => &[("l1", 0.01), ("l2", 0.01), ("max_sweeps", 1000.0), ("tol", 1e-6)],
            LearnerKind::LogisticRegression => &[("step", 0.1), ("max_iter", 5000.0), ("tol", 1e-8)],
            LearnerKind::Knn => &[("k", 5.0)],
            LearnerKind::DecisionTree => &[("max_depth", 6.0), ("min_samples_leaf", 2.0)],
            LearnerKind::RandomForest => &[
                ("n_trees", 100.0),
                ("max_depth", 6.0),
                ("min_samples_leaf", 2.0),
                ("max_features", 0.0),
                ("bootstrap", 1.0),
            ],
            LearnerKind::Adaboost => &[("n_estimators", 50.0)],
            LearnerKind::GbtRegressor | LearnerKind::GbtClassifier => &[
                ("n_rounds", 100.0),
                ("max_depth", 3.0),
                ("learning_rate", 0.1),
                ("min_samples_leaf", 1.0),
            ],
        }
    }
}

impl std::str::FromStr for LearnerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| format!("unknown learner kind '{s}'"))
    }
}

/// What to train: learner kind, task, hyperparameters and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default)]
    pub hyperparameters: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
}

impl LearnerSpec {
    pub fn new(kind: LearnerKind) -> Self {
        LearnerSpec {
            kind,
            task: None,
            hyperparameters: BTreeMap::new(),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_task(mut self, task: Task) -> Self {
        self.task = Some(task);
        self
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.hyperparameters.insert(name.to_string(), value);
        self
    }

    pub fn task(&self) -> Task {
        self.task.unwrap_or_else(|| self.kind.default_task())
    }

    /// Copy with every default filled in and the task made explicit.
    pub fn resolved(&self) -> Result<LearnerSpec, ModelError> {
        let defaults = self.kind.defaults();
        for (name, value) in &self.hyperparameters {
            if !defaults.iter().any(|(d, _)| d == name) {
                return Err(ModelError::InvalidHyperparameter {
                    kind: self.kind,
                    reason: format!("unknown hyperparameter '{name}'"),
                });
            }
            if !value.is_finite() || *value < 0.0 {
                return Err(ModelError::InvalidHyperparameter {
                    kind: self.kind,
                    reason: format!("'{name}' must be a finite non-negative number, got {value}"),
                });
            }
        }
        let task = self.task();
        if let Some(fixed) = self.kind.fixed_task() {
            if fixed != task {
                return Err(ModelError::TaskMismatch {
                    kind: self.kind,
                    task,
                });
            }
        }
        let mut hyperparameters = self.hyperparameters.clone();
        for (name, value) in defaults {
            hyperparameters.entry(name.to_string()).or_insert(*value);
        }
        Ok(LearnerSpec {
            kind: self.kind,
            task: Some(task),
            hyperparameters,
            seed: self.seed,
        })
    }

    fn param(&self, name: &str) -> f64 {
        self.hyperparameters[name]
    }

    fn count(&self, name: &str) -> Result<usize, ModelError> {
        let v = self.param(name);
        if v.fract() != 0.0 {
            return Err(ModelError::InvalidHyperparameter {
                kind: self.kind,
                reason: format!("'{name}' must be an integer, got {v}"),
            });
        }
        Ok(v as usize)
    }

    fn depth(&self) -> Result<Option<usize>, ModelError> {
        Ok(match self.count("max_depth")? {
            0 => None,
            d => Some(d),
        })
    }
}

/// Learned parameters, one variant per learner family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelState {
    Constant { value: f64 },
    Linear(LinearFit),
    Knn { k: usize, points: Matrix, labels: Vec<f64> },
    Tree { tree: Tree },
    Forest { trees: Vec<Tree> },
    Adaboost(AdaBoostFit),
    Boosted(BoostedTrees),
}

/// A trained learner. Immutable after [`fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub version: String,
    pub spec: LearnerSpec,
    pub n_cols: usize,
    /// Training-column statistics: standardization for scale-sensitive
    /// learners and mean imputation for incomplete feature vectors.
    pub column_stats: ColumnStats,
    pub state: ModelState,
}

fn check_task_labels(spec: &LearnerSpec, dataset: &Dataset) -> Result<(), ModelError> {
    if spec.task() == Task::Classification && !dataset.has_binary_labels() {
        return Err(ModelError::NonBinaryLabels(spec.kind));
    }
    Ok(())
}

fn mode(labels: &[f64]) -> f64 {
    let mut counts: Vec<(f64, usize)> = Vec::new();
    for &v in labels {
        match counts.iter_mut().find(|(u, _)| u.to_bits() == v.to_bits()) {
            Some((_, c)) => *c += 1,
            None => counts.push((v, 1)),
        }
    }
    // max_by_key keeps the last maximum; scan manually for first-seen.
    let mut best = counts[0];
    for &(v, c) in &counts[1..] {
        if c > best.1 {
            best = (v, c);
        }
    }
    best.0
}

/// Train `spec` on `dataset`. Deterministic given the spec seed.
pub fn fit(spec: &LearnerSpec, dataset: &Dataset) -> Result<Model, ModelError> {
    if dataset.n_rows() == 0 {
        return Err(ModelError::EmptyDataset);
    }
    let spec = spec.resolved()?;
    check_task_labels(&spec, dataset)?;
    let x = &dataset.x;
    let y = &dataset.y;
    let stats = ColumnStats::compute(x);
    let impurity = match spec.task() {
        Task::Regression => Impurity::Variance,
        Task::Classification => Impurity::Gini,
    };
    let state = match spec.kind {
        LearnerKind::MeanBaseline => ModelState::Constant {
            value: y.iter().sum::<f64>() / y.len() as f64,
        },
        LearnerKind::ModeBaseline => ModelState::Constant { value: mode(y) },
        LearnerKind::ElasticNet => {
            let params = ElasticNetParams {
                l1: spec.param("l1"),
                l2: spec.param("l2"),
                max_sweeps: spec.count("max_sweeps")?,
                tol: spec.param("tol"),
            };
            ModelState::Linear(linear::fit_elastic_net(x, y, &stats, &params))
        }
        LearnerKind::LogisticRegression => {
            let params = LogisticParams {
                step: spec.param("step"),
                max_iter: spec.count("max_iter")?,
                tol: spec.param("tol"),
            };
            ModelState::Linear(linear::fit_logistic(x, y, &stats, &params))
        }
        LearnerKind::Knn => {
            let k = spec.count("k")?;
            if k == 0 {
                return Err(ModelError::InvalidHyperparameter {
                    kind: spec.kind,
                    reason: "k must be at least 1".into(),
                });
            }
            ModelState::Knn {
                k,
                points: stats.standardize(x),
                labels: y.clone(),
            }
        }
        LearnerKind::DecisionTree => {
            let params = TreeParams {
                max_depth: spec.depth()?,
                min_samples_leaf: spec.count("min_samples_leaf")?.max(1),
                max_features: None,
                impurity,
            };
            let rows: Vec<usize> = (0..dataset.n_rows()).collect();
            ModelState::Tree {
                tree: Tree::fit(&SplitProblem::new(x, y), &rows, &params, None),
            }
        }
        LearnerKind::RandomForest => {
            let n_trees = spec.count("n_trees")?;
            if n_trees == 0 {
                return Err(ModelError::InvalidHyperparameter {
                    kind: spec.kind,
                    reason: "n_trees must be at least 1".into(),
                });
            }
            let max_features = match spec.count("max_features")? {
                0 => ((x.n_cols() as f64).sqrt().floor() as usize).max(1),
                m => m.min(x.n_cols()),
            };
            let params = ForestParams {
                n_trees,
                bootstrap: spec.param("bootstrap") != 0.0,
                tree: TreeParams {
                    max_depth: spec.depth()?,
                    min_samples_leaf: spec.count("min_samples_leaf")?.max(1),
                    max_features: Some(max_features),
                    impurity,
                },
            };
            ModelState::Forest {
                trees: ensemble::fit_forest(x, y, &params, spec.seed),
            }
        }
        LearnerKind::Adaboost => {
            let (fit, _) = ensemble::fit_adaboost(x, y, spec.count("n_estimators")?);
            ModelState::Adaboost(fit)
        }
        LearnerKind::GbtRegressor | LearnerKind::GbtClassifier => {
            let loss = if spec.kind == LearnerKind::GbtRegressor {
                Loss::Squared
            } else {
                Loss::Logistic
            };
            let params = BoostParams {
                n_rounds: spec.count("n_rounds")?,
                learning_rate: spec.param("learning_rate"),
                tree: TreeParams {
                    max_depth: spec.depth()?,
                    min_samples_leaf: spec.count("min_samples_leaf")?.max(1),
                    max_features: None,
                    impurity: Impurity::Variance,
                },
            };
            let (fit, _) = boosting::fit_boosted(x, y, loss, &params);
            ModelState::Boosted(fit)
        }
    };
    Ok(Model {
        version: MODEL_FORMAT_VERSION.to_string(),
        spec,
        n_cols: x.n_cols(),
        column_stats: stats,
        state,
    })
}

fn knn_predict(k: usize, points: &Matrix, labels: &[f64], query: &[f64]) -> f64 {
    let mut dist: Vec<(f64, usize)> = points
        .iter_rows()
        .enumerate()
        .map(|(i, p)| {
            let d: f64 = p.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
            (d, i)
        })
        .collect();
    let k = k.min(dist.len());
    let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dist.len() {
        dist.select_nth_unstable_by(k - 1, order);
    }
    dist[..k].iter().map(|&(_, i)| labels[i]).sum::<f64>() / k as f64
}

impl Model {
    pub fn kind(&self) -> LearnerKind {
        self.spec.kind
    }

    pub fn task(&self) -> Task {
        self.spec.task()
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        match &self.state {
            ModelState::Constant { value } => *value,
            ModelState::Linear(fit) => match self.spec.kind {
                LearnerKind::LogisticRegression => linear::sigmoid(fit.decision(row)),
                _ => fit.decision(row),
            },
            ModelState::Knn { k, points, labels } => {
                let query: Vec<f64> = row
                    .iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let s = self.column_stats.stds[j];
                        (v - self.column_stats.means[j]) / if s > 0.0 { s } else { 1.0 }
                    })
                    .collect();
                knn_predict(*k, points, labels, &query)
            }
            ModelState::Tree { tree } => tree.predict_row(row),
            ModelState::Forest { trees } => ensemble::predict_forest(trees, row),
            ModelState::Adaboost(fit) => fit.probability(row),
            ModelState::Boosted(fit) => fit.predict_row(row),
        }
    }

    /// Raw predictions (regression) or class-1 probabilities (classification).
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>, ModelError> {
        if x.n_cols() != self.n_cols {
            return Err(ModelError::ColumnMismatch {
                expected: self.n_cols,
                found: x.n_cols(),
            });
        }
        Ok(x.iter_rows().map(|r| self.predict_row(r)).collect())
    }

    /// Predict on feature vectors, filling missing entries with training means.
    pub fn predict_vectors(&self, vectors: &[FeatureVector]) -> Result<Vec<f64>, ModelError> {
        let rows: Vec<Vec<f64>> = vectors
            .iter()
            .map(|v| {
                if v.values.len() != self.n_cols {
                    Err(ModelError::ColumnMismatch {
                        expected: self.n_cols,
                        found: v.values.len(),
                    })
                } else {
                    Ok(v.impute(&self.column_stats.means))
                }
            })
            .collect::<Result<_, _>>()?;
        if rows.is_empty() {
            return Ok(Vec::new());
        }
        self.predict(&Matrix::from_rows(&rows))
    }

    /// Hard labels: 1 iff probability ≥ `threshold`.
    pub fn classify(&self, x: &Matrix, threshold: f64) -> Result<Vec<f64>, ModelError> {
        if self.task() != Task::Classification {
            return Err(ModelError::NotClassifier(self.kind()));
        }
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(ModelError::BadThreshold(threshold));
        }
        Ok(self
            .predict(x)?
            .into_iter()
            .map(|p| if p >= threshold { 1.0 } else { 0.0 })
            .collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Model, ModelError> {
        let model: Model =
            serde_json::from_str(s).map_err(|e| ModelError::Serialization(e.to_string()))?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(ModelError::UnsupportedVersion(model.version));
        }
        Ok(model)
    }
}

/// Free-function forms of the model methods.
pub fn predict(model: &Model, x: &Matrix) -> Result<Vec<f64>, ModelError> {
    model.predict(x)
}

pub fn classify(model: &Model, x: &Matrix, threshold: f64) -> Result<Vec<f64>, ModelError> {
    model.classify(x, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(rows: &[&[f64]], y: &[f64]) -> Dataset {
        Dataset::new(Matrix::from_rows(rows), y.to_vec())
    }

    #[test]
    fn mean_baseline_predicts_mean() {
        let d = ds(&[&[0.0], &[1.0], &[2.0]], &[1.0, 2.0, 3.0]);
        let m = fit(&LearnerSpec::new(LearnerKind::MeanBaseline), &d).unwrap();
        assert_eq!(m.predict(&Matrix::zeros(3, 1)).unwrap(), vec![2.0; 3]);
    }

    #[test]
    fn mode_baseline_predicts_majority() {
        let d = ds(&[&[0.0], &[1.0], &[2.0]], &[0.0, 0.0, 1.0]);
        let m = fit(&LearnerSpec::new(LearnerKind::ModeBaseline), &d).unwrap();
        assert_eq!(m.predict(&Matrix::zeros(1, 1)).unwrap(), vec![0.0]);
        // Tie goes to the first-seen value.
        let d = ds(&[&[0.0], &[1.0]], &[1.0, 0.0]);
        let m = fit(&LearnerSpec::new(LearnerKind::ModeBaseline), &d).unwrap();
        assert_eq!(m.predict(&Matrix::zeros(1, 1)).unwrap(), vec![1.0]);
    }

    #[test]
    fn knn_k1_returns_training_label() {
        let d = ds(&[&[0.0, 1.0], &[2.0, 0.5], &[4.0, 3.0]], &[0.3, 0.9, 0.1]);
        let m = fit(&LearnerSpec::new(LearnerKind::Knn).with("k", 1.0), &d).unwrap();
        assert_eq!(m.predict(&d.x).unwrap(), d.y);
    }

    #[test]
    fn logistic_zero_coefficients_give_half() {
        let model = Model {
            version: MODEL_FORMAT_VERSION.into(),
            spec: LearnerSpec::new(LearnerKind::LogisticRegression).resolved().unwrap(),
            n_cols: 2,
            column_stats: ColumnStats {
                means: vec![0.0; 2],
                stds: vec![1.0; 2],
            },
            state: ModelState::Linear(LinearFit {
                coefficients: vec![0.0, 0.0],
                intercept: 0.0,
                iterations: 0,
            }),
        };
        let x = Matrix::from_rows(&[[3.0, -1.0], [100.0, 7.0]]);
        assert_eq!(model.predict(&x).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn classify_threshold_rules() {
        let model = Model {
            version: MODEL_FORMAT_VERSION.into(),
            spec: LearnerSpec::new(LearnerKind::GbtClassifier).resolved().unwrap(),
            n_cols: 1,
            column_stats: ColumnStats {
                means: vec![0.0],
                stds: vec![1.0],
            },
            state: ModelState::Tree {
                tree: Tree {
                    nodes: vec![
                        tree::Node::Split {
                            column: 0,
                            threshold: 0.5,
                            left: 1,
                            right: 2,
                        },
                        tree::Node::Leaf { value: 0.4 },
                        tree::Node::Leaf { value: 0.6 },
                    ],
                },
            },
        };
        let x = Matrix::from_rows(&[[0.0], [1.0]]);
        assert_eq!(model.classify(&x, 0.5).unwrap(), vec![0.0, 1.0]);
        assert_eq!(model.classify(&x, 0.4).unwrap(), vec![1.0, 1.0]);
        assert!(matches!(model.classify(&x, 0.0), Err(ModelError::BadThreshold(_))));
        assert!(matches!(model.classify(&x, 1.0), Err(ModelError::BadThreshold(_))));

        let reg = fit(
            &LearnerSpec::new(LearnerKind::MeanBaseline),
            &ds(&[&[0.0]], &[1.0]),
        )
        .unwrap();
        assert!(matches!(reg.classify(&x, 0.5), Err(ModelError::NotClassifier(_))));
    }

    #[test]
    fn fit_errors() {
        let empty = Dataset::new(Matrix::zeros(0, 2), vec![]);
        assert!(matches!(
            fit(&LearnerSpec::new(LearnerKind::MeanBaseline), &empty),
            Err(ModelError::EmptyDataset)
        ));
        let d = ds(&[&[0.0], &[1.0]], &[0.0, 2.0]);
        assert!(matches!(
            fit(&LearnerSpec::new(LearnerKind::GbtClassifier), &d),
            Err(ModelError::NonBinaryLabels(_))
        ));
        assert!(matches!(
            fit(&LearnerSpec::new(LearnerKind::Knn).with("depth", 1.0), &d),
            Err(ModelError::InvalidHyperparameter { .. })
        ));
        assert!(matches!(
            fit(&LearnerSpec::new(LearnerKind::ElasticNet).with_task(Task::Classification), &d),
            Err(ModelError::TaskMismatch { .. })
        ));
    }

    #[test]
    fn predict_checks_columns() {
        let d = ds(&[&[0.0, 1.0], &[1.0, 0.0]], &[0.0, 1.0]);
        let m = fit(&LearnerSpec::new(LearnerKind::DecisionTree), &d).unwrap();
        assert!(matches!(
            m.predict(&Matrix::zeros(1, 3)),
            Err(ModelError::ColumnMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn kinds_parse_from_snake_case() {
        assert_eq!("gbt_classifier".parse::<LearnerKind>().unwrap(), LearnerKind::GbtClassifier);
        assert!("svr".parse::<LearnerKind>().is_err());
    }

    #[test]
    fn serialized_spec_keeps_seed() {
        let spec = LearnerSpec::new(LearnerKind::RandomForest).resolved().unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"seed\":0"));
    }
}
