//! Metrics, repeated k-fold cross-validation and the train-on-one,
//! test-on-another protocol.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::models::{self, LearnerSpec, ModelError, Task};
use crate::rng::{derive_seed, rng_from_seed, shuffle};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {0} targets vs {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("metric needs at least {0} samples")]
    TooFewSamples(usize),
    #[error("R2 is undefined for constant targets")]
    ConstantTarget,
    #[error("classification metrics need 0/1 labels")]
    NonBinary,
    #[error("{n_samples} samples cannot fill {n_folds} folds")]
    NotEnoughSamples { n_samples: usize, n_folds: usize },
    #[error("a plan needs at least 2 folds and 1 repeat")]
    BadPlan,
    #[error("train and test datasets have different schemas")]
    SchemaMismatch,
    #[error("repeat {repeat}, fold {fold}: {source}")]
    Fold {
        repeat: usize,
        fold: usize,
        #[source]
        source: Box<EvalError>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn check_lengths(y: &[f64], y_hat: &[f64], min: usize) -> Result<(), EvalError> {
    if y.len() != y_hat.len() {
        return Err(EvalError::LengthMismatch(y.len(), y_hat.len()));
    }
    if y.len() < min {
        return Err(EvalError::TooFewSamples(min));
    }
    Ok(())
}

pub fn metric_mse(y: &[f64], y_hat: &[f64]) -> Result<f64, EvalError> {
    check_lengths(y, y_hat, 1)?;
    Ok(y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

pub fn metric_r2(y: &[f64], y_hat: &[f64]) -> Result<f64, EvalError> {
    check_lengths(y, y_hat, 2)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_tot == 0.0 {
        return Err(EvalError::ConstantTarget);
    }
    let ss_res: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

fn check_binary(values: &[f64]) -> Result<(), EvalError> {
    if values.iter().all(|&v| v == 0.0 || v == 1.0) {
        Ok(())
    } else {
        Err(EvalError::NonBinary)
    }
}

pub fn metric_accuracy(y: &[f64], y_hat: &[f64]) -> Result<f64, EvalError> {
    check_lengths(y, y_hat, 1)?;
    check_binary(y)?;
    check_binary(y_hat)?;
    let correct = y.iter().zip(y_hat).filter(|(a, b)| a == b).count();
    Ok(correct as f64 / y.len() as f64)
}

/// F1 with class 1 as positive; 0 when precision + recall is 0.
pub fn metric_f1(y: &[f64], y_hat: &[f64]) -> Result<f64, EvalError> {
    check_lengths(y, y_hat, 1)?;
    check_binary(y)?;
    check_binary(y_hat)?;
    let (mut tp, mut fp, mut fneg) = (0.0, 0.0, 0.0);
    for (&t, &p) in y.iter().zip(y_hat) {
        match (t == 1.0, p == 1.0) {
            (true, true) => tp += 1.0,
            (false, true) => fp += 1.0,
            (true, false) => fneg += 1.0,
            (false, false) => {}
        }
    }
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fneg > 0.0 { tp / (tp + fneg) } else { 0.0 };
    if precision + recall == 0.0 {
        Ok(0.0)
    } else {
        Ok(2.0 * precision * recall / (precision + recall))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Mse,
    R2,
    Accuracy,
    F1,
}

impl Metric {
    pub fn regression() -> Vec<Metric> {
        vec![Metric::R2, Metric::Mse]
    }

    pub fn classification() -> Vec<Metric> {
        vec![Metric::Accuracy, Metric::F1]
    }

    pub fn for_task(task: Task) -> Vec<Metric> {
        match task {
            Task::Regression => Metric::regression(),
            Task::Classification => Metric::classification(),
        }
    }

    /// Score raw model outputs. Accuracy and F1 threshold probabilities at 0.5.
    pub fn score(self, y: &[f64], predictions: &[f64]) -> Result<f64, EvalError> {
        match self {
            Metric::Mse => metric_mse(y, predictions),
            Metric::R2 => metric_r2(y, predictions),
            Metric::Accuracy | Metric::F1 => {
                let labels: Vec<f64> = predictions
                    .iter()
                    .map(|&p| if p >= 0.5 { 1.0 } else { 0.0 })
                    .collect();
                if self == Metric::Accuracy {
                    metric_accuracy(y, &labels)
                } else {
                    metric_f1(y, &labels)
                }
            }
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(Metric::Mse),
            "r2" => Ok(Metric::R2),
            "accuracy" | "acc" => Ok(Metric::Accuracy),
            "f1" => Ok(Metric::F1),
            other => Err(format!("unknown metric '{other}'")),
        }
    }
}

/// Repeated k-fold plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvPlan {
    pub n_folds: usize,
    pub n_repeats: usize,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for CvPlan {
    fn default() -> Self {
        CvPlan {
            n_folds: 10,
            n_repeats: 10,
            stratified: false,
            seed: 0,
        }
    }
}

/// `assignments[repeat][sample]` is the test fold of `sample` in that repeat.
pub type FoldAssignments = Vec<Vec<usize>>;

/// Shuffle-based fold assignment. Stratified plans deal each class's
/// shuffled members round-robin so every fold gets its share ±1.
pub fn split_folds(
    n_samples: usize,
    labels: Option<&[f64]>,
    plan: &CvPlan,
) -> Result<FoldAssignments, EvalError> {
    if plan.n_folds < 2 || plan.n_repeats < 1 {
        return Err(EvalError::BadPlan);
    }
    if n_samples < plan.n_folds {
        return Err(EvalError::NotEnoughSamples {
            n_samples,
            n_folds: plan.n_folds,
        });
    }
    let stratify = match labels {
        Some(l) if plan.stratified => {
            if l.len() != n_samples {
                return Err(EvalError::LengthMismatch(l.len(), n_samples));
            }
            Some(l)
        }
        _ => None,
    };
    Ok((0..plan.n_repeats)
        .map(|repeat| {
            let mut rng = rng_from_seed(derive_seed(plan.seed, repeat as u64));
            let order: Vec<usize> = match stratify {
                None => {
                    let mut idx: Vec<usize> = (0..n_samples).collect();
                    shuffle(&mut rng, &mut idx);
                    idx
                }
                Some(labels) => {
                    let mut classes: Vec<f64> = Vec::new();
                    for &v in labels {
                        if !classes.iter().any(|c| c.to_bits() == v.to_bits()) {
                            classes.push(v);
                        }
                    }
                    classes.sort_by(f64::total_cmp);
                    let mut order = Vec::with_capacity(n_samples);
                    for class in classes {
                        let mut members: Vec<usize> = (0..n_samples)
                            .filter(|&i| labels[i].to_bits() == class.to_bits())
                            .collect();
                        shuffle(&mut rng, &mut members);
                        order.extend(members);
                    }
                    order
                }
            };
            let mut assignment = vec![0; n_samples];
            for (pos, &sample) in order.iter().enumerate() {
                assignment[sample] = pos % plan.n_folds;
            }
            assignment
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: Metric,
    pub mean: f64,
    /// Population standard deviation of `scores`.
    pub std: f64,
    pub scores: Vec<f64>,
}

impl MetricSummary {
    pub fn from_scores(metric: Metric, scores: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&scores);
        MetricSummary {
            metric,
            mean,
            std,
            scores,
        }
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    CrossValidation(CvPlan),
    CrossDataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: Protocol,
    pub spec: LearnerSpec,
    /// (repeat, fold) for every score column, in evaluation order.
    pub folds: Vec<(usize, usize)>,
    pub metrics: Vec<MetricSummary>,
}

impl EvalReport {
    pub fn metric(&self, metric: Metric) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.metric == metric)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text `metric  mean ± std` table.
    pub fn render_table(&self) -> String {
        let mut out = format!("{:<10} {:>10}   {:>10}\n", "metric", "mean", "std");
        for m in &self.metrics {
            let name = serde_json::to_value(m.metric).unwrap();
            out.push_str(&format!(
                "{:<10} {:>10.4} ± {:>10.4}\n",
                name.as_str().unwrap_or("?"),
                m.mean,
                m.std
            ));
        }
        out
    }
}

fn evaluate_split(
    spec: &LearnerSpec,
    train: &Dataset,
    test: &Dataset,
    metrics: &[Metric],
) -> Result<Vec<f64>, EvalError> {
    let model = models::fit(spec, train)?;
    let predictions = model.predict(&test.x)?;
    metrics
        .iter()
        .map(|m| m.score(&test.y, &predictions))
        .collect()
}

/// Fit on every training split of `plan` and score the held-out fold.
/// Fold evaluations run in parallel; the report is ordered by (repeat, fold).
pub fn cross_validate(
    spec: &LearnerSpec,
    dataset: &Dataset,
    plan: &CvPlan,
    metrics: &[Metric],
) -> Result<EvalReport, EvalError> {
    let labels = (spec.task() == Task::Classification).then_some(dataset.y.as_slice());
    let assignments = split_folds(dataset.n_rows(), labels, plan)?;
    let jobs: Vec<(usize, usize)> = (0..plan.n_repeats)
        .flat_map(|r| (0..plan.n_folds).map(move |f| (r, f)))
        .collect();
    let results: Vec<Result<Vec<f64>, EvalError>> = jobs
        .par_iter()
        .map(|&(repeat, fold)| {
            let assignment = &assignments[repeat];
            let (test_idx, train_idx): (Vec<usize>, Vec<usize>) =
                (0..dataset.n_rows()).partition(|&i| assignment[i] == fold);
            evaluate_split(
                spec,
                &dataset.subset(&train_idx),
                &dataset.subset(&test_idx),
                metrics,
            )
            .map_err(|e| EvalError::Fold {
                repeat,
                fold,
                source: Box::new(e),
            })
        })
        .collect();
    let mut per_metric = vec![Vec::with_capacity(jobs.len()); metrics.len()];
    for result in results {
        for (bucket, score) in per_metric.iter_mut().zip(result?) {
            bucket.push(score);
        }
    }
    Ok(EvalReport {
        protocol: Protocol::CrossValidation(*plan),
        spec: spec.resolved()?,
        folds: jobs,
        metrics: metrics
            .iter()
            .zip(per_metric)
            .map(|(&m, s)| MetricSummary::from_scores(m, s))
            .collect(),
    })
}

/// Single fit on `train`, scored on `test`.
pub fn cross_dataset_eval(
    spec: &LearnerSpec,
    train: &Dataset,
    test: &Dataset,
    metrics: &[Metric],
) -> Result<EvalReport, EvalError> {
    if !train.same_schema(test) {
        return Err(EvalError::SchemaMismatch);
    }
    let scores = evaluate_split(spec, train, test, metrics)?;
    Ok(EvalReport {
        protocol: Protocol::CrossDataset,
        spec: spec.resolved()?,
        folds: vec![(0, 0)],
        metrics: metrics
            .iter()
            .zip(scores)
            .map(|(&m, s)| MetricSummary::from_scores(m, vec![s]))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Matrix;
    use crate::models::LearnerKind;

    #[test]
    fn mse_examples() {
        assert_eq!(metric_mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(metric_mse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(metric_mse(&[0.0, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!(matches!(metric_mse(&[0.0], &[1.0, 1.0]), Err(EvalError::LengthMismatch(1, 2))));
    }

    #[test]
    fn r2_examples() {
        assert_eq!(metric_r2(&[1.0, 2.0, 4.0], &[1.0, 2.0, 4.0]).unwrap(), 1.0);
        assert_eq!(metric_r2(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(metric_r2(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), -3.0);
        assert!(matches!(metric_r2(&[1.0, 1.0], &[1.0, 0.0]), Err(EvalError::ConstantTarget)));
    }

    #[test]
    fn classification_metric_examples() {
        assert_eq!(metric_accuracy(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(metric_f1(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(metric_f1(&[1.0, 1.0, 0.0], &[0.0, 0.0, 0.0]).unwrap(), 0.0);
        // tp=1, fp=1, fn=1
        assert_eq!(metric_f1(&[1.0, 0.0, 1.0], &[1.0, 1.0, 0.0]).unwrap(), 0.5);
        assert!(matches!(metric_accuracy(&[2.0], &[1.0]), Err(EvalError::NonBinary)));
    }

    #[test]
    fn folds_partition_each_repeat() {
        let plan = CvPlan {
            n_folds: 10,
            n_repeats: 10,
            stratified: false,
            seed: 5,
        };
        let a = split_folds(100, None, &plan).unwrap();
        assert_eq!(a.len(), 10);
        for repeat in &a {
            for f in 0..10 {
                assert_eq!(repeat.iter().filter(|&&x| x == f).count(), 10);
            }
        }
        assert_eq!(a, split_folds(100, None, &plan).unwrap());
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn stratified_folds_balance_classes() {
        let labels: Vec<f64> = (0..100).map(|i| (i % 2) as f64).collect();
        let plan = CvPlan {
            n_folds: 10,
            n_repeats: 3,
            stratified: true,
            seed: 1,
        };
        for repeat in split_folds(100, Some(&labels), &plan).unwrap() {
            for f in 0..10 {
                let ones = (0..100).filter(|&i| repeat[i] == f && labels[i] == 1.0).count();
                let zeros = (0..100).filter(|&i| repeat[i] == f && labels[i] == 0.0).count();
                assert_eq!((ones, zeros), (5, 5));
            }
        }
    }

    #[test]
    fn too_few_samples() {
        let plan = CvPlan::default();
        assert!(matches!(
            split_folds(5, None, &plan),
            Err(EvalError::NotEnoughSamples { .. })
        ));
    }

    #[test]
    fn two_fold_single_repeat_gives_two_scores() {
        let d = Dataset::new(
            Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]),
            vec![0.0, 1.0, 3.0, 2.0],
        );
        let plan = CvPlan {
            n_folds: 2,
            n_repeats: 1,
            stratified: false,
            seed: 0,
        };
        let report = cross_validate(
            &LearnerSpec::new(LearnerKind::MeanBaseline),
            &d,
            &plan,
            &[Metric::Mse],
        )
        .unwrap();
        assert_eq!(report.metric(Metric::Mse).unwrap().scores.len(), 2);
    }

    #[test]
    fn cross_dataset_requires_same_schema() {
        let a = Dataset::new(Matrix::from_rows(&[[0.0], [1.0]]), vec![0.0, 1.0]);
        let b = Dataset::new(Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]), vec![0.0, 1.0]);
        assert!(matches!(
            cross_dataset_eval(&LearnerSpec::new(LearnerKind::MeanBaseline), &a, &b, &[Metric::Mse]),
            Err(EvalError::SchemaMismatch)
        ));
    }

    #[test]
    fn mean_baseline_on_shifted_test_set() {
        // Train mean 1, test labels {3, 5}: R2 = 1 − (4+16)/2 = −9.
        let train = Dataset::new(Matrix::from_rows(&[[0.0], [1.0]]), vec![0.0, 2.0]);
        let test = Dataset::new(Matrix::from_rows(&[[0.0], [1.0]]), vec![3.0, 5.0]);
        let report = cross_dataset_eval(
            &LearnerSpec::new(LearnerKind::MeanBaseline),
            &train,
            &test,
            &[Metric::R2],
        )
        .unwrap();
        assert_eq!(report.metric(Metric::R2).unwrap().mean, -9.0);
    }
}
