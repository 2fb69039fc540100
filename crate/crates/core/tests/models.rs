use popsight_core::dataset::{ColumnStats, Dataset, Matrix};
use popsight_core::models::fit;
use popsight_core::models::linear::{
    elastic_net_standardized, logistic_loss_gradient, ElasticNetParams,
};
use popsight_core::{LearnerKind, LearnerSpec, Model};
use proptest::prelude::*;

fn dataset(rows: &[(f64, f64, f64)], binary: bool) -> Dataset {
    let x = Matrix::from_rows(&rows.iter().map(|&(a, b, _)| [a, b]).collect::<Vec<_>>());
    let y = rows
        .iter()
        .map(|&(a, b, noise)| {
            let v = a - 0.5 * b + noise;
            if binary {
                f64::from(v > 0.0)
            } else {
                v
            }
        })
        .collect();
    Dataset::new(x, y)
}

fn rows(min: usize) -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -1.0f64..1.0), min..60)
}

fn predictions(model: &Model, data: &Dataset) -> Vec<f64> {
    model.predict(&data.x).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn single_unbagged_forest_is_a_tree(rows in rows(4)) {
        let data = dataset(&rows, false);
        let tree = LearnerSpec::new(LearnerKind::DecisionTree)
            .with("max_depth", 4.0)
            .with("min_samples_leaf", 1.0);
        let forest = LearnerSpec::new(LearnerKind::RandomForest)
            .with("n_trees", 1.0)
            .with("bootstrap", 0.0)
            .with("max_features", 2.0)
            .with("max_depth", 4.0)
            .with("min_samples_leaf", 1.0)
            .with_seed(17);
        let a = predictions(&fit(&tree, &data).unwrap(), &data);
        let b = predictions(&fit(&forest, &data).unwrap(), &data);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn knn_over_everything_predicts_the_mean(rows in rows(2)) {
        let data = dataset(&rows, false);
        let spec = LearnerSpec::new(LearnerKind::Knn).with("k", rows.len() as f64);
        let mean = data.y.iter().sum::<f64>() / data.y.len() as f64;
        for p in predictions(&fit(&spec, &data).unwrap(), &data) {
            prop_assert!((p - mean).abs() < 1e-9);
        }
    }

    #[test]
    fn elastic_net_objective_never_increases(rows in rows(3), l1 in 0.0f64..0.5, l2 in 0.0f64..0.5) {
        let data = dataset(&rows, false);
        let z = ColumnStats::compute(&data.x).standardize(&data.x);
        let params = ElasticNetParams { l1, l2, max_sweeps: 200, tol: 0.0 };
        let (_, _, _, trace) = elastic_net_standardized(&z, &data.y, &params, true);
        for w in trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn logistic_gradient_matches_finite_differences(
        rows in rows(3),
        w in prop::collection::vec(-2.0f64..2.0, 2),
        b in -1.0f64..1.0,
    ) {
        let data = dataset(&rows, true);
        let (_, grad, grad_b) = logistic_loss_gradient(&data.x, &data.y, &w, b);
        let loss = |w: &[f64], b: f64| logistic_loss_gradient(&data.x, &data.y, w, b).0;
        let h = 1e-6;
        for j in 0..2 {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[j] += h;
            down[j] -= h;
            let fd = (loss(&up, b) - loss(&down, b)) / (2.0 * h);
            prop_assert!((fd - grad[j]).abs() <= 1e-5 * fd.abs().max(1.0));
        }
        let fd_b = (loss(&w, b + h) - loss(&w, b - h)) / (2.0 * h);
        prop_assert!((fd_b - grad_b).abs() <= 1e-5 * fd_b.abs().max(1.0));
    }
}

#[test]
fn every_learner_is_deterministic_and_round_trips() {
    let mut rng = popsight_core::rng::rng_from_seed(8);
    let rows: Vec<(f64, f64, f64)> = (0..80)
        .map(|_| {
            use rand::Rng as _;
            (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-0.5..0.5))
        })
        .collect();
    for kind in LearnerKind::ALL {
        let binary = kind.default_task() == popsight_core::Task::Classification;
        let data = dataset(&rows, binary);
        let spec = LearnerSpec::new(kind).with_seed(3);
        let a = fit(&spec, &data).unwrap();
        let b = fit(&spec, &data).unwrap();
        assert_eq!(a, b, "{kind:?} is not deterministic");
        let restored = Model::from_json(&a.to_json()).unwrap();
        assert_eq!(predictions(&restored, &data), predictions(&a, &data), "{kind:?}");
    }
}
