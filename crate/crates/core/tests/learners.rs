use mias_core::features::{ColumnSpec, FeatureGroup, FeatureSchema, FeatureSet};
use mias_core::labeling::{resolve_boundaries, CostMatrix, LabelKind};
use mias_core::learners::*;
use mias_core::Error;
use nalgebra::{DMatrix, DVector};
use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn blobs(n: usize, gap: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((n, 2));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % 2;
        x[[i, 0]] = normal(&mut rng) * 0.5 + if c == 1 { gap } else { -gap };
        x[[i, 1]] = normal(&mut rng) * 0.5;
        y.push(c);
    }
    (x, y)
}

fn accuracy(model: &Classifier, x: &Array2<f64>, y: &[usize]) -> f64 {
    let p = model.predict_proba_matrix(x.view());
    let hits = p
        .rows()
        .into_iter()
        .zip(y)
        .filter(|(r, &c)| argmax(r.as_slice().unwrap()) == c)
        .count();
    hits as f64 / y.len() as f64
}

#[test]
fn logistic_separates_separable_blobs() {
    let (x, y) = blobs(200, 3.0, 1);
    let m = train_classifier(x.view(), &y, 2, &ClassifierConfig::new(ClassifierKind::Logistic)).unwrap();
    assert_eq!(accuracy(&m, &x, &y), 1.0);
}

#[test]
fn every_kind_learns_blobs_and_yields_distributions() {
    let (x, y) = blobs(300, 1.5, 2);
    for kind in ClassifierKind::ALL {
        let mut cfg = ClassifierConfig::new(kind).with_seed(4);
        cfg.forest.n_trees = 30;
        let m = train_classifier(x.view(), &y, 2, &cfg).unwrap();
        assert!(accuracy(&m, &x, &y) > 0.95, "{kind}");
        for row in m.predict_proba_matrix(x.view()).rows() {
            assert!(row.iter().all(|&p| p >= 0.0));
            assert!((row.sum() - 1.0).abs() < 1e-9, "{kind}");
        }
    }
}

#[test]
fn naive_bayes_matches_closed_form_posterior() {
    let x = array![
        [0.0, 0.0],
        [1.0, 0.5],
        [0.5, 1.0],
        [5.0, 5.0],
        [6.0, 5.5],
        [5.5, 4.0],
        [6.5, 6.0]
    ];
    let y = [0, 0, 0, 1, 1, 1, 1];
    let cfg = ClassifierConfig {
        naive_bayes: NaiveBayesConfig { var_smoothing: 0.0 },
        ..ClassifierConfig::new(ClassifierKind::NaiveBayes)
    };
    let m = train_classifier(x.view(), &y, 2, &cfg).unwrap();
    // Independent evaluation of the Gaussian product densities.
    let stats = |c: usize, j: usize| {
        let v: Vec<f64> = (0..7).filter(|&i| y[i] == c).map(|i| x[[i, j]]).collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / v.len() as f64;
        (mean, var)
    };
    let density = |c: usize, p: [f64; 2]| {
        let prior = y.iter().filter(|&&k| k == c).count() as f64 / 7.0;
        (0..2).fold(prior, |acc, j| {
            let (m, v) = stats(c, j);
            acc * (-(p[j] - m).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
        })
    };
    for p in [[0.5, 0.5], [3.0, 3.0], [2.5, 2.0], [5.0, 5.0]] {
        let (a, b) = (density(0, p), density(1, p));
        let got = m.predict_proba(&p);
        assert!((got[1] - b / (a + b)).abs() < 1e-9, "{p:?}: {got:?}");
    }
    for i in 0..7 {
        assert_eq!(argmax(&m.predict_proba(&[x[[i, 0]], x[[i, 1]]])), y[i]);
    }
}

#[test]
fn one_tree_forest_is_that_tree() {
    let (x, y) = blobs(120, 0.7, 3);
    let cfg = ForestConfig {
        n_trees: 1,
        ..ForestConfig::default()
    };
    let f = fit_forest(x.view(), &y, 2, &cfg, 11).forest;
    for row in x.rows() {
        let r = row.to_vec();
        assert_eq!(f.predict_proba(&r), f.trees[0].predict_proba(&r));
    }
}

#[test]
fn forest_trees_use_independent_streams() {
    let (x, y) = blobs(150, 0.5, 5);
    let cfg = ForestConfig {
        n_trees: 6,
        ..ForestConfig::default()
    };
    let a = fit_forest(x.view(), &y, 2, &cfg, 3).forest;
    let b = fit_forest(
        x.view(),
        &y,
        2,
        &ForestConfig {
            n_trees: 3,
            ..cfg.clone()
        },
        3,
    )
    .forest;
    // Tree t depends only on (seed, t).
    assert_eq!(&a.trees[..3], &b.trees[..]);
    assert_ne!(a.trees[0], a.trees[1]);
    assert_eq!(ForestConfig::default().n_trees, 200);
}

#[test]
fn training_is_deterministic() {
    let (x, y) = blobs(200, 0.4, 6);
    for kind in ClassifierKind::ALL {
        let mut cfg = ClassifierConfig::new(kind).with_seed(9);
        cfg.forest.n_trees = 20;
        let a = train_classifier(x.view(), &y, 2, &cfg).unwrap();
        let b = train_classifier(x.view(), &y, 2, &cfg).unwrap();
        assert_eq!(a, b, "{kind}");
    }
}

#[test]
fn logitboost_handles_three_classes() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 300;
    let x = Array2::from_shape_fn((n, 3), |_| rng.random::<f64>());
    let y: Vec<usize> = (0..n).map(|i| ((x[[i, 2]] * 3.0) as usize).min(2)).collect();
    let m = train_classifier(x.view(), &y, 3, &ClassifierConfig::new(ClassifierKind::Logitboost)).unwrap();
    assert!(accuracy(&m, &x, &y) > 0.97);
    assert_eq!(LogitBoostConfig::default().iterations, 100);
}

fn schema(n: usize) -> FeatureSchema {
    FeatureSchema::new(
        (0..n)
            .map(|i| ColumnSpec {
                name: format!("c{i}"),
                group: FeatureGroup::What,
                is_new: false,
                is_benchmark1: false,
                is_benchmark2: false,
            })
            .collect(),
    )
    .unwrap()
}

#[test]
fn artifact_round_trips_and_checks_schema() {
    let (x, y) = blobs(100, 1.0, 7);
    let rois: Vec<f64> = y.iter().map(|&c| c as f64).collect();
    let label = resolve_boundaries(&rois, LabelKind::BinaryTop30).unwrap();
    let mut cfg = ClassifierConfig::new(ClassifierKind::RandomForest).with_seed(1);
    cfg.forest.n_trees = 15;
    let model = train_classifier(x.view(), &y, 2, &cfg).unwrap();
    let s = schema(2);
    let artifact = TrainedModel::new(
        ModelBody::Classifier {
            model,
            config: cfg,
            label,
            cost_matrix: None,
        },
        FeatureSet::Full,
        s.clone(),
        "corpus".into(),
    );
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.bin");
    artifact.save(&path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"MIAS");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), ARTIFACT_VERSION);
    let back = TrainedModel::load(&path).unwrap();
    assert_eq!(back, artifact);
    assert_eq!(back.to_bytes().unwrap(), bytes);
    for row in x.rows() {
        let r = row.to_vec();
        assert_eq!(
            back.predict_proba(&s, &r).unwrap(),
            artifact.predict_proba(&s, &r).unwrap()
        );
    }
    assert!(matches!(
        back.predict_proba(&schema(3), &[0.0; 3]),
        Err(Error::SchemaMismatch { .. })
    ));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(TrainedModel::from_bytes(&bad), Err(Error::Artifact(_))));
    let mut bad = bytes.clone();
    bad[4] = 99;
    assert!(matches!(TrainedModel::from_bytes(&bad), Err(Error::Artifact(_))));
}

#[test]
fn regressor_artifact_back_transforms() {
    let x = array![[1.0], [2.0], [3.0], [4.0]];
    let y = [0.1, 0.2, 0.3, 0.4];
    let cfg = RegressorConfig {
        kind: RegressorKind::Ridge,
        ridge_lambda: 0.0,
        ..RegressorConfig::default()
    };
    let fit = train_regressor(x.view(), &y, &cfg).unwrap();
    let s = schema(1);
    let a = TrainedModel::new(
        ModelBody::Regressor {
            model: fit,
            config: cfg,
        },
        FeatureSet::Full,
        s.clone(),
        "c".into(),
    );
    let (v, roi) = a.predict_value(&s, &[5.0]).unwrap();
    assert!((v - 0.5).abs() < 1e-12);
    assert!((roi - (0.5f64.exp() - 1.0 - 1e-6)).abs() < 1e-12);
    assert!(a.predict_proba(&s, &[5.0]).is_err());
}

proptest! {
    #[test]
    fn cost_decision_never_costs_more_than_argmax(a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
        prop_assume!(a + b + c > 1e-9);
        let s = a + b + c;
        let p = [a / s, b / s, c / s];
        let cm = CostMatrix::default();
        let costs = expected_costs(&p, &cm).unwrap();
        prop_assert!(costs[cost_sensitive_predict(&p, &cm).unwrap()] <= costs[argmax(&p)] + 1e-15);
    }
}

// ---- penalized regression ----

fn ols_oracle(x: &Array2<f64>, y: &[f64]) -> (Vec<f64>, f64) {
    let (n, p) = x.dim();
    let a = DMatrix::from_fn(n, p + 1, |i, j| if j == p { 1.0 } else { x[[i, j]] });
    let b = DVector::from_column_slice(y);
    let sol = a.svd(true, true).solve(&b, 1e-14).unwrap();
    ((0..p).map(|j| sol[j]).collect(), sol[p])
}

fn random_design(n: usize, p: usize, seed: u64) -> (Array2<f64>, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, p), |_| normal(&mut rng));
    (x, rng)
}

#[test]
fn lasso_without_penalty_is_least_squares() {
    let (x, mut rng) = random_design(40, 4, 1);
    let y: Vec<f64> = (0..40)
        .map(|i| 1.0 + 2.0 * x[[i, 0]] - x[[i, 2]] + 0.3 * normal(&mut rng))
        .collect();
    let fit = fit_lasso(
        x.view(),
        &y,
        &LassoConfig {
            lambda: 0.0,
            ..LassoConfig::default()
        },
    )
    .unwrap();
    let (beta, intercept) = ols_oracle(&x, &y);
    for (a, b) in fit.fit.coefficients().iter().zip(&beta) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
    assert!((fit.fit.intercept() - intercept).abs() < 1e-6);
    assert!(fit.converged);
}

#[test]
fn lasso_above_lambda_max_is_empty() {
    let (x, mut rng) = random_design(30, 5, 2);
    let y: Vec<f64> = (0..30).map(|i| x[[i, 1]] + normal(&mut rng)).collect();
    let lmax = lambda_max(x.view(), &y).unwrap();
    let at = |lambda| {
        fit_lasso(
            x.view(),
            &y,
            &LassoConfig {
                lambda,
                ..LassoConfig::default()
            },
        )
        .unwrap()
    };
    assert!(at(lmax).fit.nonzero().is_empty());
    assert!(at(lmax * 1.5).fit.nonzero().is_empty());
    assert!(!at(lmax * 0.9).fit.nonzero().is_empty());
}

#[test]
fn lasso_soft_thresholds_an_orthonormal_design() {
    // Columns of +/-1 that are centered, unit-variance and mutually orthogonal.
    let x = array![
        [1.0, 1.0, 1.0],
        [1.0, -1.0, 1.0],
        [1.0, 1.0, -1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, 1.0],
        [-1.0, -1.0, 1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, -1.0],
    ];
    let y = [3.0, 1.5, 2.0, -0.4, 0.2, -1.0, 0.7, -2.2];
    let n = 8.0;
    let mean_y = y.iter().sum::<f64>() / n;
    for lambda in [0.0, 0.1, 0.35, 0.8, 2.0] {
        let fit = fit_lasso(
            x.view(),
            &y,
            &LassoConfig {
                lambda,
                ..LassoConfig::default()
            },
        )
        .unwrap();
        for j in 0..3 {
            let ols: f64 = (0..8).map(|i| x[[i, j]] * (y[i] - mean_y)).sum::<f64>() / n;
            let want = ols.signum() * (ols.abs() - lambda).max(0.0);
            assert!(
                (fit.fit.coefficients()[j] - want).abs() < 1e-6,
                "lambda {lambda} column {j}"
            );
        }
    }
}

#[test]
fn lasso_objective_never_increases_across_sweeps() {
    let (mut x, mut rng) = random_design(60, 8, 3);
    for i in 0..60 {
        x[[i, 3]] = x[[i, 2]] * 0.95 + 0.05 * normal(&mut rng);
    }
    let y: Vec<f64> = (0..60)
        .map(|i| x[[i, 2]] - 0.5 * x[[i, 5]] + 0.2 * normal(&mut rng))
        .collect();
    let mut last = f64::INFINITY;
    for sweeps in 1..40 {
        let cfg = LassoConfig {
            lambda: 0.05,
            tol: 0.0,
            max_sweeps: sweeps,
        };
        let fit = fit_lasso(x.view(), &y, &cfg).unwrap();
        let obj = lasso_objective(x.view(), &y, &fit.fit).unwrap();
        assert!(obj <= last + 1e-12, "sweep {sweeps}: {obj} > {last}");
        last = obj;
    }
}

#[test]
fn lasso_drops_constant_columns() {
    let (mut x, _) = random_design(20, 3, 4);
    x.column_mut(1).fill(7.0);
    let y: Vec<f64> = (0..20).map(|i| x[[i, 0]]).collect();
    let fit = fit_lasso(x.view(), &y, &LassoConfig::default()).unwrap();
    assert_eq!(fit.fit.scaler.constant_columns(), vec![1]);
    assert_eq!(fit.fit.coefficients()[1], 0.0);
}

#[test]
fn planted_sparse_support_is_recovered() {
    let (x, mut rng) = random_design(500, 50, 5);
    let truth = [(3, 1.0), (11, -0.8), (20, 0.6), (34, -1.2), (47, 0.5)];
    let y: Vec<f64> = (0..500)
        .map(|i| truth.iter().map(|&(j, b)| b * x[[i, j]]).sum::<f64>() + 0.1 * normal(&mut rng))
        .collect();
    let grid = [0.02, 0.04, 0.08, 0.16];
    let r = lasso_vif_schedule(x.view(), &y, &grid, &LassoConfig::default()).unwrap();
    assert!(r.accepted);
    assert_eq!(r.lambda_index, 0);
    let support = r.fit.fit.nonzero();
    for (j, _) in truth {
        assert!(support.contains(&j), "missing {j}");
    }
    assert!(support.len() - truth.len() <= 3, "{support:?}");
    assert_eq!(r.surviving, support.len());
    assert_eq!(r.positive + r.negative, r.surviving);
    for &j in &support {
        assert!(r.fit.vif[j] >= 1.0 - 1e-9 && r.fit.vif[j] < VIF_LIMIT);
    }
}

#[test]
fn schedule_separates_a_duplicated_column() {
    let (mut x, mut rng) = random_design(200, 5, 6);
    for i in 0..200 {
        x[[i, 4]] = x[[i, 1]];
    }
    let y: Vec<f64> = (0..200)
        .map(|i| 2.0 * x[[i, 1]] + x[[i, 2]] + 0.1 * normal(&mut rng))
        .collect();
    let grid = [0.001, 0.01, 0.05, 0.2, 0.5];
    let r = lasso_vif_schedule(x.view(), &y, &grid, &LassoConfig::default()).unwrap();
    assert!(r.accepted);
    let s = r.fit.fit.nonzero();
    assert!(!(s.contains(&1) && s.contains(&4)), "{s:?}");
    assert!(s.contains(&1) || s.contains(&4));
}

#[test]
fn schedule_accepts_the_first_penalty_on_orthogonal_columns() {
    let x = array![
        [1.0, 1.0, 1.0],
        [1.0, -1.0, 1.0],
        [1.0, 1.0, -1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, 1.0],
        [-1.0, -1.0, 1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, -1.0],
    ];
    let y = [3.0, 1.5, 2.0, -0.4, 0.2, -1.0, 0.7, -2.2];
    let r = lasso_vif_schedule(x.view(), &y, &[0.01, 0.1, 1.0], &LassoConfig::default()).unwrap();
    assert_eq!(r.lambda_index, 0);
    assert!(lasso_vif_schedule(x.view(), &y, &[0.1, 0.01], &LassoConfig::default()).is_err());
}

#[test]
fn schedule_falls_back_to_the_largest_penalty() {
    let (mut x, mut rng) = random_design(100, 3, 7);
    for i in 0..100 {
        x[[i, 2]] = x[[i, 0]] + 1e-3 * normal(&mut rng);
    }
    let y: Vec<f64> = (0..100).map(|i| x[[i, 0]] + x[[i, 2]] + x[[i, 1]]).collect();
    let r = lasso_vif_schedule(
        x.view(),
        &y,
        &[1e-9, 2e-9],
        &LassoConfig {
            max_sweeps: 5,
            ..LassoConfig::default()
        },
    )
    .unwrap();
    assert!(!r.accepted);
    assert_eq!(r.lambda_index, 1);
}

#[test]
fn ridge_limits_and_hand_solution() {
    let (x, mut rng) = random_design(30, 3, 8);
    let y: Vec<f64> = (0..30)
        .map(|i| x[[i, 0]] - 2.0 * x[[i, 1]] + 0.1 * normal(&mut rng))
        .collect();
    let (beta, _) = ols_oracle(&x, &y);
    let fit = fit_ridge(x.view(), &y, 0.0).unwrap();
    for (a, b) in fit.coefficients().iter().zip(&beta) {
        assert!((a - b).abs() < 1e-9);
    }
    let big = fit_ridge(x.view(), &y, 1e9).unwrap();
    assert!(big.standardized.iter().all(|b| b.abs() < 1e-8));

    // 3 x 2: standardized normal equations solved by the 2 x 2 inverse.
    let x = array![[1.0, 2.0], [2.0, 1.0], [3.0, 4.0]];
    let y = [1.0, 0.0, 2.0];
    let lambda = 0.5;
    let std = |j: usize| {
        let m = (0..3).map(|i| x[[i, j]]).sum::<f64>() / 3.0;
        let s = ((0..3).map(|i| (x[[i, j]] - m).powi(2)).sum::<f64>() / 3.0).sqrt();
        (0..3).map(|i| (x[[i, j]] - m) / s).collect::<Vec<f64>>()
    };
    let (z0, z1) = (std(0), std(1));
    let my = 1.0;
    let yc: Vec<f64> = y.iter().map(|v| v - my).collect();
    let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let (a, b, c) = (d(&z0, &z0) + 3.0 * lambda, d(&z0, &z1), d(&z1, &z1) + 3.0 * lambda);
    let (r0, r1) = (d(&z0, &yc), d(&z1, &yc));
    let det = a * c - b * b;
    let want = [(c * r0 - b * r1) / det, (a * r1 - b * r0) / det];
    let fit = fit_ridge(x.view(), &y, lambda).unwrap();
    assert!((fit.standardized[0] - want[0]).abs() < 1e-12);
    assert!((fit.standardized[1] - want[1]).abs() < 1e-12);
}

#[test]
fn ridge_norm_shrinks_with_the_penalty() {
    let (x, mut rng) = random_design(50, 6, 9);
    let y: Vec<f64> = (0..50).map(|i| x.row(i).sum() + normal(&mut rng)).collect();
    let mut last = f64::INFINITY;
    for lambda in [0.0, 0.01, 0.1, 0.5, 1.0, 5.0, 50.0] {
        let f = fit_ridge(x.view(), &y, lambda).unwrap();
        let norm = f.standardized.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(norm < last);
        last = norm;
    }
}

#[test]
fn vif_oracles() {
    let x = array![
        [1.0, 1.0, 1.0],
        [1.0, -1.0, 1.0],
        [1.0, 1.0, -1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, 1.0],
        [-1.0, -1.0, 1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, -1.0],
    ];
    for v in vif(x.view()).unwrap() {
        assert!((v - 1.0).abs() < 1e-12);
    }

    let (mut x, mut rng) = random_design(200, 3, 10);
    for i in 0..200 {
        x[[i, 1]] = 0.9 * x[[i, 0]] + (1.0f64 - 0.81).sqrt() * normal(&mut rng);
    }
    let got = vif(x.view()).unwrap();
    for j in 0..3 {
        let others: Vec<usize> = (0..3).filter(|&k| k != j).collect();
        let sub = x.select(ndarray::Axis(1), &others);
        let target: Vec<f64> = x.column(j).to_vec();
        let (beta, intercept) = ols_oracle(&sub, &target);
        let mean = target.iter().sum::<f64>() / 200.0;
        let (mut ss_res, mut ss_tot) = (0.0, 0.0);
        for i in 0..200 {
            let fitted = intercept + beta[0] * sub[[i, 0]] + beta[1] * sub[[i, 1]];
            ss_res += (target[i] - fitted).powi(2);
            ss_tot += (target[i] - mean).powi(2);
        }
        let want = 1.0 / (ss_res / ss_tot);
        assert!((got[j] - want).abs() < 1e-9 * want, "column {j}: {} vs {want}", got[j]);
    }
    assert!(got[0] > 4.0 && got[2] < 1.1);

    let mut dup = x.clone();
    dup.column_mut(2).assign(&x.column(0));
    let v = vif(dup.view()).unwrap();
    assert!(v[0].is_infinite() && v[2].is_infinite());
    assert!(v[1].is_finite());
}
