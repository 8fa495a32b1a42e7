use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::metrics::{auc_binary, auc_weighted_multiclass, class_rates, kfold_plain, kfold_split, rmse};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureSet};
use crate::labeling::{
    label, log_roi1, resolve_boundaries_with, total_cost, CostMatrix, LabelKind, LabelSpec, Roi67Rule,
};
use crate::learners::{
    argmax, cost_sensitive_predict, train_cost_aware, train_regressor, ClassifierConfig, RegressorConfig,
};

/// Where percentile label cutoffs are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Once, on every row, before splitting.
    #[default]
    Global,
    /// On each fold's training rows only.
    FoldLocal,
}

impl ThresholdMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ThresholdMode::Global => "global",
            ThresholdMode::FoldLocal => "fold_local",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSetup {
    pub label: LabelKind,
    pub roi67_rule: Roi67Rule,
    pub thresholds: ThresholdMode,
    pub model: ClassifierConfig,
    pub feature_set: FeatureSet,
    pub folds: usize,
    pub seed: u64,
    pub cost_matrix: CostMatrix,
}

impl ExperimentSetup {
    pub fn new(label: LabelKind, model: ClassifierConfig, feature_set: FeatureSet) -> Self {
        ExperimentSetup {
            label,
            roi67_rule: Roi67Rule::Fixed,
            thresholds: ThresholdMode::Global,
            model,
            feature_set,
            folds: 10,
            seed: 0,
            cost_matrix: CostMatrix::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub auc: f64,
    pub accuracy: f64,
    pub precision_pos: f64,
    pub recall_pos: f64,
    pub precision_neg: f64,
    pub recall_neg: f64,
    /// Multi-class only: cost of the minimum-expected-cost decisions.
    pub total_cost: Option<f64>,
    /// Multi-class only: cost of the most-probable-class decisions.
    pub argmax_cost: Option<f64>,
    /// Multi-class only: expected cost of guessing uniformly at random.
    pub random_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub setup: ExperimentSetup,
    /// Label boundaries resolved on every row.
    pub label_spec: LabelSpec,
    pub n_rows: usize,
    pub n_features: usize,
    pub folds: Vec<FoldReport>,
    /// Folds left out because a side held a single class.
    pub skipped_folds: Vec<usize>,
    /// Rates averaged over folds; costs summed.
    pub aggregate: Metrics,
}

impl EvalReport {
    /// Folds where cost-sensitive decisions cost more than argmax ones.
    pub fn cost_regressions(&self) -> Vec<usize> {
        self.folds
            .iter()
            .filter(|f| matches!((f.metrics.total_cost, f.metrics.argmax_cost), (Some(c), Some(a)) if c > a))
            .map(|f| f.fold)
            .collect()
    }
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn split_rows(folds: &[usize], f: usize) -> (Vec<usize>, Vec<usize>) {
    (0..folds.len()).partition(|&i| folds[i] != f)
}

/// Cross-validated classification on the columns of `setup.feature_set`.
pub fn run_experiment(data: &FeatureMatrix, rois: &[f64], setup: &ExperimentSetup) -> Result<EvalReport> {
    if data.nrows() != rois.len() {
        return Err(Error::DimensionMismatch {
            expected: data.nrows(),
            actual: rois.len(),
        });
    }
    let x = data.select(setup.feature_set).data;
    let global = resolve_boundaries_with(rois, setup.label, setup.roi67_rule)?;
    let global_labels = label(rois, &global);
    let k = global.num_classes();
    let multiclass = setup.label.is_multiclass();
    let folds = kfold_split(&global_labels, setup.folds, setup.seed)?;
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for f in 0..setup.folds {
        let (train, test) = split_rows(&folds, f);
        let labels = match setup.thresholds {
            ThresholdMode::Global => global_labels.clone(),
            ThresholdMode::FoldLocal => {
                let train_rois: Vec<f64> = train.iter().map(|&i| rois[i]).collect();
                let spec = resolve_boundaries_with(&train_rois, setup.label, setup.roi67_rule)?;
                label(rois, &spec)
            }
        };
        let y_train: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
        let y_test: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
        let single = |y: &[usize]| y.iter().all(|&c| c == y[0]);
        if single(&y_train) || single(&y_test) {
            log::warn!("fold {f} skipped: a side holds a single class");
            skipped.push(f);
            continue;
        }
        let mut cfg = setup.model.clone();
        cfg.seed = fold_seed(setup.model.seed, f);
        let x_train = x.select(Axis(0), &train);
        let model = train_cost_aware(x_train.view(), &y_train, k, &cfg, &setup.cost_matrix)?;
        let x_test = x.select(Axis(0), &test);
        let probas: Array2<f64> = model.predict_proba_matrix(x_test.view());
        let auc = if k == 2 {
            let scores: Vec<f64> = probas.column(1).to_vec();
            let pos: Vec<bool> = y_test.iter().map(|&c| c == 1).collect();
            auc_binary(&scores, &pos)?
        } else {
            auc_weighted_multiclass(probas.view(), &y_test)?
        };
        let predicted: Vec<usize> = probas
            .rows()
            .into_iter()
            .map(|r| argmax(r.as_slice().expect("row")))
            .collect();
        let rates = class_rates(&y_test, &predicted, k);
        let (total, argmax_cost, random_cost) = if multiclass {
            let cm = &setup.cost_matrix;
            let decided = probas
                .rows()
                .into_iter()
                .map(|r| cost_sensitive_predict(r.as_slice().expect("row"), cm))
                .collect::<Result<Vec<usize>>>()?;
            let random: f64 = y_test
                .iter()
                .map(|&a| (0..3).map(|c| cm.cost(a, c)).sum::<f64>() / 3.0)
                .sum();
            (
                Some(total_cost(&y_test, &decided, cm)?),
                Some(total_cost(&y_test, &predicted, cm)?),
                Some(random),
            )
        } else {
            (None, None, None)
        };
        reports.push(FoldReport {
            fold: f,
            n_train: train.len(),
            n_test: test.len(),
            metrics: Metrics {
                auc,
                accuracy: rates.accuracy,
                precision_pos: rates.precision_pos,
                recall_pos: rates.recall_pos,
                precision_neg: rates.precision_neg,
                recall_neg: rates.recall_neg,
                total_cost: total,
                argmax_cost,
                random_cost,
            },
        });
    }
    if reports.is_empty() {
        return Err(Error::InvalidInput("every fold was skipped".into()));
    }
    let aggregate = aggregate(&reports);
    let report = EvalReport {
        setup: setup.clone(),
        label_spec: global,
        n_rows: data.nrows(),
        n_features: x.ncols(),
        folds: reports,
        skipped_folds: skipped,
        aggregate,
    };
    let worse = report.cost_regressions();
    if !worse.is_empty() {
        log::warn!("cost-sensitive decisions cost more than argmax on folds {worse:?}");
    }
    Ok(report)
}

fn aggregate(folds: &[FoldReport]) -> Metrics {
    let n = folds.len() as f64;
    let mean = |f: fn(&Metrics) -> f64| folds.iter().map(|r| f(&r.metrics)).sum::<f64>() / n;
    let sum = |f: fn(&Metrics) -> Option<f64>| folds.iter().map(|r| f(&r.metrics)).sum::<Option<f64>>();
    Metrics {
        auc: mean(|m| m.auc),
        accuracy: mean(|m| m.accuracy),
        precision_pos: mean(|m| m.precision_pos),
        recall_pos: mean(|m| m.recall_pos),
        precision_neg: mean(|m| m.precision_neg),
        recall_neg: mean(|m| m.recall_neg),
        total_cost: sum(|m| m.total_cost),
        argmax_cost: sum(|m| m.argmax_cost),
        random_cost: sum(|m| m.random_cost),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSetup {
    pub model: RegressorConfig,
    pub feature_set: FeatureSet,
    pub folds: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub setup: RegressionSetup,
    pub n_rows: usize,
    pub n_features: usize,
    /// RMSE of predicted log(ROI + 1) per fold.
    pub fold_rmse: Vec<f64>,
    pub rmse: f64,
}

/// Cross-validated regression of log(ROI + 1).
pub fn run_regression(data: &FeatureMatrix, rois: &[f64], setup: &RegressionSetup) -> Result<RegressionReport> {
    if data.nrows() != rois.len() {
        return Err(Error::DimensionMismatch {
            expected: data.nrows(),
            actual: rois.len(),
        });
    }
    let x = data.select(setup.feature_set).data;
    let y: Vec<f64> = rois.iter().map(|&r| log_roi1(r)).collect();
    let folds = kfold_plain(y.len(), setup.folds, setup.seed)?;
    let mut fold_rmse = Vec::with_capacity(setup.folds);
    for f in 0..setup.folds {
        let (train, test) = split_rows(&folds, f);
        let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let fit = train_regressor(x.select(Axis(0), &train).view(), &y_train, &setup.model)?;
        let pred: Vec<f64> = test.iter().map(|&i| fit.predict(&x.row(i).to_vec())).collect();
        let actual: Vec<f64> = test.iter().map(|&i| y[i]).collect();
        fold_rmse.push(rmse(&pred, &actual)?);
    }
    Ok(RegressionReport {
        setup: setup.clone(),
        n_rows: y.len(),
        n_features: x.ncols(),
        rmse: fold_rmse.iter().sum::<f64>() / fold_rmse.len() as f64,
        fold_rmse,
    })
}
