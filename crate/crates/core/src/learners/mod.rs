//! Classifiers, the cost-sensitive decision rule, penalized regressors and
//! the trained-model artifact.

mod artifact;
mod bayes;
mod binning;
mod boost;
mod forest;
mod linear;
mod logistic;
mod tree;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use artifact::{
    train_classifier_artifact, train_regressor_artifact, ModelBody, TrainedModel, ARTIFACT_MAGIC, ARTIFACT_VERSION,
};
pub use bayes::{fit_naive_bayes, NaiveBayes, NaiveBayesConfig};
pub use boost::{fit_logitboost, LogitBoost, LogitBoostConfig, Stump};
pub use forest::{fit_forest, tree_rng, ForestConfig, ForestFit, RandomForest};
pub use linear::{
    fit_lasso, fit_ridge, lambda_max, lasso_objective, lasso_vif_schedule, soft_threshold, vif, LassoConfig, LassoFit,
    LinearFit, ScheduleResult, VIF_LIMIT,
};
pub use logistic::{fit_logistic, Logistic, LogisticConfig};
pub use tree::{fit_tree, DecisionTree, Node, Split, TreeConfig};

use crate::error::{Error, Result};
use crate::labeling::CostMatrix;

/// Per-column centering and scaling; constant columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// Population standard deviation; 0 marks a constant column.
    pub scales: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<f64>) -> Self {
        let n = x.nrows() as f64;
        let mut means = Vec::with_capacity(x.ncols());
        let mut scales = Vec::with_capacity(x.ncols());
        for col in x.axis_iter(Axis(1)) {
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let m = col.sum() / n;
            if lo == hi {
                means.push(lo);
                scales.push(0.0);
            } else {
                means.push(m);
                scales.push((col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt());
            }
        }
        Standardizer { means, scales }
    }

    pub fn transform_row(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 })
            .collect()
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.to_owned();
        for (j, mut col) in z.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.means[j], self.scales[j]);
            col.mapv_inplace(|v| if s > 0.0 { (v - m) / s } else { 0.0 });
        }
        z
    }

    pub fn constant_columns(&self) -> Vec<usize> {
        (0..self.scales.len()).filter(|&j| self.scales[j] == 0.0).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Logistic,
    NaiveBayes,
    DecisionTree,
    RandomForest,
    Logitboost,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::Logistic,
        ClassifierKind::NaiveBayes,
        ClassifierKind::DecisionTree,
        ClassifierKind::RandomForest,
        ClassifierKind::Logitboost,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Logistic => "logistic",
            ClassifierKind::NaiveBayes => "naive_bayes",
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::Logitboost => "logitboost",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown classifier '{s}'")))
    }
}

/// How misclassification costs enter a multi-class model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMode {
    /// Plain training; costs only drive the minimum-expected-cost decision.
    #[default]
    Decision,
    /// Also resample training rows in proportion to their class's total cost.
    Reweight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    pub seed: u64,
    pub cost_mode: CostMode,
    pub logistic: LogisticConfig,
    pub naive_bayes: NaiveBayesConfig,
    pub tree: TreeConfig,
    pub forest: ForestConfig,
    pub logitboost: LogitBoostConfig,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig::new(ClassifierKind::RandomForest)
    }
}

impl ClassifierConfig {
    pub fn new(kind: ClassifierKind) -> Self {
        ClassifierConfig {
            kind,
            seed: 0,
            cost_mode: CostMode::Decision,
            logistic: LogisticConfig::default(),
            naive_bayes: NaiveBayesConfig::default(),
            tree: TreeConfig::default(),
            forest: ForestConfig::default(),
            logitboost: LogitBoostConfig::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Classifier {
    Logistic(Logistic),
    NaiveBayes(NaiveBayes),
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    Logitboost(LogitBoost),
}

impl Classifier {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Classifier::Logistic(_) => ClassifierKind::Logistic,
            Classifier::NaiveBayes(_) => ClassifierKind::NaiveBayes,
            Classifier::DecisionTree(_) => ClassifierKind::DecisionTree,
            Classifier::RandomForest(_) => ClassifierKind::RandomForest,
            Classifier::Logitboost(_) => ClassifierKind::Logitboost,
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            Classifier::Logistic(m) => m.bias.len(),
            Classifier::NaiveBayes(m) => m.log_prior.len(),
            Classifier::DecisionTree(m) => m.n_classes,
            Classifier::RandomForest(m) => m.n_classes,
            Classifier::Logitboost(m) => m.n_classes,
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Classifier::Logistic(m) => m.predict_proba(x),
            Classifier::NaiveBayes(m) => m.predict_proba(x),
            Classifier::DecisionTree(m) => m.predict_proba(x),
            Classifier::RandomForest(m) => m.predict_proba(x),
            Classifier::Logitboost(m) => m.predict_proba(x),
        }
    }

    /// One probability row per input row.
    pub fn predict_proba_matrix(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((x.nrows(), self.n_classes()));
        let mut buf = Vec::with_capacity(x.ncols());
        for (i, row) in x.rows().into_iter().enumerate() {
            buf.clear();
            buf.extend(row.iter());
            out.row_mut(i).assign(&Array1::from(self.predict_proba(&buf)));
        }
        out
    }
}

fn check_training(x: ArrayView2<f64>, y: &[usize], k: usize) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("feature matrix contains non-finite values".into()));
    }
    if let Some(&c) = y.iter().find(|&&c| c >= k) {
        return Err(Error::InvalidInput(format!("label {c} outside 0..{k}")));
    }
    let first = y.first().ok_or(Error::SingleClass)?;
    if y.iter().all(|c| c == first) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Trains one classifier over `k` ordinal classes.
pub fn train_classifier(x: ArrayView2<f64>, y: &[usize], k: usize, cfg: &ClassifierConfig) -> Result<Classifier> {
    check_training(x, y, k)?;
    Ok(match cfg.kind {
        ClassifierKind::Logistic => Classifier::Logistic(fit_logistic(x, y, k, &cfg.logistic)),
        ClassifierKind::NaiveBayes => Classifier::NaiveBayes(fit_naive_bayes(x, y, k, &cfg.naive_bayes)),
        ClassifierKind::DecisionTree => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            Classifier::DecisionTree(fit_tree(x, y, k, &cfg.tree, &mut rng))
        }
        ClassifierKind::RandomForest => Classifier::RandomForest(fit_forest(x, y, k, &cfg.forest, cfg.seed).forest),
        ClassifierKind::Logitboost => Classifier::Logitboost(fit_logitboost(x, y, k, &cfg.logitboost)),
    })
}

/// Trains with the configured cost mode: under [`CostMode::Reweight`] the
/// training rows are first resampled by class cost.
pub fn train_cost_aware(
    x: ArrayView2<f64>,
    y: &[usize],
    k: usize,
    cfg: &ClassifierConfig,
    cm: &CostMatrix,
) -> Result<Classifier> {
    match cfg.cost_mode {
        CostMode::Decision => train_classifier(x, y, k, cfg),
        CostMode::Reweight => {
            if k != 3 {
                return Err(Error::DimensionMismatch { expected: 3, actual: k });
            }
            let rows = cost_resample(y, cm, cfg.seed);
            let xs = x.select(Axis(0), &rows);
            let ys: Vec<usize> = rows.iter().map(|&r| y[r]).collect();
            train_classifier(xs.view(), &ys, k, cfg)
        }
    }
}

/// Rows drawn with replacement, each with probability proportional to the
/// total cost of misclassifying its class.
pub fn cost_resample(y: &[usize], cm: &CostMatrix, seed: u64) -> Vec<usize> {
    let weights: Vec<f64> = y.iter().map(|&c| cm.0[c].iter().sum::<f64>().max(1e-12)).collect();
    let total: f64 = weights.iter().sum();
    let mut cumulative = Vec::with_capacity(y.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w / total;
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x636f_7374);
    let mut rows: Vec<usize> = (0..y.len())
        .map(|_| {
            let u: f64 = rng.random();
            cumulative.partition_point(|&c| c < u).min(y.len() - 1)
        })
        .collect();
    rows.sort_unstable();
    rows
}

/// Index of the largest probability; ties go to the lower class.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// `sum_a P(a) cm[a][c]` for each candidate class `c`.
pub fn expected_costs(p: &[f64], cm: &CostMatrix) -> Result<[f64; 3]> {
    if p.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            actual: p.len(),
        });
    }
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        *o = (0..3).map(|a| p[a] * cm.cost(a, c)).sum();
    }
    Ok(out)
}

/// Minimum-expected-cost class; ties go to the lower ordinal class.
pub fn cost_sensitive_predict(p: &[f64], cm: &CostMatrix) -> Result<usize> {
    let costs = expected_costs(p, cm)?;
    let mut best = 0;
    for c in 1..3 {
        if costs[c] < costs[best] {
            best = c;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorKind {
    Lasso,
    Ridge,
}

impl RegressorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RegressorKind::Lasso => "lasso",
            RegressorKind::Ridge => "ridge",
        }
    }
}

impl FromStr for RegressorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lasso" => Ok(RegressorKind::Lasso),
            "ridge" => Ok(RegressorKind::Ridge),
            _ => Err(Error::InvalidInput(format!("unknown regressor '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressorConfig {
    pub kind: RegressorKind,
    pub lasso: LassoConfig,
    pub ridge_lambda: f64,
    /// When nonempty, LASSO picks its penalty by the VIF schedule.
    pub lambda_grid: Vec<f64>,
}

impl Default for RegressorConfig {
    fn default() -> Self {
        RegressorConfig {
            kind: RegressorKind::Lasso,
            lasso: LassoConfig::default(),
            ridge_lambda: 1.0,
            lambda_grid: Vec::new(),
        }
    }
}

/// Fits a regressor of the configured kind.
pub fn train_regressor(x: ArrayView2<f64>, y: &[f64], cfg: &RegressorConfig) -> Result<LinearFit> {
    match cfg.kind {
        RegressorKind::Ridge => fit_ridge(x, y, cfg.ridge_lambda),
        RegressorKind::Lasso if cfg.lambda_grid.is_empty() => Ok(fit_lasso(x, y, &cfg.lasso)?.fit),
        RegressorKind::Lasso => Ok(lasso_vif_schedule(x, y, &cfg.lambda_grid, &cfg.lasso)?.fit.fit),
    }
}
