use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::experiment::{
    run_experiment, run_regression, EvalReport, ExperimentSetup, RegressionReport, RegressionSetup, ThresholdMode,
};
use crate::error::{Error, Result};
use crate::features::{FeatureGroup, FeatureMatrix, FeatureSchema, FeatureSet};
use crate::labeling::{CostMatrix, LabelKind, Roi67Rule};
use crate::learners::{ClassifierConfig, LinearFit, RegressorConfig};

/// The full model x feature-set x label grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub labels: Vec<LabelKind>,
    pub roi67_rule: Roi67Rule,
    pub thresholds: Vec<ThresholdMode>,
    pub models: Vec<ClassifierConfig>,
    pub regressors: Vec<RegressorConfig>,
    pub feature_sets: Vec<FeatureSet>,
    pub folds: usize,
    pub seed: u64,
    pub cost_matrix: CostMatrix,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            labels: LabelKind::ALL.to_vec(),
            roi67_rule: Roi67Rule::Fixed,
            thresholds: vec![ThresholdMode::Global],
            models: vec![ClassifierConfig::default()],
            regressors: vec![RegressorConfig::default()],
            feature_sets: FeatureSet::ALL.to_vec(),
            folds: 10,
            seed: 0,
            cost_matrix: CostMatrix::default(),
        }
    }
}

/// Best model per (label, threshold mode, feature set) under one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Winner {
    pub label: LabelKind,
    pub thresholds: ThresholdMode,
    pub feature_set: FeatureSet,
    pub metric: String,
    pub model: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub config: GridConfig,
    pub classification: Vec<EvalReport>,
    pub regression: Vec<RegressionReport>,
    pub winners: Vec<Winner>,
}

pub fn run_grid(data: &FeatureMatrix, rois: &[f64], cfg: &GridConfig) -> Result<GridReport> {
    run_grid_jobs(data, rois, cfg, 1)
}

/// Evaluates `f(i)` for `i < n` on at most `jobs` threads; results
/// keep index order.
fn run_indexed<T: Send>(n: usize, jobs: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let jobs = jobs.clamp(1, n.max(1));
    if jobs == 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<T>> = (0..n).map(|_| None).collect();
    let results = Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let out = f(i);
                results.lock().expect("grid results lock")[i] = Some(out);
            });
        }
    });
    slots.into_iter().map(|s| s.expect("every cell ran")).collect()
}

/// `run_grid` with the cells spread over `jobs` worker threads. Output does
/// not depend on `jobs`.
pub fn run_grid_jobs(data: &FeatureMatrix, rois: &[f64], cfg: &GridConfig, jobs: usize) -> Result<GridReport> {
    if (cfg.models.is_empty() && cfg.regressors.is_empty()) || cfg.feature_sets.is_empty() {
        return Err(Error::InvalidInput("evaluation grid is empty".into()));
    }
    let mut setups = Vec::new();
    for &label in &cfg.labels {
        for &thresholds in &cfg.thresholds {
            for model in &cfg.models {
                for &feature_set in &cfg.feature_sets {
                    let mut setup = ExperimentSetup::new(label, model.clone(), feature_set);
                    setup.roi67_rule = cfg.roi67_rule;
                    setup.thresholds = thresholds;
                    setup.folds = cfg.folds;
                    setup.seed = cfg.seed;
                    setup.cost_matrix = cfg.cost_matrix;
                    setups.push(setup);
                }
            }
        }
    }
    let mut reg_setups = Vec::new();
    for model in &cfg.regressors {
        for &feature_set in &cfg.feature_sets {
            reg_setups.push(RegressionSetup {
                model: model.clone(),
                feature_set,
                folds: cfg.folds,
                seed: cfg.seed,
            });
        }
    }
    let n_class = setups.len();
    let cells = run_indexed(n_class + reg_setups.len(), jobs, |i| {
        if i < n_class {
            run_experiment(data, rois, &setups[i]).map(Cell::Class)
        } else {
            run_regression(data, rois, &reg_setups[i - n_class]).map(Cell::Reg)
        }
    });
    let mut classification = Vec::new();
    let mut regression = Vec::new();
    for c in cells {
        match c? {
            Cell::Class(r) => classification.push(r),
            Cell::Reg(r) => regression.push(r),
        }
    }
    let winners = winners(&classification);
    Ok(GridReport {
        config: cfg.clone(),
        classification,
        regression,
        winners,
    })
}

enum Cell {
    Class(EvalReport),
    Reg(RegressionReport),
}

fn winners(reports: &[EvalReport]) -> Vec<Winner> {
    type Key = (LabelKind, ThresholdMode, FeatureSet);
    let mut groups: BTreeMap<(usize, usize, usize), (Key, Vec<&EvalReport>)> = BTreeMap::new();
    for r in reports {
        let s = &r.setup;
        let key = (
            LabelKind::ALL.iter().position(|&l| l == s.label).unwrap_or(0),
            s.thresholds as usize,
            s.feature_set as usize,
        );
        groups
            .entry(key)
            .or_insert_with(|| ((s.label, s.thresholds, s.feature_set), Vec::new()))
            .1
            .push(r);
    }
    let metrics: [(&str, fn(&EvalReport) -> Option<f64>, bool); 3] = [
        ("auc", |r| Some(r.aggregate.auc), true),
        ("accuracy", |r| Some(r.aggregate.accuracy), true),
        ("total_cost", |r| r.aggregate.total_cost, false),
    ];
    let mut out = Vec::new();
    for ((label, thresholds, feature_set), rs) in groups.into_values() {
        for (name, get, higher) in metrics {
            let mut best: Option<(&EvalReport, f64)> = None;
            for r in &rs {
                let Some(v) = get(r) else { continue };
                let better = match best {
                    None => true,
                    Some((_, b)) => (higher && v > b) || (!higher && v < b),
                };
                if better {
                    best = Some((r, v));
                }
            }
            if let Some((r, v)) = best {
                out.push(Winner {
                    label,
                    thresholds,
                    feature_set,
                    metric: name.to_string(),
                    model: r.setup.model.kind.as_str().to_string(),
                    value: v,
                });
            }
        }
    }
    out
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"))
}

/// Plain-text tables, one block per label and threshold mode.
pub fn render_text(report: &GridReport) -> String {
    let mut s = String::new();
    let mut last: Option<(LabelKind, ThresholdMode)> = None;
    for r in &report.classification {
        let key = (r.setup.label, r.setup.thresholds);
        if last != Some(key) {
            let _ = writeln!(
                s,
                "\n== {} ({} thresholds, {} folds) ==",
                key.0,
                key.1.as_str(),
                r.setup.folds
            );
            let _ = writeln!(
                s,
                "{:<14} {:<12} {:>6} {:>6} {:>7} {:>7} {:>7} {:>7} {:>9} {:>9}",
                "model", "features", "auc", "acc", "prec+", "rec+", "prec-", "rec-", "cost", "argmax"
            );
            last = Some(key);
        }
        let m = &r.aggregate;
        let _ = writeln!(
            s,
            "{:<14} {:<12} {:>6.3} {:>6.3} {:>7.3} {:>7.3} {:>7.3} {:>7.3} {:>9} {:>9}",
            r.setup.model.kind.as_str(),
            r.setup.feature_set.as_str(),
            m.auc,
            m.accuracy,
            m.precision_pos,
            m.recall_pos,
            m.precision_neg,
            m.recall_neg,
            cell(m.total_cost),
            cell(m.argmax_cost),
        );
    }
    if !report.regression.is_empty() {
        let _ = writeln!(s, "\n== log(ROI + 1) regression ==");
        let _ = writeln!(s, "{:<14} {:<12} {:>8}", "model", "features", "rmse");
        for r in &report.regression {
            let _ = writeln!(
                s,
                "{:<14} {:<12} {:>8.4}",
                r.setup.model.kind.as_str(),
                r.setup.feature_set.as_str(),
                r.rmse
            );
        }
    }
    if !report.winners.is_empty() {
        let _ = writeln!(s, "\n== best model per metric ==");
        for w in &report.winners {
            let _ = writeln!(
                s,
                "{:<16} {:<10} {:<12} {:<10} {:<14} {:.3}",
                w.label.as_str(),
                w.thresholds.as_str(),
                w.feature_set.as_str(),
                w.metric,
                w.model,
                w.value
            );
        }
    }
    s
}

/// One CSV row per classification experiment.
pub fn render_csv(report: &GridReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "label",
        "thresholds",
        "model",
        "feature_set",
        "auc",
        "accuracy",
        "precision_pos",
        "recall_pos",
        "precision_neg",
        "recall_neg",
        "total_cost",
        "argmax_cost",
    ])?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
    for r in &report.classification {
        let m = &r.aggregate;
        w.write_record([
            r.setup.label.as_str().to_string(),
            r.setup.thresholds.as_str().to_string(),
            r.setup.model.kind.as_str().to_string(),
            r.setup.feature_set.as_str().to_string(),
            m.auc.to_string(),
            m.accuracy.to_string(),
            m.precision_pos.to_string(),
            m.recall_pos.to_string(),
            m.precision_neg.to_string(),
            m.recall_neg.to_string(),
            opt(m.total_cost),
            opt(m.argmax_cost),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub name: String,
    pub group: FeatureGroup,
    pub is_new: bool,
    /// Per original unit of the column.
    pub coefficient: f64,
    /// Per standard deviation of the column.
    pub standardized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientReport {
    pub nonzero: usize,
    pub by_group: Vec<(FeatureGroup, usize)>,
    pub new_nonzero: usize,
    pub classic_nonzero: usize,
    pub positive: usize,
    pub negative: usize,
    /// Largest standardized coefficients first.
    pub top_positive: Vec<CoefficientRow>,
    /// Most negative standardized coefficients first.
    pub top_negative: Vec<CoefficientRow>,
}

pub fn coefficient_report(fit: &LinearFit, schema: &FeatureSchema, top_k: usize) -> Result<CoefficientReport> {
    if fit.standardized.len() != schema.len() {
        return Err(Error::DimensionMismatch {
            expected: schema.len(),
            actual: fit.standardized.len(),
        });
    }
    let coefs = fit.coefficients();
    let rows: Vec<CoefficientRow> = fit
        .nonzero()
        .into_iter()
        .map(|j| CoefficientRow {
            name: schema.columns[j].name.clone(),
            group: schema.columns[j].group,
            is_new: schema.columns[j].is_new,
            coefficient: coefs[j],
            standardized: fit.standardized[j],
        })
        .collect();
    let by_group = FeatureGroup::ALL
        .iter()
        .map(|&g| (g, rows.iter().filter(|r| r.group == g).count()))
        .filter(|&(_, c)| c > 0)
        .collect();
    let mut pos: Vec<CoefficientRow> = rows.iter().filter(|r| r.standardized > 0.0).cloned().collect();
    pos.sort_by(|a, b| b.standardized.total_cmp(&a.standardized).then(a.name.cmp(&b.name)));
    let mut neg: Vec<CoefficientRow> = rows.iter().filter(|r| r.standardized < 0.0).cloned().collect();
    neg.sort_by(|a, b| a.standardized.total_cmp(&b.standardized).then(a.name.cmp(&b.name)));
    let (positive, negative) = (pos.len(), neg.len());
    pos.truncate(top_k);
    neg.truncate(top_k);
    Ok(CoefficientReport {
        nonzero: rows.len(),
        by_group,
        new_nonzero: rows.iter().filter(|r| r.is_new).count(),
        classic_nonzero: rows.iter().filter(|r| !r.is_new).count(),
        positive,
        negative,
        top_positive: pos,
        top_negative: neg,
    })
}

pub fn render_coefficients(r: &CoefficientReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "nonzero coefficients: {} ({} positive, {} negative; {} new, {} classic)",
        r.nonzero, r.positive, r.negative, r.new_nonzero, r.classic_nonzero
    );
    for (g, c) in &r.by_group {
        let _ = writeln!(s, "  {:<16} {c}", g.as_str());
    }
    for (title, rows) in [("top positive", &r.top_positive), ("top negative", &r.top_negative)] {
        let _ = writeln!(s, "{title}:");
        for row in rows {
            let _ = writeln!(
                s,
                "  {:<36} {:<16} {:>4} {:>12.5} {:>14.6e}",
                row.name,
                row.group.as_str(),
                if row.is_new { "new" } else { "" },
                row.standardized,
                row.coefficient
            );
        }
    }
    s
}
