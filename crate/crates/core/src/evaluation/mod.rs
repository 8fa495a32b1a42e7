//! Cross-validation harness, metric suite, grid reports and corpus diagnostics.

mod diagnostics;
mod experiment;
mod metrics;
mod report;

pub use diagnostics::{diagnostics_report, ActorTotal, Diagnostics, FeatureCorrelation, HistogramBin, ROI_BIN_EDGES};
pub use experiment::{
    run_experiment, run_regression, EvalReport, ExperimentSetup, FoldReport, Metrics, RegressionReport,
    RegressionSetup, ThresholdMode,
};
pub use metrics::{
    auc_binary, auc_weighted_multiclass, class_rates, kfold_plain, kfold_split, midranks, pearson, rmse, spearman,
    ClassRates,
};
pub use report::{
    coefficient_report, render_coefficients, render_csv, render_text, run_grid, run_grid_jobs, CoefficientReport,
    CoefficientRow, GridConfig, GridReport, Winner,
};
