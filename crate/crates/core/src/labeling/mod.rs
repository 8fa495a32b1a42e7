//! ROI, decision boundaries, class labels and misclassification costs.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Offset keeping `log_roi1` finite at a total loss (ROI = -1).
pub const LOG_ROI_EPS: f64 = 1e-6;

pub fn roi(revenue: f64, budget: f64) -> Result<f64> {
    if !(budget > 0.0) {
        return Err(Error::InvalidInput(format!("budget must be positive, got {budget}")));
    }
    if !(revenue >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "revenue must be nonnegative, got {revenue}"
        )));
    }
    Ok((revenue - budget) / budget)
}

/// Natural log of ROI + 1 (+ `LOG_ROI_EPS`); the regression target.
pub fn log_roi1(roi: f64) -> f64 {
    (roi + 1.0 + LOG_ROI_EPS).ln()
}

/// Inverse of `log_roi1`.
pub fn roi_from_log(y: f64) -> f64 {
    y.exp() - 1.0 - LOG_ROI_EPS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    BinaryTop30,
    BinaryRoi67,
    MultiTertile,
    MultiQuartileMerged,
}

impl LabelKind {
    pub const ALL: [LabelKind; 4] = [
        LabelKind::BinaryTop30,
        LabelKind::BinaryRoi67,
        LabelKind::MultiTertile,
        LabelKind::MultiQuartileMerged,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LabelKind::BinaryTop30 => "binary_top30",
            LabelKind::BinaryRoi67 => "binary_roi67",
            LabelKind::MultiTertile => "multi_tertile",
            LabelKind::MultiQuartileMerged => "multi_quartile_merged",
        }
    }

    pub fn num_classes(self) -> usize {
        match self {
            LabelKind::BinaryTop30 | LabelKind::BinaryRoi67 => 2,
            _ => 3,
        }
    }

    pub fn is_multiclass(self) -> bool {
        self.num_classes() == 3
    }

    /// Class names, lowest (worst ROI) first.
    pub fn classes(self) -> &'static [&'static str] {
        if self.is_multiclass() {
            &["negative", "neutral", "positive"]
        } else {
            &["negative", "positive"]
        }
    }
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LabelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LabelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown label spec '{s}'")))
    }
}

/// How the fixed binary_roi67 cutoff is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Roi67Rule {
    /// ROI >= 0.67.
    #[default]
    Fixed,
    /// ROI >= mean + sd / 4 of the resolution data.
    MeanPlusQuarterSd,
}

/// An ROI above `value` (or equal to it, when `inclusive`) moves a movie
/// into the next class up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub value: f64,
    pub inclusive: bool,
}

impl Boundary {
    fn passed_by(&self, roi: f64) -> bool {
        roi > self.value || (self.inclusive && roi == self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSpec {
    pub kind: LabelKind,
    /// Ascending; one fewer than the number of classes.
    pub boundaries: Vec<Boundary>,
    pub classes: Vec<String>,
    /// Some class received no movies from the resolution data.
    pub degenerate: bool,
}

impl LabelSpec {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Ordinal class index, 0 = negative.
    pub fn classify(&self, roi: f64) -> usize {
        self.boundaries.iter().filter(|b| b.passed_by(roi)).count()
    }
}

/// Lowest observed value `v` with at most `num/den` of `sorted` strictly
/// above it.
fn cutoff(sorted: &[f64], num: usize, den: usize) -> f64 {
    let n = sorted.len();
    for &v in sorted {
        let above = n - sorted.partition_point(|&x| x <= v);
        if above * den <= num * n {
            return v;
        }
    }
    sorted[n - 1]
}

pub fn resolve_boundaries(rois: &[f64], kind: LabelKind) -> Result<LabelSpec> {
    resolve_boundaries_with(rois, kind, Roi67Rule::Fixed)
}

pub fn resolve_boundaries_with(rois: &[f64], kind: LabelKind, rule: Roi67Rule) -> Result<LabelSpec> {
    if rois.is_empty() {
        return Err(Error::InvalidInput("cannot resolve boundaries on an empty set".into()));
    }
    if let Some(bad) = rois.iter().find(|r| !r.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite ROI {bad}")));
    }
    let mut sorted = rois.to_vec();
    sorted.sort_by(f64::total_cmp);
    let exclusive = |value| Boundary {
        value,
        inclusive: false,
    };
    let boundaries = match kind {
        LabelKind::BinaryTop30 => vec![exclusive(cutoff(&sorted, 3, 10))],
        LabelKind::BinaryRoi67 => {
            let value = match rule {
                Roi67Rule::Fixed => 0.67,
                Roi67Rule::MeanPlusQuarterSd => {
                    let n = rois.len() as f64;
                    let mean = rois.iter().sum::<f64>() / n;
                    let sd = (rois.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
                    mean + sd / 4.0
                }
            };
            vec![Boundary { value, inclusive: true }]
        }
        LabelKind::MultiTertile => vec![exclusive(cutoff(&sorted, 2, 3)), exclusive(cutoff(&sorted, 1, 3))],
        LabelKind::MultiQuartileMerged => vec![exclusive(cutoff(&sorted, 3, 4)), exclusive(cutoff(&sorted, 1, 4))],
    };
    let mut spec = LabelSpec {
        kind,
        boundaries,
        classes: kind.classes().iter().map(|s| s.to_string()).collect(),
        degenerate: false,
    };
    let mut seen = vec![false; spec.num_classes()];
    for &r in rois {
        seen[spec.classify(r)] = true;
    }
    spec.degenerate = seen.contains(&false);
    Ok(spec)
}

pub fn label(rois: &[f64], spec: &LabelSpec) -> Vec<usize> {
    rois.iter().map(|&r| spec.classify(r)).collect()
}

/// Misclassification costs, rows = actual class, columns = predicted, both
/// in ordinal order (negative, neutral, positive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix(pub [[f64; 3]; 3]);

impl Default for CostMatrix {
    fn default() -> Self {
        CostMatrix([[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]])
    }
}

impl CostMatrix {
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self> {
        for (i, row) in m.iter().enumerate() {
            if row[i] != 0.0 {
                return Err(Error::InvalidInput("cost matrix diagonal must be zero".into()));
            }
            if row.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
                return Err(Error::InvalidInput("costs must be finite and nonnegative".into()));
            }
        }
        Ok(CostMatrix(m))
    }

    pub fn cost(&self, actual: usize, predicted: usize) -> f64 {
        self.0[actual][predicted]
    }
}

pub fn total_cost(actual: &[usize], predicted: &[usize], cm: &CostMatrix) -> Result<f64> {
    if actual.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            expected: actual.len(),
            actual: predicted.len(),
        });
    }
    Ok(actual.iter().zip(predicted).map(|(&a, &p)| cm.cost(a, p)).sum())
}

/// One labels-export row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRow {
    pub movie_id: String,
    pub roi: f64,
    /// Class names, one per spec in `specs` order.
    pub labels: Vec<String>,
}

pub fn write_labels_csv<W: Write>(rows: &[LabelRow], specs: &[&LabelSpec], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["movie_id".to_string(), "roi".into(), "log_roi1".into()];
    header.extend(specs.iter().map(|s| format!("label_{}", s.kind)));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.movie_id.clone(), r.roi.to_string(), log_roi1(r.roi).to_string()];
        rec.extend(r.labels.iter().cloned());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<labels>", e))?;
    Ok(())
}
