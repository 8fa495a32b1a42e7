use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::{pearson, spearman};
use crate::corpus::CorpusView;
use crate::features::FeatureMatrix;
use crate::labeling::log_roi1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCorrelation {
    pub name: String,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorTotal {
    pub person_id: String,
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `None` when revenue or ROI is constant.
    pub revenue_roi_pearson: Option<f64>,
    /// Each feature column against log(ROI + 1).
    pub feature_correlations: Vec<FeatureCorrelation>,
    /// Agreement of actor rankings by total revenue and by total profit.
    pub actor_rank_spearman: Option<f64>,
    pub top_actors_by_revenue: Vec<ActorTotal>,
    pub top_actors_by_profit: Vec<ActorTotal>,
    pub roi_histogram: Vec<HistogramBin>,
}

pub const ROI_BIN_EDGES: [f64; 10] = [-1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0, f64::INFINITY];

/// Rows with known budget and revenue only.
pub fn diagnostics_report(view: &CorpusView<'_>, features: &FeatureMatrix, columns: &[&str]) -> Diagnostics {
    let movies: Vec<_> = view
        .movies()
        .filter(|m| m.roi().is_some() && m.revenue_usd.is_some())
        .collect();
    let revenue: Vec<f64> = movies.iter().map(|m| m.revenue_usd.unwrap_or(0) as f64).collect();
    let rois: Vec<f64> = movies.iter().filter_map(|m| m.roi()).collect();

    let by_id: BTreeMap<&str, usize> = features
        .movie_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let feature_correlations = columns
        .iter()
        .filter_map(|&name| {
            let col = features.column(name)?;
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for m in &movies {
                if let (Some(&i), Some(r)) = (by_id.get(m.movie_id.as_str()), m.roi()) {
                    xs.push(col[i]);
                    ys.push(log_roi1(r));
                }
            }
            Some(FeatureCorrelation {
                name: name.to_string(),
                pearson: pearson(&xs, &ys),
                spearman: spearman(&xs, &ys),
            })
        })
        .collect();

    let corpus = view.corpus();
    let mut totals: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    for m in &movies {
        let (r, p) = (m.revenue_usd.unwrap_or(0) as f64, m.profit().unwrap_or(0.0));
        for pid in &m.cast {
            let t = totals.entry(pid.as_str()).or_default();
            t.0 += r;
            t.1 += p;
        }
    }
    let gross: Vec<f64> = totals.values().map(|t| t.0).collect();
    let profit: Vec<f64> = totals.values().map(|t| t.1).collect();
    let top = |pick: fn(&(f64, f64)) -> f64| {
        let mut v: Vec<ActorTotal> = totals
            .iter()
            .map(|(&id, t)| ActorTotal {
                person_id: id.to_string(),
                name: corpus.person(id).map_or_else(|| id.to_string(), |p| p.name.clone()),
                value: pick(t),
            })
            .collect();
        v.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.person_id.cmp(&b.person_id)));
        v.truncate(10);
        v
    };

    let mut roi_histogram: Vec<HistogramBin> = ROI_BIN_EDGES
        .windows(2)
        .map(|w| HistogramBin {
            lower: w[0],
            upper: w[1],
            count: 0,
        })
        .collect();
    for &r in &rois {
        let b = ROI_BIN_EDGES[1..]
            .partition_point(|&e| e <= r)
            .min(roi_histogram.len() - 1);
        roi_histogram[b].count += 1;
    }

    Diagnostics {
        revenue_roi_pearson: pearson(&revenue, &rois),
        feature_correlations,
        actor_rank_spearman: spearman(&gross, &profit),
        top_actors_by_revenue: top(|t| t.0),
        top_actors_by_profit: top(|t| t.1),
        roi_histogram,
    }
}
