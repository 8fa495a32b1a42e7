//! Prediction and what-if handlers over an immutable model snapshot.
//!
//! Handlers are plain functions from request values to response values;
//! an HTTP layer only has to route bytes to [`Service::handle`].

mod request;
mod router;

use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::collab::SnapshotSet;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureEngine, FeatureGroup, FeatureSchema};
use crate::labeling::{CostMatrix, LabelSpec};
use crate::learners::{Classifier, ModelBody, TrainedModel};
use crate::topic::TopicModel;

pub use request::{ColdStart, ScenarioRequest, WhatIfRequest, MAX_EDITS, SCENARIO_FIELDS};
pub use router::Reply;

/// Error body: `{code, message, field?}` plus the HTTP status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

impl ApiError {
    pub fn new(status: u16, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_string(),
            message: message.into(),
            field: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(400, "bad_request", message)
    }

    pub fn not_found(code: &str, message: impl Into<String>) -> Self {
        Self::new(404, code, message)
    }

    pub fn not_loaded() -> Self {
        Self::new(503, "not_loaded", "no model is loaded")
    }

    pub fn field(mut self, field: impl Into<String>) -> Self {
        self.field = Some(field.into());
        self
    }
}

/// Everything a prediction needs, fixed at load time.
pub struct ServiceState {
    corpus: Corpus,
    snapshots: SnapshotSet,
    topics: TopicModel,
    feature_config: FeatureConfig,
    schema: FeatureSchema,
    classifier: TrainedModel,
    regressor: Option<TrainedModel>,
}

fn check_model(model: &TrainedModel, schema: &FeatureSchema, corpus_fp: &str, role: &str) -> Result<()> {
    model
        .check_schema(&schema.subset(model.feature_set))
        .map_err(|e| Error::Artifact(format!("{role}: {e}")))?;
    if model.corpus_fingerprint != corpus_fp {
        return Err(Error::Artifact(format!("{role} was trained on a different corpus")));
    }
    Ok(())
}

impl ServiceState {
    /// Validates that both models were trained against this corpus and
    /// feature configuration.
    pub fn new(
        corpus: Corpus,
        snapshots: SnapshotSet,
        topics: TopicModel,
        feature_config: FeatureConfig,
        classifier: TrainedModel,
        regressor: Option<TrainedModel>,
    ) -> Result<Self> {
        let schema = FeatureEngine::new(&corpus, &snapshots, &topics, feature_config.clone())?
            .schema()
            .clone();
        let fp = corpus.fingerprint();
        if !matches!(classifier.body, ModelBody::Classifier { .. }) {
            return Err(Error::Artifact("classifier slot holds a regression model".into()));
        }
        check_model(&classifier, &schema, &fp, "classifier")?;
        if let Some(r) = &regressor {
            if !matches!(r.body, ModelBody::Regressor { .. }) {
                return Err(Error::Artifact("regressor slot holds a classifier".into()));
            }
            check_model(r, &schema, &fp, "regressor")?;
        }
        Ok(ServiceState {
            corpus,
            snapshots,
            topics,
            feature_config,
            schema,
            classifier,
            regressor,
        })
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    fn engine(&self) -> Result<FeatureEngine<'_>, ApiError> {
        FeatureEngine::new(&self.corpus, &self.snapshots, &self.topics, self.feature_config.clone())
            .map_err(|e| ApiError::new(500, "internal", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnInfo {
    pub name: String,
    pub group: FeatureGroup,
    pub is_new: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub kind: String,
    pub feature_set: String,
    pub schema_fingerprint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<LabelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_matrix: Option<CostMatrix>,
    pub config: serde_json::Value,
}

impl ModelSummary {
    fn of(m: &TrainedModel) -> Self {
        let (label, cost_matrix, config) = match &m.body {
            ModelBody::Classifier {
                config,
                label,
                cost_matrix,
                ..
            } => (Some(label.clone()), *cost_matrix, serde_json::to_value(config)),
            ModelBody::Regressor { config, .. } => (None, None, serde_json::to_value(config)),
        };
        ModelSummary {
            kind: m.kind().to_string(),
            feature_set: m.feature_set.as_str().to_string(),
            schema_fingerprint: m.schema_fingerprint.clone(),
            label,
            cost_matrix,
            config: config.unwrap_or(serde_json::Value::Null),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub classifier: ModelSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regressor: Option<ModelSummary>,
    pub feature_schema_fingerprint: String,
    pub columns: Vec<ColumnInfo>,
    pub corpus_fingerprint: String,
    pub corpus_movies: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_years: Option<(i32, i32)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEcho {
    pub name: String,
    pub group: FeatureGroup,
    pub is_new: bool,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionResponse {
    pub label_spec: String,
    pub classes: Vec<String>,
    pub probabilities: Vec<f64>,
    pub predicted_class: String,
    /// Minimum-expected-cost class for multi-class models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_sensitive_class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_roi1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roi: Option<f64>,
    pub schema_fingerprint: String,
    pub features: Vec<FeatureEcho>,
    pub cold_start: ColdStart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfEntry {
    /// Index into the request's edits; `None` for the base scenario.
    pub patch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edit: Option<serde_json::Map<String, serde_json::Value>>,
    pub prediction: PredictionResponse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub name: String,
    pub group: FeatureGroup,
    pub value: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupContribution {
    pub group: FeatureGroup,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub model: String,
    /// `log_roi1`, or `logit:<class>` for a logistic classifier.
    pub target: String,
    pub intercept: f64,
    /// Intercept plus every contribution.
    pub score: f64,
    /// Sorted by descending magnitude.
    pub contributions: Vec<Contribution>,
    pub groups: Vec<GroupContribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonSuggestion {
    pub person_id: String,
    pub name: String,
    pub appearances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonLookup {
    pub query: String,
    pub suggestions: Vec<PersonSuggestion>,
    /// No match: the query can be used as a cold-start person.
    pub hypothetical: bool,
}

pub const PERSON_SUGGESTIONS: usize = 10;

impl ServiceState {
    pub fn model_info(&self) -> ModelInfo {
        ModelInfo {
            classifier: ModelSummary::of(&self.classifier),
            regressor: self.regressor.as_ref().map(ModelSummary::of),
            feature_schema_fingerprint: self.schema.fingerprint(),
            columns: self
                .schema
                .columns
                .iter()
                .map(|c| ColumnInfo {
                    name: c.name.clone(),
                    group: c.group,
                    is_new: c.is_new,
                })
                .collect(),
            corpus_fingerprint: self.classifier.corpus_fingerprint.clone(),
            corpus_movies: self.corpus.len(),
            corpus_years: self.corpus.year_range(),
        }
    }

    /// The full feature row the batch pipeline would compute for this scenario.
    pub fn feature_row(&self, req: &ScenarioRequest) -> Result<(Vec<f64>, ColdStart), ApiError> {
        let resolved = req.resolve(&self.corpus)?;
        let engine = self.engine()?;
        Ok((engine.row(&resolved.input), resolved.cold_start))
    }

    fn predict_with(&self, engine: &FeatureEngine<'_>, req: &ScenarioRequest) -> Result<PredictionResponse, ApiError> {
        let resolved = req.resolve(&self.corpus)?;
        let row = engine.row(&resolved.input);
        let internal = |e: Error| ApiError::new(500, "internal", e.to_string());
        let (sub_schema, sub_row) = self.project(&self.classifier, &row);
        let p = self.classifier.predict_proba(&sub_schema, &sub_row).map_err(internal)?;
        let (best, cost_class) = self.classifier.predict_class(&sub_schema, &sub_row).map_err(internal)?;
        let ModelBody::Classifier { label, .. } = &self.classifier.body else {
            unreachable!("checked at load")
        };
        let (log_roi1, roi) = match &self.regressor {
            Some(r) => {
                let (s, x) = self.project(r, &row);
                let (v, roi) = r.predict_value(&s, &x).map_err(internal)?;
                (Some(v), Some(roi))
            }
            None => (None, None),
        };
        Ok(PredictionResponse {
            label_spec: label.kind.as_str().to_string(),
            classes: label.classes.clone(),
            probabilities: p,
            predicted_class: label.classes[best].clone(),
            cost_sensitive_class: cost_class.map(|c| label.classes[c].clone()),
            log_roi1,
            roi,
            schema_fingerprint: self.schema.fingerprint(),
            features: self
                .schema
                .columns
                .iter()
                .zip(&row)
                .map(|(c, &value)| FeatureEcho {
                    name: c.name.clone(),
                    group: c.group,
                    is_new: c.is_new,
                    value,
                })
                .collect(),
            cold_start: resolved.cold_start,
        })
    }

    fn project(&self, model: &TrainedModel, row: &[f64]) -> (FeatureSchema, Vec<f64>) {
        let idx = self.schema.select(model.feature_set);
        (
            self.schema.subset(model.feature_set),
            idx.iter().map(|&i| row[i]).collect(),
        )
    }

    pub fn predict(&self, req: &ScenarioRequest) -> Result<PredictionResponse, ApiError> {
        self.predict_with(&self.engine()?, req)
    }

    pub fn whatif(&self, req: &WhatIfRequest) -> Result<Vec<WhatIfEntry>, ApiError> {
        if req.edits.len() > MAX_EDITS {
            return Err(
                ApiError::bad_request(format!("at most {MAX_EDITS} edits per call, got {}", req.edits.len()))
                    .field("edits"),
            );
        }
        let scenarios = req
            .edits
            .iter()
            .enumerate()
            .map(|(i, e)| req.base.patched(e, i))
            .collect::<Result<Vec<_>, _>>()?;
        let engine = self.engine()?;
        let mut out = vec![WhatIfEntry {
            patch: None,
            edit: None,
            prediction: self.predict_with(&engine, &req.base)?,
        }];
        for (i, (s, e)) in scenarios.iter().zip(&req.edits).enumerate() {
            let prediction = self.predict_with(&engine, s).map_err(|mut err| {
                err.message = format!("edit {i}: {}", err.message);
                err.field = Some(format!(
                    "edits[{i}]{}",
                    err.field.map(|f| format!(".{f}")).unwrap_or_default()
                ));
                err
            })?;
            out.push(WhatIfEntry {
                patch: Some(i),
                edit: Some(e.clone()),
                prediction,
            });
        }
        Ok(out)
    }

    pub fn explain(&self, req: &ScenarioRequest) -> Result<Explanation, ApiError> {
        let (row, _) = self.feature_row(req)?;
        let linear_regressor = self.regressor.as_ref().and_then(|r| match &r.body {
            ModelBody::Regressor { model, .. } => Some((r, model)),
            _ => None,
        });
        let (model, target, intercept, contribs, cols) = if let Some((r, fit)) = linear_regressor {
            let (schema, x) = self.project(r, &row);
            (
                r.kind().to_string(),
                "log_roi1".to_string(),
                fit.base,
                fit.contributions(&x),
                (schema, x),
            )
        } else if let ModelBody::Classifier {
            model: Classifier::Logistic(lr),
            label,
            ..
        } = &self.classifier.body
        {
            let (schema, x) = self.project(&self.classifier, &row);
            let c = label.num_classes() - 1;
            let z = lr.scaler.transform_row(&x);
            let contribs: Vec<f64> = lr.weights.row(c).iter().zip(&z).map(|(w, v)| w * v).collect();
            (
                "logistic".to_string(),
                format!("logit:{}", label.classes[c]),
                lr.bias[c],
                contribs,
                (schema, x),
            )
        } else {
            return Err(ApiError::new(409, "no_linear_model", "no linear model is loaded"));
        };
        let (schema, x) = cols;
        let score = intercept + contribs.iter().sum::<f64>();
        let mut contributions: Vec<Contribution> = schema
            .columns
            .iter()
            .zip(&x)
            .zip(&contribs)
            .map(|((c, &value), &contribution)| Contribution {
                name: c.name.clone(),
                group: c.group,
                value,
                contribution,
            })
            .collect();
        contributions.sort_by(|a, b| b.contribution.abs().total_cmp(&a.contribution.abs()));
        let groups = FeatureGroup::ALL
            .iter()
            .filter(|g| schema.columns.iter().any(|c| c.group == **g))
            .map(|&g| GroupContribution {
                group: g,
                total: contributions
                    .iter()
                    .filter(|c| c.group == g)
                    .map(|c| c.contribution)
                    .sum(),
            })
            .collect();
        Ok(Explanation {
            model,
            target,
            intercept,
            score,
            contributions,
            groups,
        })
    }

    pub fn persons(&self, query: &str) -> Result<PersonLookup, ApiError> {
        let q = query.trim();
        if q.chars().count() < 2 {
            return Err(ApiError::bad_request("query needs at least 2 characters").field("q"));
        }
        let needle = q.to_lowercase();
        let mut hits: Vec<PersonSuggestion> = self
            .corpus
            .persons()
            .filter(|p| {
                p.person_id.to_lowercase().starts_with(&needle)
                    || p.name.to_lowercase().split_whitespace().any(|w| w.starts_with(&needle))
                    || p.name.to_lowercase().starts_with(&needle)
            })
            .map(|p| PersonSuggestion {
                person_id: p.person_id.clone(),
                name: p.name.clone(),
                appearances: p.filmography.len(),
            })
            .collect();
        hits.sort_by(|a, b| {
            b.appearances
                .cmp(&a.appearances)
                .then_with(|| a.person_id.cmp(&b.person_id))
        });
        hits.truncate(PERSON_SUGGESTIONS);
        Ok(PersonLookup {
            query: q.to_string(),
            hypothetical: hits.is_empty(),
            suggestions: hits,
        })
    }
}

/// Holds the current snapshot; a reload swaps it while in-flight requests
/// keep the one they started with.
#[derive(Default)]
pub struct Service {
    current: RwLock<Option<Arc<ServiceState>>>,
}

impl Service {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn loaded(state: ServiceState) -> Self {
        let s = Self::new();
        s.install(state);
        s
    }

    pub fn install(&self, state: ServiceState) {
        *self.current.write().expect("service lock") = Some(Arc::new(state));
    }

    pub fn snapshot(&self) -> Option<Arc<ServiceState>> {
        self.current.read().expect("service lock").clone()
    }

    fn state(&self) -> Result<Arc<ServiceState>, ApiError> {
        self.snapshot().ok_or_else(ApiError::not_loaded)
    }

    pub fn healthz(&self) -> (u16, Health) {
        match self.snapshot() {
            Some(_) => (200, Health { status: "ready".into() }),
            None => (
                503,
                Health {
                    status: "loading".into(),
                },
            ),
        }
    }

    pub fn model_info(&self) -> Result<ModelInfo, ApiError> {
        Ok(self.state()?.model_info())
    }

    pub fn predict(&self, req: &ScenarioRequest) -> Result<PredictionResponse, ApiError> {
        self.state()?.predict(req)
    }

    pub fn whatif(&self, req: &WhatIfRequest) -> Result<Vec<WhatIfEntry>, ApiError> {
        self.state()?.whatif(req)
    }

    pub fn explain(&self, req: &ScenarioRequest) -> Result<Explanation, ApiError> {
        self.state()?.explain(req)
    }

    pub fn persons(&self, query: &str) -> Result<PersonLookup, ApiError> {
        self.state()?.persons(query)
    }
}
