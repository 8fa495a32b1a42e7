//! Versioned binary container for a trained model.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    argmax, cost_sensitive_predict, train_cost_aware, train_regressor, Classifier, ClassifierConfig, LinearFit,
    RegressorConfig,
};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureSchema, FeatureSet};
use crate::labeling::{
    label, log_roi1, resolve_boundaries_with, roi_from_log, CostMatrix, LabelKind, LabelSpec, Roi67Rule,
};

pub const ARTIFACT_MAGIC: &[u8; 4] = b"MIAS";
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelBody {
    Classifier {
        model: Classifier,
        config: ClassifierConfig,
        label: LabelSpec,
        /// Present for multi-class models that report a cost-aware class.
        cost_matrix: Option<CostMatrix>,
    },
    /// Predicts `log_roi1`.
    Regressor { model: LinearFit, config: RegressorConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub body: ModelBody,
    pub feature_set: FeatureSet,
    /// Columns the model consumes, in order.
    pub schema: FeatureSchema,
    pub schema_fingerprint: String,
    pub corpus_fingerprint: String,
}

impl TrainedModel {
    pub fn new(body: ModelBody, feature_set: FeatureSet, schema: FeatureSchema, corpus_fingerprint: String) -> Self {
        TrainedModel {
            body,
            feature_set,
            schema_fingerprint: schema.fingerprint(),
            schema,
            corpus_fingerprint,
        }
    }

    pub fn kind(&self) -> &'static str {
        match &self.body {
            ModelBody::Classifier { model, .. } => model.kind().as_str(),
            ModelBody::Regressor { config, .. } => config.kind.as_str(),
        }
    }

    /// Errors unless `schema` is the one the model was trained on.
    pub fn check_schema(&self, schema: &FeatureSchema) -> Result<()> {
        let actual = schema.fingerprint();
        if actual != self.schema_fingerprint {
            return Err(Error::SchemaMismatch {
                expected: self.schema_fingerprint.clone(),
                actual,
            });
        }
        Ok(())
    }

    fn check_row(&self, schema: &FeatureSchema, x: &[f64]) -> Result<()> {
        self.check_schema(schema)?;
        if x.len() != self.schema.len() {
            return Err(Error::DimensionMismatch {
                expected: self.schema.len(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub fn predict_proba(&self, schema: &FeatureSchema, x: &[f64]) -> Result<Vec<f64>> {
        self.check_row(schema, x)?;
        match &self.body {
            ModelBody::Classifier { model, .. } => Ok(model.predict_proba(x)),
            ModelBody::Regressor { .. } => Err(Error::InvalidInput(
                "regression model has no class probabilities".into(),
            )),
        }
    }

    /// Most probable class, plus the minimum-expected-cost class when the
    /// model carries a cost matrix.
    pub fn predict_class(&self, schema: &FeatureSchema, x: &[f64]) -> Result<(usize, Option<usize>)> {
        let p = self.predict_proba(schema, x)?;
        let cost = match &self.body {
            ModelBody::Classifier {
                cost_matrix: Some(cm), ..
            } => Some(cost_sensitive_predict(&p, cm)?),
            _ => None,
        };
        Ok((argmax(&p), cost))
    }

    /// Predicted `log_roi1` and the ROI it maps back to.
    pub fn predict_value(&self, schema: &FeatureSchema, x: &[f64]) -> Result<(f64, f64)> {
        self.check_row(schema, x)?;
        match &self.body {
            ModelBody::Regressor { model, .. } => {
                let v = model.predict(x);
                Ok((v, roi_from_log(v)))
            }
            ModelBody::Classifier { .. } => Err(Error::InvalidInput("classifier has no numeric prediction".into())),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = ARTIFACT_MAGIC.to_vec();
        out.extend_from_slice(&ARTIFACT_VERSION.to_le_bytes());
        let body = bincode::serialize(self).map_err(|e| Error::Artifact(e.to_string()))?;
        out.extend(body);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..4] != ARTIFACT_MAGIC {
            return Err(Error::Artifact("not a model artifact".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != ARTIFACT_VERSION {
            return Err(Error::Artifact(format!(
                "artifact version {version}, this build reads {ARTIFACT_VERSION}"
            )));
        }
        let model: TrainedModel = bincode::deserialize(&bytes[8..]).map_err(|e| Error::Artifact(e.to_string()))?;
        if model.schema.fingerprint() != model.schema_fingerprint {
            return Err(Error::Artifact("stored schema does not match its fingerprint".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn check_rows(data: &FeatureMatrix, rois: &[f64]) -> Result<()> {
    if data.nrows() != rois.len() {
        return Err(Error::DimensionMismatch {
            expected: data.nrows(),
            actual: rois.len(),
        });
    }
    Ok(())
}

/// Fits a classifier on every row, with labels resolved on all of `rois`.
#[allow(clippy::too_many_arguments)]
pub fn train_classifier_artifact(
    data: &FeatureMatrix,
    rois: &[f64],
    kind: LabelKind,
    rule: Roi67Rule,
    set: FeatureSet,
    cfg: &ClassifierConfig,
    cost_matrix: &CostMatrix,
    corpus_fingerprint: &str,
) -> Result<TrainedModel> {
    check_rows(data, rois)?;
    let spec = resolve_boundaries_with(rois, kind, rule)?;
    let y = label(rois, &spec);
    let sub = data.select(set);
    let model = train_cost_aware(sub.data.view(), &y, spec.num_classes(), cfg, cost_matrix)?;
    let body = ModelBody::Classifier {
        model,
        config: cfg.clone(),
        cost_matrix: kind.is_multiclass().then_some(*cost_matrix),
        label: spec,
    };
    Ok(TrainedModel::new(body, set, sub.schema, corpus_fingerprint.to_string()))
}

/// Fits a `log_roi1` regressor on every row.
pub fn train_regressor_artifact(
    data: &FeatureMatrix,
    rois: &[f64],
    set: FeatureSet,
    cfg: &RegressorConfig,
    corpus_fingerprint: &str,
) -> Result<TrainedModel> {
    check_rows(data, rois)?;
    let y: Vec<f64> = rois.iter().map(|&r| log_roi1(r)).collect();
    let sub = data.select(set);
    let model = train_regressor(sub.data.view(), &y, cfg)?;
    let body = ModelBody::Regressor {
        model,
        config: cfg.clone(),
    };
    Ok(TrainedModel::new(body, set, sub.schema, corpus_fingerprint.to_string()))
}
