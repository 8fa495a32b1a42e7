//! TOML run configuration with one section per command.

use std::path::{Path, PathBuf};

use mias_core::corpus::ExperimentFilter;
use mias_core::evaluation::GridConfig;
use mias_core::features::{FeatureConfig, FeatureSet};
use mias_core::labeling::{CostMatrix, LabelKind, Roi67Rule};
use mias_core::learners::{ClassifierConfig, RegressorConfig};
use mias_core::synthetic::SyntheticConfig;
use mias_core::topic::LdaConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, ExitCode};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Output directory shared by every command.
    pub out: Option<PathBuf>,
    /// When set, overrides the seed of every seeded section.
    pub seed: Option<u64>,
    pub ingest: IngestConfig,
    pub features: FeaturesConfig,
    pub evaluate: GridConfig,
    pub train: TrainConfig,
    pub serve: ServeConfig,
    pub synthetic: SyntheticConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    /// Raw JSONL corpus.
    pub input: Option<PathBuf>,
    /// Genre registry, one name per line; the shipped list when absent.
    pub genres: Option<PathBuf>,
    /// Fail when any line is rejected.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FilterChoice {
    Preset(String),
    Custom(ExperimentFilter),
}

impl Default for FilterChoice {
    fn default() -> Self {
        FilterChoice::Preset("baseline".into())
    }
}

impl FilterChoice {
    pub fn resolve(&self) -> Result<ExperimentFilter, String> {
        match self {
            FilterChoice::Preset(name) if name == "none" => Ok(ExperimentFilter::none()),
            FilterChoice::Preset(name) => {
                ExperimentFilter::preset(name).ok_or_else(|| format!("unknown filter preset '{name}'"))
            }
            FilterChoice::Custom(f) => Ok(f.clone()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesConfig {
    pub filter: FilterChoice,
    pub engine: FeatureConfig,
    pub lda: LdaConfig,
    /// Reuse a fitted topic model instead of fitting one.
    pub topic_model: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub label: LabelKind,
    pub roi67_rule: Roi67Rule,
    pub feature_set: FeatureSet,
    pub classifier: ClassifierConfig,
    pub cost_matrix: CostMatrix,
    /// `None` disables the regression model.
    pub regressor: Option<RegressorConfig>,
    pub regressor_feature_set: FeatureSet,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            label: LabelKind::MultiTertile,
            roi67_rule: Roi67Rule::Fixed,
            feature_set: FeatureSet::Full,
            classifier: ClassifierConfig::default(),
            cost_matrix: CostMatrix::default(),
            regressor: Some(RegressorConfig::default()),
            regressor_feature_set: FeatureSet::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub bind: String,
    /// Allowed browser origin; `*` allows any.
    pub cors_origin: String,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            bind: "127.0.0.1:8080".into(),
            cors_origin: "*".into(),
        }
    }
}

impl Config {
    pub fn load(path: &Path, code: ExitCode) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::new(code, format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, code)
    }

    pub fn parse(text: &str, code: ExitCode) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::new(code, format!("invalid config: {e}")))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Applies one seed to every seeded section.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.features.lda.seed = seed;
        self.evaluate.seed = seed;
        self.train.classifier.seed = seed;
        self.synthetic.seed = seed;
    }

    /// Propagates the top-level seed when it was set in the file.
    pub fn resolve_seed(&mut self) {
        if let Some(s) = self.seed {
            self.apply_seed(s);
        }
    }
}
