use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const FEATURE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureGroup {
    WhoStar,
    WhoNet,
    What,
    When,
    HybridWhatWho,
    HybridWhatWhen,
    /// Release year and budget; used only by the benchmark feature sets.
    Meta,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 7] = [
        FeatureGroup::WhoStar,
        FeatureGroup::WhoNet,
        FeatureGroup::What,
        FeatureGroup::When,
        FeatureGroup::HybridWhatWho,
        FeatureGroup::HybridWhatWhen,
        FeatureGroup::Meta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureGroup::WhoStar => "WhoStar",
            FeatureGroup::WhoNet => "WhoNet",
            FeatureGroup::What => "What",
            FeatureGroup::When => "When",
            FeatureGroup::HybridWhatWho => "HybridWhatWho",
            FeatureGroup::HybridWhatWhen => "HybridWhatWhen",
            FeatureGroup::Meta => "Meta",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub group: FeatureGroup,
    pub is_new: bool,
    pub is_benchmark1: bool,
    pub is_benchmark2: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub schema_version: u32,
    pub columns: Vec<ColumnSpec>,
}

impl FeatureSchema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        if let Some(dup) = columns.iter().find(|c| !seen.insert(c.name.as_str())) {
            return Err(Error::InvalidInput(format!("duplicate feature column '{}'", dup.name)));
        }
        Ok(FeatureSchema {
            schema_version: FEATURE_SCHEMA_VERSION,
            columns,
        })
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("schema serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Column indices selected by a feature set, in schema order.
    pub fn select(&self, set: FeatureSet) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| set.includes(c))
            .map(|(i, _)| i)
            .collect()
    }

    /// The sub-schema for a feature set.
    pub fn subset(&self, set: FeatureSet) -> FeatureSchema {
        FeatureSchema {
            schema_version: self.schema_version,
            columns: self.select(set).into_iter().map(|i| self.columns[i].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    /// Every Who/What/When/Hybrid column.
    Full,
    WithoutNew,
    Benchmark1,
    Benchmark2,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 4] = [
        FeatureSet::Full,
        FeatureSet::WithoutNew,
        FeatureSet::Benchmark1,
        FeatureSet::Benchmark2,
    ];

    pub fn includes(self, c: &ColumnSpec) -> bool {
        match self {
            FeatureSet::Full => c.group != FeatureGroup::Meta,
            FeatureSet::WithoutNew => c.group != FeatureGroup::Meta && !c.is_new,
            FeatureSet::Benchmark1 => c.is_benchmark1,
            FeatureSet::Benchmark2 => c.is_benchmark2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::Full => "full",
            FeatureSet::WithoutNew => "without_new",
            FeatureSet::Benchmark1 => "benchmark1",
            FeatureSet::Benchmark2 => "benchmark2",
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FeatureSet::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown feature set '{s}'")))
    }
}
