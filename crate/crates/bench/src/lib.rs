//! Shared fixtures for the benchmarks.

use mias_core::collab::{BetweennessMode, SnapshotSet};
use mias_core::corpus::{apply_filter, Corpus, ExperimentFilter};
use mias_core::features::{synopsis_tokens, FeatureConfig, FeatureEngine, FeatureMatrix};
use mias_core::synthetic::{generate, SyntheticConfig};
use mias_core::topic::{fit, LdaConfig, TopicModel};

pub struct Fixture {
    pub corpus: Corpus,
    pub docs: Vec<Vec<String>>,
    pub topics: TopicModel,
    pub snapshots: SnapshotSet,
}

pub fn lda_config(iterations: usize) -> LdaConfig {
    LdaConfig {
        num_topics: 10,
        iterations,
        seed: 1,
        ..LdaConfig::default()
    }
}

/// A synthetic corpus with `movies` titles and everything built from it.
pub fn fixture(movies: usize) -> Fixture {
    let cfg = SyntheticConfig {
        movies,
        actors: (movies * 3 / 4).max(50),
        directors: (movies / 8).max(10),
        ..SyntheticConfig::default()
    };
    let corpus = generate(&cfg).expect("synthetic corpus").corpus;
    let docs: Vec<Vec<String>> = corpus
        .movies()
        .iter()
        .filter_map(|m| synopsis_tokens(m.synopsis.as_deref()))
        .collect();
    let topics = fit(&docs, &lda_config(50)).expect("topic model").model;
    let snapshots =
        SnapshotSet::build(&corpus, FeatureConfig::default().team_size, BetweennessMode::Exact).expect("snapshots");
    Fixture {
        corpus,
        docs,
        topics,
        snapshots,
    }
}

impl Fixture {
    pub fn features(&self) -> FeatureMatrix {
        let engine =
            FeatureEngine::new(&self.corpus, &self.snapshots, &self.topics, FeatureConfig::default()).expect("engine");
        let view = apply_filter(&self.corpus, &ExperimentFilter::none());
        engine.assemble(&view).expect("features")
    }
}
