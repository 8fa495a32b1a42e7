use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::record::{MovieRecord, MpaaRating};
use super::Corpus;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFilter {
    pub year_range: Option<(i32, i32)>,
    #[serde(default)]
    pub require_budget: bool,
    #[serde(default)]
    pub require_revenue: bool,
    #[serde(default)]
    pub exclude_ratings: BTreeSet<MpaaRating>,
    /// Genre names, matched case-insensitively. A movie with no genres
    /// counts as having the genre `Unknown`.
    #[serde(default)]
    pub exclude_genres: BTreeSet<String>,
    #[serde(default)]
    pub exclude_franchise: bool,
}

impl Default for ExperimentFilter {
    fn default() -> Self {
        Self::none()
    }
}

impl ExperimentFilter {
    /// Passes everything.
    pub fn none() -> Self {
        ExperimentFilter {
            year_range: None,
            require_budget: false,
            require_revenue: false,
            exclude_ratings: BTreeSet::new(),
            exclude_genres: BTreeSet::new(),
            exclude_franchise: false,
        }
    }

    /// 2000-2010, budget and revenue known, no Unknown rating or genre, no
    /// documentaries, no sequels/remakes/franchise entries.
    pub fn baseline_preset() -> Self {
        ExperimentFilter {
            year_range: Some((2000, 2010)),
            require_budget: true,
            require_revenue: true,
            exclude_ratings: BTreeSet::from([MpaaRating::Unknown]),
            exclude_genres: BTreeSet::from(["Unknown".to_string(), "Documentary".to_string()]),
            exclude_franchise: true,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "baseline" | "baseline_2000_2010" => Some(Self::baseline_preset()),
            "none" | "all" => Some(Self::none()),
            _ => None,
        }
    }

    pub fn accepts(&self, corpus: &Corpus, m: &MovieRecord) -> bool {
        if let Some((lo, hi)) = self.year_range {
            if m.year < lo || m.year > hi {
                return false;
            }
        }
        if self.require_budget && m.budget_usd.is_none() {
            return false;
        }
        if self.require_revenue && m.revenue_usd.is_none() {
            return false;
        }
        if self.exclude_ratings.contains(&m.mpaa_rating) {
            return false;
        }
        if self.exclude_franchise && !m.franchise_flags.is_empty() {
            return false;
        }
        if !self.exclude_genres.is_empty() {
            let reg = corpus.registry();
            if m.genres.is_empty() && self.exclude_genres.iter().any(|g| g.eq_ignore_ascii_case("unknown")) {
                return false;
            }
            let excluded = m.genres.iter().any(|g| {
                let name = reg.name(*g);
                self.exclude_genres.iter().any(|x| x.eq_ignore_ascii_case(name))
            });
            if excluded {
                return false;
            }
        }
        true
    }
}

/// A filtered, order-preserving selection of corpus movies.
#[derive(Debug, Clone)]
pub struct CorpusView<'a> {
    corpus: &'a Corpus,
    indices: Vec<usize>,
}

impl<'a> CorpusView<'a> {
    pub fn all(corpus: &'a Corpus) -> Self {
        CorpusView {
            corpus,
            indices: (0..corpus.len()).collect(),
        }
    }

    pub fn corpus(&self) -> &'a Corpus {
        self.corpus
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn movies(&self) -> impl Iterator<Item = &'a MovieRecord> + '_ {
        let corpus = self.corpus;
        self.indices.iter().map(move |&i| &corpus.movies()[i])
    }

    pub fn filter(&self, f: &ExperimentFilter) -> CorpusView<'a> {
        CorpusView {
            corpus: self.corpus,
            indices: self
                .indices
                .iter()
                .copied()
                .filter(|&i| f.accepts(self.corpus, &self.corpus.movies()[i]))
                .collect(),
        }
    }
}

impl PartialEq for CorpusView<'_> {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.corpus, other.corpus) && self.indices == other.indices
    }
}

pub fn apply_filter<'a>(corpus: &'a Corpus, f: &ExperimentFilter) -> CorpusView<'a> {
    CorpusView::all(corpus).filter(f)
}
