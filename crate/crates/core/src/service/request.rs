use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::ApiError;
use crate::corpus::{Corpus, MpaaRating};
use crate::features::{synopsis_tokens, FeatureInput};
use crate::text::Adaptation;

pub const MAX_EDITS: usize = 20;

/// A planned (or replayed) movie as posted by a client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRequest {
    /// A corpus movie this scenario replays; it is then not its own competitor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub movie_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    /// Person ids or display names, in billing order.
    pub cast: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub director_id: Option<String>,
    pub genres: Vec<String>,
    pub rating: String,
    /// `YYYY-MM-DD`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planned_release_date: Option<String>,
    /// Required when no release date is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_usd: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synopsis: Option<String>,
    #[serde(default)]
    pub adaptation: Vec<String>,
}

pub const SCENARIO_FIELDS: [&str; 11] = [
    "movie_id",
    "title",
    "cast",
    "director_id",
    "genres",
    "rating",
    "planned_release_date",
    "year",
    "budget_usd",
    "synopsis",
    "adaptation",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    pub base: ScenarioRequest,
    /// Field patches applied to `base`, one scenario per patch.
    #[serde(default)]
    pub edits: Vec<Map<String, Value>>,
}

/// Which inputs the model has no history for.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ColdStart {
    /// Cast entries matching no corpus person.
    pub unknown_cast: Vec<String>,
    /// Known persons without earlier cast credits.
    pub newcomer_cast: Vec<String>,
    pub unknown_director: bool,
    /// The planned year lies beyond corpus coverage; year features use the
    /// latest covered year as the prior year.
    pub year_extrapolated: bool,
    pub feature_year: i32,
}

pub(crate) struct Resolved {
    pub input: FeatureInput,
    pub cold_start: ColdStart,
}

fn resolve_person(corpus: &Corpus, raw: &str) -> Option<String> {
    if corpus.person(raw).is_some() {
        return Some(raw.to_string());
    }
    corpus.find_person_by_name(raw).map(|p| p.person_id.clone())
}

impl ScenarioRequest {
    pub(crate) fn resolve(&self, corpus: &Corpus) -> Result<Resolved, ApiError> {
        if self.cast.is_empty() {
            return Err(ApiError::bad_request("cast must not be empty").field("cast"));
        }
        if self.genres.is_empty() {
            return Err(ApiError::bad_request("genres must not be empty").field("genres"));
        }
        let date = match &self.planned_release_date {
            Some(s) => Some(NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|_| {
                ApiError::bad_request(format!("'{s}' is not a YYYY-MM-DD date")).field("planned_release_date")
            })?),
            None => None,
        };
        let year = match (date, self.year) {
            (Some(d), Some(y)) if chrono::Datelike::year(&d) != y => {
                return Err(ApiError::bad_request("year disagrees with planned_release_date").field("year"));
            }
            (Some(d), _) => chrono::Datelike::year(&d),
            (None, Some(y)) => y,
            (None, None) => {
                return Err(
                    ApiError::bad_request("planned_release_date or year is required").field("planned_release_date")
                );
            }
        };
        if !(1900..=2100).contains(&year) {
            return Err(ApiError::bad_request(format!("year {year} outside [1900, 2100]")).field("year"));
        }

        let registry = corpus.registry();
        let mut genres = BTreeSet::new();
        for (i, g) in self.genres.iter().enumerate() {
            let id = registry.id(g.trim()).ok_or_else(|| {
                ApiError::not_found("unknown_genre", format!("unknown genre '{g}'")).field(format!("genres[{i}]"))
            })?;
            genres.insert(id);
        }
        let rating = MpaaRating::parse(&self.rating).ok_or_else(|| {
            ApiError::not_found("unknown_rating", format!("unknown rating '{}'", self.rating)).field("rating")
        })?;
        let mut adaptation = BTreeSet::new();
        for (i, a) in self.adaptation.iter().enumerate() {
            let kind = Adaptation::parse(a).ok_or_else(|| {
                ApiError::bad_request(format!("unknown adaptation '{a}'")).field(format!("adaptation[{i}]"))
            })?;
            adaptation.insert(kind);
        }
        if self.budget_usd == Some(0) {
            return Err(ApiError::bad_request("budget must be positive").field("budget_usd"));
        }

        let feature_year = match corpus.year_range() {
            Some((_, hi)) if year > hi + 1 => hi + 1,
            _ => year,
        };
        let mut cold = ColdStart {
            year_extrapolated: feature_year != year,
            feature_year,
            ..ColdStart::default()
        };
        let mut cast = Vec::with_capacity(self.cast.len());
        for (i, raw) in self.cast.iter().enumerate() {
            let raw = raw.trim();
            if raw.is_empty() {
                return Err(ApiError::bad_request("empty cast entry").field(format!("cast[{i}]")));
            }
            let id = match resolve_person(corpus, raw) {
                Some(id) => {
                    let known = corpus
                        .person(&id)
                        .is_some_and(|p| p.cast_before(feature_year).next().is_some());
                    if !known {
                        cold.newcomer_cast.push(id.clone());
                    }
                    id
                }
                None => {
                    cold.unknown_cast.push(raw.to_string());
                    raw.to_string()
                }
            };
            if cast.contains(&id) {
                return Err(
                    ApiError::bad_request(format!("'{raw}' appears twice in the cast")).field(format!("cast[{i}]"))
                );
            }
            cast.push(id);
        }
        let director_id = match self.director_id.as_deref().map(str::trim).filter(|d| !d.is_empty()) {
            Some(d) => Some(resolve_person(corpus, d).unwrap_or_else(|| {
                cold.unknown_director = true;
                d.to_string()
            })),
            None => None,
        };

        Ok(Resolved {
            input: FeatureInput {
                movie_id: self.movie_id.clone(),
                year: feature_year,
                release_date: date,
                genres,
                mpaa_rating: rating,
                cast,
                director_id,
                synopsis_tokens: synopsis_tokens(self.synopsis.as_deref()),
                adaptation,
                budget_usd: self.budget_usd,
            },
            cold_start: cold,
        })
    }

    /// `self` with `patch` merged over it; errors name the patch index.
    pub fn patched(&self, patch: &Map<String, Value>, index: usize) -> Result<ScenarioRequest, ApiError> {
        let mut obj = match serde_json::to_value(self) {
            Ok(Value::Object(o)) => o,
            _ => unreachable!("scenario serializes to an object"),
        };
        for (k, v) in patch {
            if !SCENARIO_FIELDS.contains(&k.as_str()) {
                return Err(
                    ApiError::bad_request(format!("edit {index} patches unknown field '{k}'"))
                        .field(format!("edits[{index}].{k}")),
                );
            }
            if v.is_null() {
                obj.remove(k);
            } else {
                obj.insert(k.clone(), v.clone());
            }
        }
        serde_json::from_value(Value::Object(obj))
            .map_err(|e| ApiError::bad_request(format!("edit {index}: {e}")).field(format!("edits[{index}]")))
    }

    /// The request that replays a corpus movie exactly.
    pub fn from_movie(corpus: &Corpus, m: &crate::corpus::MovieRecord) -> Self {
        ScenarioRequest {
            movie_id: Some(m.movie_id.clone()),
            title: Some(m.title.clone()),
            cast: m.cast.clone(),
            director_id: m.director_id.clone(),
            genres: m
                .genres
                .iter()
                .map(|g| corpus.registry().name(*g).to_string())
                .collect(),
            rating: m.mpaa_rating.as_str().to_string(),
            planned_release_date: m.release_date.map(|d| d.format("%Y-%m-%d").to_string()),
            year: Some(m.year),
            budget_usd: m.budget_usd,
            synopsis: m.synopsis.clone(),
            adaptation: m.adaptation.iter().map(|a| a.as_str().to_string()).collect(),
        }
    }
}
