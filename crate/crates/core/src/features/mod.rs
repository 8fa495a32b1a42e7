//! Per-movie feature vectors: who (star power, network), what, when and
//! their hybrids, each column tagged for ablations and benchmarks.

pub mod calendar;
mod export;
pub mod history;
mod schema;

use std::collections::{BTreeSet, HashMap};

use chrono::NaiveDate;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::collab::{self, BetweennessMode, SnapshotSet, Team};
use crate::corpus::{Corpus, CorpusView, GenreId, MovieRecord, MpaaRating};
use crate::error::{Error, Result};
use crate::text::{preprocess_synopsis, Adaptation};
use crate::topic::TopicModel;

pub use calendar::{is_holiday_release, Season};
pub use export::{read_feature_csv, FeatureFileSchema};
pub use history::{actor_history, director_history, ActorHistory, DirectorHistory};
pub use schema::{ColumnSpec, FeatureGroup, FeatureSchema, FeatureSet, FEATURE_SCHEMA_VERSION};

/// What "profitability" of a prior-year movie means in the genre trend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profitability {
    #[default]
    Roi,
    Profit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    pub team_size: usize,
    pub holiday_window_days: i64,
    pub competition_window_days: i64,
    pub trend_profitability: Profitability,
    pub betweenness: BetweennessMode,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            team_size: 8,
            holiday_window_days: 7,
            competition_window_days: 30,
            trend_profitability: Profitability::Roi,
            betweenness: BetweennessMode::Exact,
        }
    }
}

/// Everything the engine needs to know about one (real or planned) movie.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureInput {
    /// Set for corpus movies so they are not their own competitor.
    pub movie_id: Option<String>,
    pub year: i32,
    pub release_date: Option<NaiveDate>,
    pub genres: BTreeSet<GenreId>,
    pub mpaa_rating: MpaaRating,
    /// Person ids in billing order.
    pub cast: Vec<String>,
    pub director_id: Option<String>,
    /// Preprocessed synopsis; `None` when there is no synopsis.
    pub synopsis_tokens: Option<Vec<String>>,
    pub adaptation: BTreeSet<Adaptation>,
    pub budget_usd: Option<u64>,
}

impl FeatureInput {
    pub fn from_movie(m: &MovieRecord) -> Self {
        FeatureInput {
            movie_id: Some(m.movie_id.clone()),
            year: m.year,
            release_date: m.release_date,
            genres: m.genres.clone(),
            mpaa_rating: m.mpaa_rating,
            cast: m.cast.clone(),
            director_id: m.director_id.clone(),
            synopsis_tokens: synopsis_tokens(m.synopsis.as_deref()),
            adaptation: m.adaptation.clone(),
            budget_usd: m.budget_usd,
        }
    }

    fn team(&self, size: usize) -> &[String] {
        &self.cast[..self.cast.len().min(size)]
    }
}

pub fn synopsis_tokens(synopsis: Option<&str>) -> Option<Vec<String>> {
    synopsis.filter(|s| !s.trim().is_empty()).map(preprocess_synopsis)
}

#[derive(Debug, Clone)]
struct PriorMovie {
    genres: Vec<u16>,
    roi: f64,
    profit: f64,
}

#[derive(Debug, Clone, Default)]
struct YearStats {
    /// Movies with known budget and revenue.
    movies: Vec<PriorMovie>,
    avg_profit: Option<f64>,
}

/// Column collector; the same code path yields both the schema and values.
struct Emitter {
    specs: Vec<ColumnSpec>,
    values: Vec<f64>,
}

#[derive(Clone, Copy)]
struct Tag {
    group: FeatureGroup,
    new: bool,
    b1: bool,
    b2: bool,
}

const fn tag(group: FeatureGroup, new: bool) -> Tag {
    Tag {
        group,
        new,
        b1: false,
        b2: false,
    }
}

const fn bench(group: FeatureGroup, b1: bool, b2: bool) -> Tag {
    Tag {
        group,
        new: false,
        b1,
        b2,
    }
}

impl Emitter {
    fn put(&mut self, name: impl Into<String>, t: Tag, v: f64) {
        self.specs.push(ColumnSpec {
            name: name.into(),
            group: t.group,
            is_new: t.new,
            is_benchmark1: t.b1,
            is_benchmark2: t.b2,
        });
        self.values.push(if v.is_finite() { v } else { 0.0 });
    }

    fn flag(&mut self, name: impl Into<String>, t: Tag, on: bool) {
        self.put(name, t, if on { 1.0 } else { 0.0 });
    }
}

fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

fn genre_cosine(a: &BTreeSet<GenreId>, b: &[u16]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let shared = b.iter().filter(|g| a.contains(&GenreId(**g))).count();
    shared as f64 / ((a.len() * b.len()) as f64).sqrt()
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Computes feature rows against a fixed historical corpus.
pub struct FeatureEngine<'a> {
    corpus: &'a Corpus,
    snapshots: &'a SnapshotSet,
    topics: &'a TopicModel,
    config: FeatureConfig,
    years: HashMap<i32, YearStats>,
    schema: FeatureSchema,
}

impl<'a> FeatureEngine<'a> {
    pub fn new(
        corpus: &'a Corpus,
        snapshots: &'a SnapshotSet,
        topics: &'a TopicModel,
        config: FeatureConfig,
    ) -> Result<Self> {
        topics.validate()?;
        if snapshots.team_size != config.team_size {
            return Err(Error::InvalidInput(format!(
                "snapshots use team size {}, features {}",
                snapshots.team_size, config.team_size
            )));
        }
        let mut years: HashMap<i32, YearStats> = HashMap::new();
        for m in corpus.movies() {
            if let (Some(roi), Some(profit)) = (m.roi(), m.profit()) {
                years.entry(m.year).or_default().movies.push(PriorMovie {
                    genres: m.genres.iter().map(|g| g.0).collect(),
                    roi,
                    profit,
                });
            }
        }
        for ys in years.values_mut() {
            let profits: Vec<f64> = ys.movies.iter().map(|m| m.profit).collect();
            ys.avg_profit = Some(mean(&profits));
        }
        let mut engine = FeatureEngine {
            corpus,
            snapshots,
            topics,
            config,
            years,
            schema: FeatureSchema::new(Vec::new())?,
        };
        let blank = FeatureInput {
            movie_id: None,
            year: 2000,
            release_date: None,
            genres: BTreeSet::new(),
            mpaa_rating: MpaaRating::Unknown,
            cast: Vec::new(),
            director_id: None,
            synopsis_tokens: None,
            adaptation: BTreeSet::new(),
            budget_usd: None,
        };
        engine.schema = FeatureSchema::new(engine.emit(&blank).specs)?;
        Ok(engine)
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn corpus(&self) -> &'a Corpus {
        self.corpus
    }

    pub fn topics(&self) -> &'a TopicModel {
        self.topics
    }

    /// Hex SHA-256 over the feature config, topic model and corpus.
    pub fn config_fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&self.config).expect("config serializes"));
        h.update(self.topics.to_json().expect("topic model serializes").as_bytes());
        h.update(self.corpus.fingerprint().as_bytes());
        hex::encode(h.finalize())
    }

    pub fn row(&self, input: &FeatureInput) -> Vec<f64> {
        self.emit(input).values
    }

    pub fn movie_row(&self, m: &MovieRecord) -> Vec<f64> {
        self.row(&FeatureInput::from_movie(m))
    }

    fn emit(&self, input: &FeatureInput) -> Emitter {
        let mut e = Emitter {
            specs: Vec::new(),
            values: Vec::new(),
        };
        let team = self.team_histories(input);
        self.star_power(input, &team, &mut e);
        self.network(input, &mut e);
        self.what(input, &mut e);
        self.when(input, &mut e);
        self.genre_expertise(input, &team, &mut e);
        self.market_trend(input, &mut e);
        self.meta(input, &mut e);
        e
    }

    fn team_histories(&self, input: &FeatureInput) -> Vec<Option<ActorHistory>> {
        input
            .team(self.config.team_size)
            .iter()
            .map(|p| actor_history(self.corpus, p, input.year))
            .collect()
    }

    fn star_power(&self, input: &FeatureInput, team: &[Option<ActorHistory>], e: &mut Emitter) {
        use FeatureGroup::WhoStar;
        let classic = bench(WhoStar, true, true);
        let new = tag(WhoStar, true);
        let n = team.len().max(1) as f64;
        let known: Vec<&ActorHistory> = team.iter().flatten().collect();
        let sum = |f: &dyn Fn(&ActorHistory) -> f64| known.iter().map(|h| f(h)).sum::<f64>();

        let tenure = sum(&|h| h.tenure());
        e.put("tenure_total", classic, tenure);
        e.put("tenure_avg", classic, tenure / n);
        let gross = sum(&|h| h.gross_total);
        e.put("actor_gross_total_sum", classic, gross);
        e.put("actor_gross_total_avg", classic, gross / n);
        e.put("actor_gross_avg_avg", classic, sum(&|h| h.gross_avg()) / n);

        let director = input
            .director_id
            .as_deref()
            .map(|d| director_history(self.corpus, d, input.year));
        let d = director.as_ref();
        e.put("director_gross_total", classic, d.map_or(0.0, |d| d.gross_total));
        e.put("director_gross_avg", classic, d.map_or(0.0, |d| d.gross_avg()));
        e.flag("actor_history_missing", classic, known.is_empty());
        e.flag("actor_gross_missing", classic, known.iter().all(|h| h.gross_count == 0));
        e.flag("director_gross_missing", classic, d.is_none_or(|d| d.gross_count == 0));

        let total = sum(&|h| h.profit_total);
        let avg = sum(&|h| h.profit_avg());
        let top = sum(&|h| h.profit_top);
        e.put("actor_profit_total_sum", new, total);
        e.put("actor_profit_total_avg", new, total / n);
        e.put("actor_profit_avg_sum", new, avg);
        e.put("actor_profit_avg_avg", new, avg / n);
        e.put("actor_profit_top_sum", new, top);
        e.put("actor_profit_top_avg", new, top / n);
        e.put("director_profit_total", new, d.map_or(0.0, |d| d.profit_total));
        e.put("director_profit_avg", new, d.map_or(0.0, |d| d.profit_avg()));
        e.put("director_profit_top", new, d.map_or(0.0, |d| d.profit_top));
        e.flag("actor_profit_missing", new, known.iter().all(|h| h.profit_count == 0));
        e.flag("director_profit_missing", new, d.is_none_or(|d| d.profit_count == 0));
    }

    fn network(&self, input: &FeatureInput, e: &mut Emitter) {
        use FeatureGroup::WhoNet;
        let classic = tag(WhoNet, false);
        let new = tag(WhoNet, true);
        let snap = self.snapshots.as_of(input.year - 1);
        let team = Team {
            movie_id: input.movie_id.clone().unwrap_or_default(),
            members: input.team(self.config.team_size).to_vec(),
            director_id: input.director_id.clone(),
        };
        let het = collab::heterogeneity(snap, &team);
        e.put("heterogeneity", classic, het.as_ref().copied().unwrap_or(0.0));
        e.put("avg_degree", classic, collab::average_degree(snap, &team));
        let b = collab::betweenness_stats(snap, &team);
        e.put("betweenness_total", classic, b.total);
        e.put("betweenness_avg", classic, b.average);
        e.flag("team_too_small", classic, het.is_err());

        let adc = collab::actor_director_collab(self.corpus, input.year - 1, &team);
        e.put("actor_director_collab_freq", new, adc.avg_frequency);
        e.put("actor_director_collab_profit", new, adc.avg_profit);
        e.flag("director_missing", new, adc.cold_start);
        e.put(
            "delta_clustering",
            new,
            collab::delta_clustering(snap, &team).unwrap_or(0.0),
        );
        e.put(
            "delta_avg_shortest_path",
            new,
            collab::delta_avg_shortest_path(snap, &team).unwrap_or(0.0),
        );
    }

    fn what(&self, input: &FeatureInput, e: &mut Emitter) {
        use FeatureGroup::What;
        let meta = bench(What, true, true);
        let classic = tag(What, false);
        let new = tag(What, true);
        for (i, name) in self.corpus.registry().names().iter().enumerate() {
            e.flag(
                format!("genre_{}", slug(name)),
                meta,
                input.genres.contains(&GenreId(i as u16)),
            );
        }
        for r in MpaaRating::ALL {
            e.flag(format!("rating_{}", slug(r.as_str())), meta, input.mpaa_rating == r);
        }
        let theta = match &input.synopsis_tokens {
            Some(tokens) => self.topics.infer_document(tokens),
            None => vec![1.0 / self.topics.num_topics as f64; self.topics.num_topics],
        };
        for (k, t) in theta.iter().enumerate() {
            e.put(format!("topic_{k:02}"), new, *t);
        }
        e.flag("synopsis_missing", new, input.synopsis_tokens.is_none());
        for a in Adaptation::ALL {
            e.flag(
                format!("adaptation_{}", a.as_str()),
                classic,
                input.adaptation.contains(&a),
            );
        }
    }

    fn when(&self, input: &FeatureInput, e: &mut Emitter) {
        use FeatureGroup::When;
        let classic = tag(When, false);
        let new = tag(When, true);
        let prior = self.years.get(&(input.year - 1)).and_then(|y| y.avg_profit);
        e.put("avg_annual_profit", new, prior.unwrap_or(0.0));
        e.flag("annual_profit_missing", new, prior.is_none());
        let date = input.release_date;
        e.flag(
            "holiday",
            classic,
            date.is_some_and(|d| is_holiday_release(d, self.config.holiday_window_days)),
        );
        for s in Season::ALL {
            e.flag(
                format!("season_{}", s.as_str()),
                classic,
                date.is_some_and(|d| Season::of(d) == s),
            );
        }
        e.flag("release_date_missing", classic, date.is_none());
    }

    fn genre_expertise(&self, input: &FeatureInput, team: &[Option<ActorHistory>], e: &mut Emitter) {
        let new = tag(FeatureGroup::HybridWhatWho, true);
        let n = team.len();
        let (mut age, mut wage, mut cn) = (0.0, 0.0, 0.0f64);
        for h in team {
            let (ga, r) = match h {
                Some(h) => {
                    let a = h.genre_experience();
                    let ga: f64 = input.genres.iter().map(|g| a[g.0 as usize]).sum();
                    (ga, h.gross_total)
                }
                None => (0.0, 0.0),
            };
            let star = (r + 1.0).log10();
            age += ga;
            wage += star * ga;
            cn = cn.max(star / (ga + 1.0));
        }
        if n > 0 {
            age /= n as f64;
            wage /= n as f64;
        }
        e.put("age", new, age);
        e.put("wage", new, wage);
        e.put("cn", new, cn);
    }

    fn market_trend(&self, input: &FeatureInput, e: &mut Emitter) {
        let new = tag(FeatureGroup::HybridWhatWhen, true);
        let prior: &[PriorMovie] = self
            .years
            .get(&(input.year - 1))
            .map(|y| y.movies.as_slice())
            .unwrap_or(&[]);
        let same_genre: Vec<&PriorMovie> = prior
            .iter()
            .filter(|m| m.genres.iter().any(|g| input.genres.contains(&GenreId(*g))))
            .collect();
        let pct = if same_genre.is_empty() {
            0.0
        } else {
            same_genre.iter().filter(|m| m.roi > 0.0).count() as f64 / same_genre.len() as f64
        };
        let awpg: f64 = prior
            .iter()
            .map(|m| {
                let p = match self.config.trend_profitability {
                    Profitability::Roi => m.roi,
                    Profitability::Profit => m.profit,
                };
                genre_cosine(&input.genres, &m.genres) * p
            })
            .sum();
        e.put("annual_profit_pct_by_genre", new, pct);
        e.put("awpg", new, awpg);
        e.put("competition", new, self.competition(input));
        e.flag("genre_trend_missing", new, same_genre.is_empty());
    }

    /// Mean star power (total earlier actor gross of the first-billed cast,
    /// as of the focal year) of other movies released within the window.
    fn competition(&self, input: &FeatureInput) -> f64 {
        let Some(date) = input.release_date else {
            return 0.0;
        };
        let window = self.config.competition_window_days;
        let mut powers = Vec::new();
        for year in input.year - 1..=input.year + 1 {
            for &i in self.corpus.movies_in_year(year) {
                let m = &self.corpus.movies()[i];
                if input.movie_id.as_deref() == Some(m.movie_id.as_str()) {
                    continue;
                }
                let Some(d) = m.release_date else { continue };
                if (d - date).num_days().abs() <= window {
                    powers.push(
                        m.team(self.config.team_size)
                            .iter()
                            .map(|p| history::actor_gross_before(self.corpus, p, input.year))
                            .sum(),
                    );
                }
            }
        }
        mean(&powers)
    }

    fn meta(&self, input: &FeatureInput, e: &mut Emitter) {
        use FeatureGroup::Meta;
        e.put("release_year", bench(Meta, true, false), input.year as f64);
        e.put(
            "budget",
            bench(Meta, false, true),
            input.budget_usd.map_or(0.0, |b| b as f64),
        );
        e.flag("budget_missing", bench(Meta, false, true), input.budget_usd.is_none());
    }

    /// One row per movie of the view, in view order.
    pub fn assemble(&self, view: &CorpusView<'_>) -> Result<FeatureMatrix> {
        if !std::ptr::eq(view.corpus(), self.corpus) {
            return Err(Error::InvalidInput("view belongs to a different corpus".into()));
        }
        let mut data = Array2::zeros((view.len(), self.schema.len()));
        let mut movie_ids = Vec::with_capacity(view.len());
        for (r, m) in view.movies().enumerate() {
            let row = self.movie_row(m);
            data.row_mut(r).assign(&ndarray::ArrayView1::from(&row));
            movie_ids.push(m.movie_id.clone());
        }
        Ok(FeatureMatrix {
            schema: self.schema.clone(),
            movie_ids,
            data,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub schema: FeatureSchema,
    pub movie_ids: Vec<String>,
    /// rows x schema columns
    pub data: Array2<f64>,
}

impl FeatureMatrix {
    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    /// Restriction to a feature set's columns.
    pub fn select(&self, set: FeatureSet) -> FeatureMatrix {
        let cols = self.schema.select(set);
        FeatureMatrix {
            schema: self.schema.subset(set),
            movie_ids: self.movie_ids.clone(),
            data: self.data.select(ndarray::Axis(1), &cols),
        }
    }

    pub fn column(&self, name: &str) -> Option<ndarray::ArrayView1<'_, f64>> {
        self.schema.index_of(name).map(|i| self.data.column(i))
    }
}
