#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use chrono::NaiveDate;
use mias_core::collab::{BetweennessMode, SnapshotSet};
use mias_core::corpus::{Corpus, GenreRegistry, MovieRecord, MpaaRating};
use mias_core::features::{synopsis_tokens, FeatureConfig, FeatureEngine};
use mias_core::topic::{fit, LdaConfig, TopicModel};

pub struct Spec<'a> {
    pub id: &'a str,
    pub year: i32,
    pub date: Option<(u32, u32)>,
    pub genres: &'a [&'a str],
    pub budget: Option<u64>,
    pub revenue: Option<u64>,
    pub cast: &'a [&'a str],
    pub director: Option<&'a str>,
    pub synopsis: Option<&'a str>,
}

pub fn movie(s: &Spec) -> MovieRecord {
    let reg = GenreRegistry::default_registry();
    MovieRecord {
        movie_id: s.id.into(),
        title: s.id.into(),
        year: s.year,
        release_date: s.date.map(|(m, d)| NaiveDate::from_ymd_opt(s.year, m, d).unwrap()),
        genres: s.genres.iter().map(|g| reg.id(g).unwrap()).collect(),
        mpaa_rating: MpaaRating::PG13,
        budget_usd: s.budget,
        revenue_usd: s.revenue,
        cast: s.cast.iter().map(|c| c.to_string()).collect(),
        director_id: s.director.map(str::to_string),
        synopsis: s.synopsis.map(str::to_string),
        adaptation: BTreeSet::new(),
        franchise_flags: BTreeSet::new(),
    }
}

pub fn corpus(movies: Vec<MovieRecord>) -> Corpus {
    Corpus::from_parts(GenreRegistry::default_registry(), movies, HashMap::new()).unwrap()
}

/// A small topic model fitted on the corpus synopses (plus filler text so
/// the vocabulary is never too small).
pub fn topics(c: &Corpus) -> TopicModel {
    let mut docs: Vec<Vec<String>> = c
        .movies()
        .iter()
        .filter_map(|m| synopsis_tokens(m.synopsis.as_deref()))
        .collect();
    docs.push(synopsis_tokens(Some("war battle army soldier war battle army soldier")).unwrap());
    docs.push(synopsis_tokens(Some("love romance kiss wedding love romance kiss wedding")).unwrap());
    let cfg = LdaConfig {
        num_topics: 3,
        iterations: 30,
        seed: 1,
        infer_iterations: 20,
        ..LdaConfig::default()
    };
    fit(&docs, &cfg).unwrap().model
}

pub struct Fixture {
    pub corpus: Corpus,
    pub snapshots: SnapshotSet,
    pub topics: TopicModel,
}

impl Fixture {
    pub fn new(movies: Vec<MovieRecord>) -> Self {
        let corpus = corpus(movies);
        let snapshots = SnapshotSet::build(&corpus, 8, BetweennessMode::Exact).unwrap();
        let topics = topics(&corpus);
        Fixture {
            corpus,
            snapshots,
            topics,
        }
    }

    pub fn with_topics(movies: Vec<MovieRecord>, topics: TopicModel) -> Self {
        let corpus = corpus(movies);
        let snapshots = SnapshotSet::build(&corpus, 8, BetweennessMode::Exact).unwrap();
        Fixture {
            corpus,
            snapshots,
            topics,
        }
    }

    pub fn engine(&self) -> FeatureEngine<'_> {
        FeatureEngine::new(&self.corpus, &self.snapshots, &self.topics, FeatureConfig::default()).unwrap()
    }
}

/// Twenty movies over 2003-2006 with overlapping casts, shared directors and
/// multi-genre entries; a few lack revenue or a release date.
#[rustfmt::skip]
pub fn twenty_movies() -> Vec<MovieRecord> {
    let m = 1_000_000u64;
    let specs = [
        Spec { id: "m01", year: 2003, date: Some((1, 10)), genres: &["Comedy"], budget: Some(10 * m), revenue: Some(25 * m), cast: &["ana", "ben", "cat"], director: Some("dx"), synopsis: Some("a wedding goes wrong") },
        Spec { id: "m02", year: 2003, date: Some((3, 5)), genres: &["Action", "Adventure"], budget: Some(50 * m), revenue: Some(40 * m), cast: &["dan", "eve"], director: Some("dy"), synopsis: Some("soldiers fight a war") },
        Spec { id: "m03", year: 2003, date: Some((7, 2)), genres: &["Drama"], budget: Some(5 * m), revenue: Some(30 * m), cast: &["fay", "ana"], director: Some("dz"), synopsis: None },
        Spec { id: "m04", year: 2003, date: None, genres: &["Horror"], budget: Some(2 * m), revenue: None, cast: &["gus", "hal"], director: None, synopsis: Some("a haunted house") },
        Spec { id: "m05", year: 2004, date: Some((2, 14)), genres: &["Comedy", "Romance"], budget: Some(20 * m), revenue: Some(60 * m), cast: &["ana", "dan", "ivy"], director: Some("dx"), synopsis: Some("love and a kiss") },
        Spec { id: "m06", year: 2004, date: Some((5, 28)), genres: &["Action"], budget: Some(80 * m), revenue: Some(70 * m), cast: &["eve", "ben", "gus"], director: Some("dy"), synopsis: Some("army battle") },
        Spec { id: "m07", year: 2004, date: Some((6, 20)), genres: &["Drama", "Romance"], budget: Some(8 * m), revenue: Some(4 * m), cast: &["cat", "fay"], director: Some("dz"), synopsis: Some("a quiet romance") },
        Spec { id: "m08", year: 2004, date: Some((11, 24)), genres: &["Family", "Comedy"], budget: Some(30 * m), revenue: Some(90 * m), cast: &["hal", "ivy", "jon"], director: Some("dx"), synopsis: Some("a family holiday") },
        Spec { id: "m09", year: 2004, date: Some((12, 1)), genres: &["Thriller"], budget: Some(15 * m), revenue: Some(15 * m), cast: &["kim"], director: Some("dw"), synopsis: Some("a spy thriller") },
        Spec { id: "m10", year: 2005, date: Some((1, 20)), genres: &["Comedy"], budget: Some(12 * m), revenue: Some(36 * m), cast: &["ana", "jon", "kim", "ben"], director: Some("dx"), synopsis: Some("wedding love comedy") },
        Spec { id: "m11", year: 2005, date: Some((4, 1)), genres: &["Action", "Sci-Fi"], budget: Some(100 * m), revenue: Some(150 * m), cast: &["dan", "gus", "lee"], director: Some("dy"), synopsis: Some("war in space") },
        Spec { id: "m12", year: 2005, date: Some((7, 1)), genres: &["Drama"], budget: Some(6 * m), revenue: Some(3 * m), cast: &["fay", "eve", "mia"], director: Some("dz"), synopsis: None },
        Spec { id: "m13", year: 2005, date: Some((7, 15)), genres: &["Horror", "Thriller"], budget: Some(3 * m), revenue: Some(21 * m), cast: &["hal", "mia"], director: Some("dw"), synopsis: Some("a haunted spy") },
        Spec { id: "m14", year: 2005, date: Some((10, 30)), genres: &["Romance"], budget: Some(9 * m), revenue: None, cast: &["ivy", "cat"], director: None, synopsis: Some("kiss") },
        Spec { id: "m15", year: 2006, date: Some((1, 15)), genres: &["Comedy", "Family"], budget: Some(25 * m), revenue: Some(50 * m), cast: &["ana", "hal", "lee"], director: Some("dx"), synopsis: Some("family wedding") },
        Spec { id: "m16", year: 2006, date: Some((2, 3)), genres: &["Action", "Adventure"], budget: Some(90 * m), revenue: Some(60 * m), cast: &["dan", "eve", "kim", "nia"], director: Some("dy"), synopsis: Some("battle army adventure") },
        Spec { id: "m17", year: 2006, date: Some((7, 4)), genres: &["Drama", "War"], budget: Some(40 * m), revenue: Some(80 * m), cast: &["fay", "gus", "ben"], director: Some("dz"), synopsis: Some("soldiers in a war") },
        Spec { id: "m18", year: 2006, date: Some((7, 20)), genres: &["Horror"], budget: Some(4 * m), revenue: Some(2 * m), cast: &["mia", "jon"], director: Some("dw"), synopsis: Some("haunted") },
        Spec { id: "m19", year: 2006, date: None, genres: &["Romance", "Comedy"], budget: Some(18 * m), revenue: Some(27 * m), cast: &["ivy", "cat", "ana"], director: Some("dv"), synopsis: Some("love kiss wedding") },
        Spec { id: "m20", year: 2006, date: Some((12, 22)), genres: &["Family", "Animation"], budget: Some(60 * m), revenue: Some(200 * m), cast: &["oli", "pam", "hal"], director: Some("dx"), synopsis: Some("a family of animals") },
    ];
    specs.iter().map(movie).collect()
}
