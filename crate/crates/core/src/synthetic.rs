//! Planted-signal corpus generator.
//!
//! Each movie draws a latent theme that sets most of its log(1 + ROI); the
//! theme is visible only through the synopsis vocabulary. A smaller share
//! comes from a per-genre yearly trend that persists into the next year.
//! Cast, director, rating, release date and budget are drawn independently
//! of the outcome.

use std::collections::{BTreeSet, HashMap, HashSet};

use chrono::NaiveDate;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, GenreId, GenreRegistry, MovieRecord, MpaaRating};
use crate::error::{Error, Result};
use crate::text::preprocess_synopsis;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub movies: usize,
    pub first_year: i32,
    pub years: i32,
    pub actors: usize,
    pub directors: usize,
    pub themes: usize,
    pub theme_vocab: usize,
    pub shared_vocab: usize,
    pub synopsis_len: usize,
    /// Share of synopsis tokens drawn from the movie's theme.
    pub theme_share: f64,
    /// Theme effects on log(1 + ROI) are spaced evenly over ±this.
    pub theme_spread: f64,
    pub trend_persistence: f64,
    pub trend_sd: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            movies: 2000,
            first_year: 2000,
            years: 11,
            actors: 1500,
            directors: 250,
            themes: 8,
            theme_vocab: 25,
            shared_vocab: 120,
            synopsis_len: 30,
            theme_share: 0.7,
            theme_spread: 1.2,
            trend_persistence: 0.7,
            trend_sd: 0.2,
            noise_sd: 0.3,
            seed: 7,
        }
    }
}

/// A generated corpus plus the planted ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    /// Theme of each movie, in corpus order.
    pub themes: Vec<usize>,
    pub theme_effects: Vec<f64>,
    /// Vocabulary of each theme.
    pub theme_words: Vec<Vec<String>>,
}

const SYLLABLES: [&str; 24] = [
    "ba", "do", "fi", "gu", "ka", "lo", "mi", "nu", "pa", "ro", "si", "tu", "va", "zo", "be", "da", "fo", "gi", "ku",
    "la", "mo", "ni", "po", "ru",
];

/// Pseudo-words that survive preprocessing as distinct single tokens.
fn make_vocabulary(n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut words = Vec::with_capacity(n);
    let mut stems = HashSet::new();
    while words.len() < n {
        let len = rng.random_range(3..=4);
        let mut w: String = (0..len).map(|_| *SYLLABLES.choose(rng).unwrap()).collect();
        w.push(*['x', 'k', 'n', 't'].choose(rng).unwrap());
        let tokens = preprocess_synopsis(&w);
        if tokens.len() == 1 && stems.insert(tokens[0].clone()) {
            words.push(w);
        }
    }
    words
}

fn rating(rng: &mut ChaCha8Rng) -> MpaaRating {
    let u: f64 = rng.random();
    match u {
        u if u < 0.03 => MpaaRating::G,
        u if u < 0.23 => MpaaRating::PG,
        u if u < 0.63 => MpaaRating::PG13,
        u if u < 0.98 => MpaaRating::R,
        _ => MpaaRating::NC17,
    }
}

/// Draws a popularity-weighted index: a few people appear often.
fn popular(rng: &mut ChaCha8Rng, cumulative: &[f64]) -> usize {
    let u = rng.random::<f64>() * cumulative[cumulative.len() - 1];
    cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticCorpus> {
    if cfg.movies == 0 || cfg.years < 1 || cfg.themes < 2 || cfg.actors < 10 || cfg.directors == 0 {
        return Err(Error::InvalidInput(
            "synthetic corpus needs movies, years, 2+ themes, 10+ actors and a director".into(),
        ));
    }
    if !(0.0..=1.0).contains(&cfg.theme_share) {
        return Err(Error::InvalidInput("theme_share must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let registry = GenreRegistry::default_registry();
    let genres: Vec<GenreId> = registry
        .names()
        .iter()
        .filter(|n| !matches!(n.to_ascii_lowercase().as_str(), "unknown" | "documentary"))
        .filter_map(|n| registry.id(n))
        .collect();

    let vocab = make_vocabulary(cfg.themes * cfg.theme_vocab + cfg.shared_vocab, &mut rng);
    let theme_words: Vec<Vec<String>> = vocab[..cfg.themes * cfg.theme_vocab]
        .chunks(cfg.theme_vocab)
        .map(<[String]>::to_vec)
        .collect();
    let shared = &vocab[cfg.themes * cfg.theme_vocab..];
    let theme_effects: Vec<f64> = (0..cfg.themes)
        .map(|t| cfg.theme_spread * (2.0 * t as f64 / (cfg.themes - 1) as f64 - 1.0))
        .collect();

    let innov = Normal::new(0.0, cfg.trend_sd).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let noise = Normal::new(0.0, cfg.noise_sd).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let budget_dist = LogNormal::new((20e6f64).ln(), 1.3).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let years = cfg.years as usize;
    let mut trend = vec![vec![0.0; genres.len()]; years];
    for g in 0..genres.len() {
        let mut v = innov.sample(&mut rng);
        for row in trend.iter_mut() {
            row[g] = v;
            v = cfg.trend_persistence * v + innov.sample(&mut rng);
        }
    }

    let cumulative = |n: usize| -> Vec<f64> {
        let mut acc = 0.0;
        (0..n)
            .map(|i| {
                acc += 1.0 / (i as f64 + 10.0).powf(0.8);
                acc
            })
            .collect()
    };
    let actor_cum = cumulative(cfg.actors);
    let director_cum = cumulative(cfg.directors);
    let mut actor_order: Vec<usize> = (0..cfg.actors).collect();
    actor_order.shuffle(&mut rng);

    let mut movies = Vec::with_capacity(cfg.movies);
    let mut themes = Vec::with_capacity(cfg.movies);
    for i in 0..cfg.movies {
        let year_idx = i * years / cfg.movies;
        let year = cfg.first_year + year_idx as i32;
        let start = NaiveDate::from_ymd_opt(year, 1, 1)
            .ok_or_else(|| Error::InvalidInput(format!("year {year} out of range")))?;
        let days = if start.leap_year() { 366 } else { 365 };
        let release = start + chrono::Duration::days(rng.random_range(0..days));

        let n_genres = rng.random_range(1..=3usize);
        let movie_genres: BTreeSet<GenreId> = genres.choose_multiple(&mut rng, n_genres).copied().collect();
        let trend_effect = movie_genres
            .iter()
            .map(|g| trend[year_idx][genres.iter().position(|x| x == g).unwrap()])
            .sum::<f64>()
            / movie_genres.len() as f64;

        let theme = rng.random_range(0..cfg.themes);
        let tokens: Vec<&str> = (0..cfg.synopsis_len)
            .map(|_| {
                if rng.random::<f64>() < cfg.theme_share {
                    theme_words[theme].choose(&mut rng).unwrap().as_str()
                } else {
                    shared.choose(&mut rng).unwrap().as_str()
                }
            })
            .collect();

        let n_cast = rng.random_range(3..=10usize);
        let mut cast: Vec<String> = Vec::with_capacity(n_cast);
        while cast.len() < n_cast {
            let id = format!("a{:05}", actor_order[popular(&mut rng, &actor_cum)]);
            if !cast.contains(&id) {
                cast.push(id);
            }
        }
        let director = format!("d{:04}", popular(&mut rng, &director_cum));

        let budget = budget_dist.sample(&mut rng).clamp(5e5, 4e8).round();
        let z = theme_effects[theme] + trend_effect + noise.sample(&mut rng);
        let revenue = (budget * z.exp()).round().max(1.0);

        movies.push(MovieRecord {
            movie_id: format!("s{i:05}"),
            title: format!("Synthetic {i:05}"),
            year,
            release_date: Some(release),
            genres: movie_genres,
            mpaa_rating: rating(&mut rng),
            budget_usd: Some(budget as u64),
            revenue_usd: Some(revenue as u64),
            cast,
            director_id: Some(director),
            synopsis: Some(tokens.join(" ")),
            adaptation: BTreeSet::new(),
            franchise_flags: BTreeSet::new(),
        });
        themes.push(theme);
    }

    let mut names = HashMap::new();
    for a in 0..cfg.actors {
        names.insert(format!("a{a:05}"), format!("Actor {a}"));
    }
    for d in 0..cfg.directors {
        names.insert(format!("d{d:04}"), format!("Director {d}"));
    }
    let corpus = Corpus::from_parts(registry, movies, names)?;
    Ok(SyntheticCorpus {
        corpus,
        themes,
        theme_effects,
        theme_words,
    })
}
