//! Per-person track records restricted to movies released before a year.

use crate::corpus::Corpus;

#[derive(Debug, Clone, PartialEq)]
pub struct ActorHistory {
    pub appearances: usize,
    pub first_year: i32,
    pub last_year: i32,
    pub gross_total: f64,
    /// Appearances with a known revenue.
    pub gross_count: usize,
    pub profit_total: f64,
    pub profit_count: usize,
    pub profit_top: f64,
    /// Appearances per registry genre.
    pub genre_counts: Vec<u32>,
}

impl ActorHistory {
    pub fn tenure(&self) -> f64 {
        (self.last_year - self.first_year) as f64
    }

    pub fn gross_avg(&self) -> f64 {
        if self.gross_count == 0 {
            0.0
        } else {
            self.gross_total / self.gross_count as f64
        }
    }

    pub fn profit_avg(&self) -> f64 {
        if self.profit_count == 0 {
            0.0
        } else {
            self.profit_total / self.profit_count as f64
        }
    }

    /// Genre experience vector: share of appearances carrying each genre.
    pub fn genre_experience(&self) -> Vec<f64> {
        self.genre_counts
            .iter()
            .map(|&c| c as f64 / self.appearances as f64)
            .collect()
    }
}

/// Cast record of `person` in movies released strictly before `year`;
/// `None` when there is none.
pub fn actor_history(corpus: &Corpus, person: &str, year: i32) -> Option<ActorHistory> {
    let p = corpus.person(person)?;
    let mut h = ActorHistory {
        appearances: 0,
        first_year: i32::MAX,
        last_year: i32::MIN,
        gross_total: 0.0,
        gross_count: 0,
        profit_total: 0.0,
        profit_count: 0,
        profit_top: f64::NEG_INFINITY,
        genre_counts: vec![0; corpus.registry().len()],
    };
    for e in p.cast_before(year) {
        let m = &corpus.movies()[e.movie_index];
        h.appearances += 1;
        h.first_year = h.first_year.min(m.year);
        h.last_year = h.last_year.max(m.year);
        if let Some(r) = m.revenue_usd {
            h.gross_total += r as f64;
            h.gross_count += 1;
        }
        if let Some(pr) = m.profit() {
            h.profit_total += pr;
            h.profit_count += 1;
            h.profit_top = h.profit_top.max(pr);
        }
        for g in &m.genres {
            h.genre_counts[g.0 as usize] += 1;
        }
    }
    if h.appearances == 0 {
        return None;
    }
    if h.profit_count == 0 {
        h.profit_top = 0.0;
    }
    Some(h)
}

/// Total revenue of the person's earlier cast appearances.
pub fn actor_gross_before(corpus: &Corpus, person: &str, year: i32) -> f64 {
    corpus
        .person(person)
        .map(|p| {
            p.cast_before(year)
                .filter_map(|e| corpus.movies()[e.movie_index].revenue_usd)
                .map(|r| r as f64)
                .sum()
        })
        .unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectorHistory {
    pub gross_total: f64,
    pub gross_count: usize,
    pub profit_total: f64,
    pub profit_count: usize,
    pub profit_top: f64,
}

pub fn director_history(corpus: &Corpus, person: &str, year: i32) -> DirectorHistory {
    let mut h = DirectorHistory {
        gross_total: 0.0,
        gross_count: 0,
        profit_total: 0.0,
        profit_count: 0,
        profit_top: f64::NEG_INFINITY,
    };
    if let Some(p) = corpus.person(person) {
        for e in p.directed_before(year) {
            let m = &corpus.movies()[e.movie_index];
            if let Some(r) = m.revenue_usd {
                h.gross_total += r as f64;
                h.gross_count += 1;
            }
            if let Some(pr) = m.profit() {
                h.profit_total += pr;
                h.profit_count += 1;
                h.profit_top = h.profit_top.max(pr);
            }
        }
    }
    if h.profit_count == 0 {
        h.profit_top = 0.0;
    }
    h
}

impl DirectorHistory {
    pub fn gross_avg(&self) -> f64 {
        if self.gross_count == 0 {
            0.0
        } else {
            self.gross_total / self.gross_count as f64
        }
    }

    pub fn profit_avg(&self) -> f64 {
        if self.profit_count == 0 {
            0.0
        } else {
            self.profit_total / self.profit_count as f64
        }
    }
}
