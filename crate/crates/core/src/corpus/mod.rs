//! Movie corpus: records, ingestion, and experiment views.

mod filter;
mod load;
mod record;

use std::collections::{BTreeMap, HashMap};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use filter::{apply_filter, CorpusView, ExperimentFilter};
pub use load::{load_corpus, read_corpus, save_corpus, write_corpus, CorpusFormat, LineError, LoadOutcome, LoadReport};
pub use record::{
    FilmographyEntry, FranchiseFlag, GenreId, GenreRegistry, MovieRecord, MpaaRating, PersonRecord, Role,
};

/// Immutable, cross-referenced movie corpus.
#[derive(Debug, Clone)]
pub struct Corpus {
    registry: GenreRegistry,
    movies: Vec<MovieRecord>,
    index: HashMap<String, usize>,
    persons: BTreeMap<String, PersonRecord>,
    by_year: BTreeMap<i32, Vec<usize>>,
}

impl Corpus {
    /// Builds a corpus from validated records. `names` maps person ids to
    /// display names; persons without a name use their id.
    pub fn from_parts(
        registry: GenreRegistry,
        movies: Vec<MovieRecord>,
        names: HashMap<String, String>,
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(movies.len());
        let mut by_year: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
        let mut persons: BTreeMap<String, PersonRecord> = BTreeMap::new();
        for (i, m) in movies.iter().enumerate() {
            m.validate(&registry)
                .map_err(|msg| Error::InvalidInput(format!("movie '{}': {msg}", m.movie_id)))?;
            if index.insert(m.movie_id.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate movie id '{}'", m.movie_id)));
            }
            by_year.entry(m.year).or_default().push(i);
            let credits = m
                .cast
                .iter()
                .enumerate()
                .map(|(pos, pid)| (pid, Role::Cast(pos as u32)))
                .chain(m.director_id.iter().map(|pid| (pid, Role::Director)));
            for (pid, role) in credits {
                let person = persons.entry(pid.clone()).or_insert_with(|| PersonRecord {
                    person_id: pid.clone(),
                    name: names.get(pid).cloned().unwrap_or_else(|| pid.clone()),
                    filmography: Vec::new(),
                });
                person.filmography.push(FilmographyEntry {
                    movie_id: m.movie_id.clone(),
                    year: m.year,
                    role,
                    movie_index: i,
                });
            }
        }
        for p in persons.values_mut() {
            p.filmography
                .sort_by(|a, b| (a.year, &a.movie_id, a.role).cmp(&(b.year, &b.movie_id, b.role)));
        }
        Ok(Corpus {
            registry,
            movies,
            index,
            persons,
            by_year,
        })
    }

    pub fn empty(registry: GenreRegistry) -> Self {
        Self::from_parts(registry, Vec::new(), HashMap::new()).expect("empty corpus is valid")
    }

    pub fn registry(&self) -> &GenreRegistry {
        &self.registry
    }

    pub fn movies(&self) -> &[MovieRecord] {
        &self.movies
    }

    pub fn len(&self) -> usize {
        self.movies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.movies.is_empty()
    }

    pub fn movie(&self, id: &str) -> Option<&MovieRecord> {
        self.index.get(id).map(|&i| &self.movies[i])
    }

    pub fn movie_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn person(&self, id: &str) -> Option<&PersonRecord> {
        self.persons.get(id)
    }

    pub fn persons(&self) -> impl Iterator<Item = &PersonRecord> {
        self.persons.values()
    }

    /// Indices of the movies released in `year`, in corpus order.
    pub fn movies_in_year(&self, year: i32) -> &[usize] {
        self.by_year.get(&year).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn year_range(&self) -> Option<(i32, i32)> {
        Some((*self.by_year.keys().next()?, *self.by_year.keys().next_back()?))
    }

    /// Case-insensitive exact name lookup; ambiguous names resolve to the
    /// lexicographically smallest id.
    pub fn find_person_by_name(&self, name: &str) -> Option<&PersonRecord> {
        let needle = name.trim();
        self.persons.values().find(|p| p.name.eq_ignore_ascii_case(needle))
    }

    /// SHA-256 of the canonical JSONL serialization.
    pub fn fingerprint(&self) -> String {
        let mut buf = Vec::new();
        write_corpus(self, &mut buf).expect("writing to memory");
        hex::encode(Sha256::digest(&buf))
    }
}
