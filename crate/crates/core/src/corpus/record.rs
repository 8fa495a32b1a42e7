use std::collections::{BTreeSet, HashMap};
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::Adaptation;

static DEFAULT_GENRES: &str = include_str!("../data/genres.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MpaaRating {
    G,
    PG,
    PG13,
    R,
    NC17,
    Unknown,
}

impl MpaaRating {
    pub const ALL: [MpaaRating; 6] = [
        MpaaRating::G,
        MpaaRating::PG,
        MpaaRating::PG13,
        MpaaRating::R,
        MpaaRating::NC17,
        MpaaRating::Unknown,
    ];

    /// Strict parse; `None` for tokens that are not a rating.
    pub fn parse(s: &str) -> Option<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_uppercase();
        match norm.as_str() {
            "G" => Some(MpaaRating::G),
            "PG" => Some(MpaaRating::PG),
            "PG13" => Some(MpaaRating::PG13),
            "R" => Some(MpaaRating::R),
            "NC17" => Some(MpaaRating::NC17),
            "UNKNOWN" | "UNRATED" | "NOTRATED" | "" => Some(MpaaRating::Unknown),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MpaaRating::G => "G",
            MpaaRating::PG => "PG",
            MpaaRating::PG13 => "PG-13",
            MpaaRating::R => "R",
            MpaaRating::NC17 => "NC-17",
            MpaaRating::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for MpaaRating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FranchiseFlag {
    Sequel,
    Remake,
    Franchise,
}

impl FranchiseFlag {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sequel" => Some(FranchiseFlag::Sequel),
            "remake" => Some(FranchiseFlag::Remake),
            "franchise" => Some(FranchiseFlag::Franchise),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FranchiseFlag::Sequel => "sequel",
            FranchiseFlag::Remake => "remake",
            FranchiseFlag::Franchise => "franchise",
        }
    }
}

/// Position of a genre in the registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GenreId(pub u16);

/// Fixed, ordered genre vocabulary. Positions are stable for a corpus version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct GenreRegistry {
    names: Vec<String>,
    index: HashMap<String, GenreId>,
}

impl TryFrom<Vec<String>> for GenreRegistry {
    type Error = Error;

    fn try_from(names: Vec<String>) -> Result<Self> {
        GenreRegistry::new(names)
    }
}

impl From<GenreRegistry> for Vec<String> {
    fn from(reg: GenreRegistry) -> Self {
        reg.names
    }
}

impl GenreRegistry {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.to_ascii_lowercase(), GenreId(i as u16)).is_some() {
                return Err(Error::InvalidInput(format!("duplicate genre '{name}'")));
            }
        }
        Ok(GenreRegistry { names, index })
    }

    /// The shipped 26-genre registry.
    pub fn default_registry() -> Self {
        Self::new(DEFAULT_GENRES.lines().map(str::trim).filter(|l| !l.is_empty())).expect("shipped genre list is valid")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: GenreId) -> &str {
        &self.names[id.0 as usize]
    }

    /// Case-insensitive lookup.
    pub fn id(&self, name: &str) -> Option<GenreId> {
        self.index.get(&name.to_ascii_lowercase()).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovieRecord {
    pub movie_id: String,
    pub title: String,
    pub year: i32,
    pub release_date: Option<NaiveDate>,
    pub genres: BTreeSet<GenreId>,
    pub mpaa_rating: MpaaRating,
    pub budget_usd: Option<u64>,
    pub revenue_usd: Option<u64>,
    /// Person ids in billing order.
    pub cast: Vec<String>,
    pub director_id: Option<String>,
    pub synopsis: Option<String>,
    pub adaptation: BTreeSet<Adaptation>,
    pub franchise_flags: BTreeSet<FranchiseFlag>,
}

impl MovieRecord {
    /// Revenue minus budget, when both are known.
    pub fn profit(&self) -> Option<f64> {
        Some(self.revenue_usd? as f64 - self.budget_usd? as f64)
    }

    /// (revenue - budget) / budget, when both are known.
    pub fn roi(&self) -> Option<f64> {
        let budget = self.budget_usd? as f64;
        Some((self.revenue_usd? as f64 - budget) / budget)
    }

    /// The first-billed cast: the first `team_size` entries in billing order.
    pub fn team(&self, team_size: usize) -> &[String] {
        &self.cast[..self.cast.len().min(team_size)]
    }

    pub(crate) fn populated_fields(&self) -> usize {
        [
            !self.title.is_empty(),
            self.release_date.is_some(),
            !self.genres.is_empty(),
            self.mpaa_rating != MpaaRating::Unknown,
            self.budget_usd.is_some(),
            self.revenue_usd.is_some(),
            !self.cast.is_empty(),
            self.director_id.is_some(),
            self.synopsis.is_some(),
            !self.adaptation.is_empty(),
            !self.franchise_flags.is_empty(),
        ]
        .iter()
        .filter(|&&b| b)
        .count()
    }

    pub(crate) fn validate(&self, registry: &GenreRegistry) -> std::result::Result<(), String> {
        if !(1900..=2100).contains(&self.year) {
            return Err(format!("year {} outside [1900, 2100]", self.year));
        }
        if self.budget_usd == Some(0) {
            return Err("budget must be positive".into());
        }
        if let Some(g) = self.genres.iter().find(|g| g.0 as usize >= registry.len()) {
            return Err(format!("genre id {} not registered", g.0));
        }
        let mut seen = BTreeSet::new();
        for p in &self.cast {
            if !seen.insert(p.as_str()) {
                return Err(format!("duplicate cast member '{p}'"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    /// Zero-based billing position.
    Cast(u32),
    Director,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilmographyEntry {
    pub movie_id: String,
    pub year: i32,
    pub role: Role,
    /// Index of the movie in the owning corpus.
    pub movie_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonRecord {
    pub person_id: String,
    pub name: String,
    /// Sorted ascending by year (then movie id).
    pub filmography: Vec<FilmographyEntry>,
}

impl PersonRecord {
    /// Cast appearances in movies released strictly before `year`.
    pub fn cast_before(&self, year: i32) -> impl Iterator<Item = &FilmographyEntry> {
        self.filmography
            .iter()
            .take_while(move |e| e.year < year)
            .filter(|e| matches!(e.role, Role::Cast(_)))
    }

    /// Directing credits in movies released strictly before `year`.
    pub fn directed_before(&self, year: i32) -> impl Iterator<Item = &FilmographyEntry> {
        self.filmography
            .iter()
            .take_while(move |e| e.year < year)
            .filter(|e| e.role == Role::Director)
    }
}
