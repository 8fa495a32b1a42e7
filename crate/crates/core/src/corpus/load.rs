//! JSONL ingestion and canonical serialization.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::record::{FranchiseFlag, GenreRegistry, MovieRecord, MpaaRating};
use super::Corpus;
use crate::error::{Error, Result};
use crate::text::{clean_title, detect_adaptation};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawCastMember {
    pub id: Option<String>,
    pub name: Option<String>,
    pub billing: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawPerson {
    pub id: Option<String>,
    pub name: Option<String>,
}

/// One line of the corpus file. Absent keys are read as null.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawMovie {
    pub id: String,
    #[serde(default)]
    pub title: Option<String>,
    pub year: i64,
    #[serde(default)]
    pub release_date: Option<String>,
    #[serde(default)]
    pub genres: Option<Vec<String>>,
    #[serde(default)]
    pub rating: Option<String>,
    #[serde(default)]
    pub budget: Option<f64>,
    #[serde(default)]
    pub revenue: Option<f64>,
    #[serde(default)]
    pub cast: Option<Vec<RawCastMember>>,
    #[serde(default)]
    pub director: Option<RawPerson>,
    #[serde(default)]
    pub synopsis: Option<String>,
    #[serde(default)]
    pub adaptation_hints: Option<Vec<String>>,
    #[serde(default)]
    pub franchise_flags: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub records_read: usize,
    pub duplicates_merged: usize,
    pub invalid_lines: usize,
    pub dangling_refs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for LineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone)]
pub struct LoadOutcome {
    pub corpus: Corpus,
    pub report: LoadReport,
    pub line_errors: Vec<LineError>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorpusFormat {
    #[default]
    Jsonl,
}

struct Parsed {
    movie: MovieRecord,
    names: Vec<(String, String)>,
    dangling: usize,
}

fn parse_amount(v: Option<f64>, field: &str) -> std::result::Result<Option<u64>, String> {
    match v {
        None => Ok(None),
        Some(x) if !x.is_finite() || x < 0.0 => Err(format!("{field} must be nonnegative, got {x}")),
        Some(x) if x.fract() != 0.0 => Err(format!("{field} must be whole dollars, got {x}")),
        Some(x) => Ok(Some(x as u64)),
    }
}

fn non_empty(id: Option<String>) -> Option<String> {
    id.map(|s| s.trim().to_string()).filter(|s| !s.is_empty())
}

fn convert(raw: RawMovie, registry: &GenreRegistry) -> std::result::Result<Parsed, String> {
    let id = raw.id.trim().to_string();
    if id.is_empty() {
        return Err("empty id".into());
    }
    let year = i32::try_from(raw.year).map_err(|_| format!("year {} out of range", raw.year))?;
    let release_date = match raw.release_date.as_deref().map(str::trim) {
        None | Some("") => None,
        Some(s) => Some(NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("release_date '{s}': {e}"))?),
    };
    let mut genres = BTreeSet::new();
    for g in raw.genres.unwrap_or_default() {
        let gid = registry
            .id(g.trim())
            .ok_or_else(|| format!("unregistered genre '{g}'"))?;
        genres.insert(gid);
    }
    let mpaa_rating = match raw.rating.as_deref() {
        None => MpaaRating::Unknown,
        Some(r) => MpaaRating::parse(r).ok_or_else(|| format!("unknown rating '{r}'"))?,
    };
    let budget_usd = parse_amount(raw.budget, "budget")?;
    if budget_usd == Some(0) {
        return Err("budget must be positive".into());
    }
    let revenue_usd = parse_amount(raw.revenue, "revenue")?;

    let mut dangling = 0;
    let mut names = Vec::new();
    let mut members: Vec<(u32, usize, String)> = Vec::new();
    for (pos, member) in raw.cast.unwrap_or_default().into_iter().enumerate() {
        match non_empty(member.id) {
            Some(pid) => {
                if let Some(name) = member.name {
                    names.push((pid.clone(), name));
                }
                members.push((member.billing.unwrap_or(u32::MAX), pos, pid));
            }
            None => dangling += 1,
        }
    }
    members.sort();
    let cast: Vec<String> = members.into_iter().map(|(_, _, pid)| pid).collect();

    let director_id = match raw.director {
        None => None,
        Some(d) => match non_empty(d.id) {
            Some(pid) => {
                if let Some(name) = d.name {
                    names.push((pid.clone(), name));
                }
                Some(pid)
            }
            None => {
                dangling += 1;
                None
            }
        },
    };

    let synopsis = raw.synopsis.filter(|s| !s.trim().is_empty());
    let hints = raw.adaptation_hints.unwrap_or_default();
    let adaptation = detect_adaptation(synopsis.as_deref().unwrap_or(""), hints.iter().map(String::as_str));
    let mut franchise_flags = BTreeSet::new();
    for f in raw.franchise_flags.unwrap_or_default() {
        franchise_flags.insert(FranchiseFlag::parse(&f).ok_or_else(|| format!("unknown franchise flag '{f}'"))?);
    }

    let movie = MovieRecord {
        movie_id: id,
        title: clean_title(raw.title.as_deref().unwrap_or("")),
        year,
        release_date,
        genres,
        mpaa_rating,
        budget_usd,
        revenue_usd,
        cast,
        director_id,
        synopsis,
        adaptation,
        franchise_flags,
    };
    movie.validate(registry)?;
    Ok(Parsed { movie, names, dangling })
}

/// Reads a JSONL corpus. Bad lines are reported and skipped; only I/O
/// failures are fatal.
pub fn load_corpus(path: &Path, format: CorpusFormat, registry: GenreRegistry) -> Result<LoadOutcome> {
    let CorpusFormat::Jsonl = format;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file), registry).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_corpus<R: BufRead>(reader: R, registry: GenreRegistry) -> Result<LoadOutcome> {
    let mut report = LoadReport::default();
    let mut line_errors = Vec::new();
    let mut movies: Vec<MovieRecord> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();
    let mut names: HashMap<String, String> = HashMap::new();

    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<corpus>", e))?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        report.records_read += 1;
        let parsed = serde_json::from_str::<RawMovie>(&line)
            .map_err(|e| e.to_string())
            .and_then(|raw| convert(raw, &registry));
        let parsed = match parsed {
            Ok(p) => p,
            Err(message) => {
                report.invalid_lines += 1;
                line_errors.push(LineError { line: lineno, message });
                continue;
            }
        };
        report.dangling_refs += parsed.dangling;
        for (pid, name) in parsed.names {
            names.entry(pid).or_insert(name);
        }
        match by_id.get(&parsed.movie.movie_id) {
            Some(&idx) => {
                report.duplicates_merged += 1;
                if parsed.movie.populated_fields() > movies[idx].populated_fields() {
                    movies[idx] = parsed.movie;
                }
            }
            None => {
                by_id.insert(parsed.movie.movie_id.clone(), movies.len());
                movies.push(parsed.movie);
            }
        }
    }

    let corpus = Corpus::from_parts(registry, movies, names)?;
    Ok(LoadOutcome {
        corpus,
        report,
        line_errors,
    })
}

pub(crate) fn to_raw(corpus: &Corpus, movie: &MovieRecord) -> RawMovie {
    let reg = corpus.registry();
    let person_name = |pid: &str| corpus.person(pid).map(|p| p.name.clone());
    RawMovie {
        id: movie.movie_id.clone(),
        title: Some(movie.title.clone()),
        year: movie.year as i64,
        release_date: movie.release_date.map(|d| d.format("%Y-%m-%d").to_string()),
        genres: Some(movie.genres.iter().map(|g| reg.name(*g).to_string()).collect()),
        rating: Some(movie.mpaa_rating.as_str().to_string()),
        budget: movie.budget_usd.map(|b| b as f64),
        revenue: movie.revenue_usd.map(|r| r as f64),
        cast: Some(
            movie
                .cast
                .iter()
                .enumerate()
                .map(|(i, pid)| RawCastMember {
                    id: Some(pid.clone()),
                    name: person_name(pid),
                    billing: Some(i as u32 + 1),
                })
                .collect(),
        ),
        director: movie.director_id.as_ref().map(|pid| RawPerson {
            id: Some(pid.clone()),
            name: person_name(pid),
        }),
        synopsis: movie.synopsis.clone(),
        adaptation_hints: Some(movie.adaptation.iter().map(|a| a.as_str().to_string()).collect()),
        franchise_flags: Some(movie.franchise_flags.iter().map(|f| f.as_str().to_string()).collect()),
    }
}

/// Writes the corpus as canonical JSONL (corpus order, one movie per line).
pub fn write_corpus<W: Write>(corpus: &Corpus, mut out: W) -> Result<()> {
    for movie in corpus.movies() {
        let line = serde_json::to_string(&to_raw(corpus, movie))?;
        writeln!(out, "{line}").map_err(|e| Error::io("<corpus>", e))?;
    }
    Ok(())
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_corpus(corpus, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}
