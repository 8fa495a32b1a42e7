//! Team-level static and dynamic network measures.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::algo::{bfs_from, local_clustering, UNREACHABLE};
use super::snapshot::{CollabSnapshot, NodeId};
use crate::corpus::{Corpus, MovieRecord, Role};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Team {
    pub movie_id: String,
    /// First-billed cast in billing order.
    pub members: Vec<String>,
    pub director_id: Option<String>,
}

impl Team {
    pub fn from_movie(movie: &MovieRecord, team_size: usize) -> Self {
        Team {
            movie_id: movie.movie_id.clone(),
            members: movie.team(team_size).to_vec(),
            director_id: movie.director_id.clone(),
        }
    }

    pub fn new<S: Into<String>>(members: impl IntoIterator<Item = S>) -> Self {
        Team {
            movie_id: String::new(),
            members: members.into_iter().map(Into::into).collect(),
            director_id: None,
        }
    }
}

fn cosine(a: &[(NodeId, u32)], b: &[(NodeId, u32)]) -> f64 {
    let norm = |r: &[(NodeId, u32)]| r.iter().map(|&(_, w)| (w as f64).powi(2)).sum::<f64>().sqrt();
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let (mut i, mut j, mut dot) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += a[i].1 as f64 * b[j].1 as f64;
                i += 1;
                j += 1;
            }
        }
    }
    dot / (na * nb)
}

/// Mean pairwise cosine similarity of the members' weighted neighborhood
/// rows. Members without collaborations contribute similarity 0.
pub fn heterogeneity(snapshot: &CollabSnapshot, team: &Team) -> Result<f64> {
    let n = team.members.len();
    if n < 2 {
        return Err(Error::UndefinedTeam(n));
    }
    let rows: Vec<&[(NodeId, u32)]> = team
        .members
        .iter()
        .map(|p| snapshot.node(p).map(|v| snapshot.neighbors(v)).unwrap_or(&[]))
        .collect();
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += cosine(rows[i], rows[j]);
        }
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}

/// Mean unweighted degree; members missing from the snapshot count 0.
pub fn average_degree(snapshot: &CollabSnapshot, team: &Team) -> f64 {
    if team.members.is_empty() {
        return 0.0;
    }
    let total: usize = team
        .members
        .iter()
        .filter_map(|p| snapshot.node(p))
        .map(|v| snapshot.degree(v))
        .sum();
    total as f64 / team.members.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetweennessStats {
    pub total: f64,
    pub average: f64,
}

pub fn betweenness_stats(snapshot: &CollabSnapshot, team: &Team) -> BetweennessStats {
    if team.members.is_empty() {
        return BetweennessStats {
            total: 0.0,
            average: 0.0,
        };
    }
    let total: f64 = team
        .members
        .iter()
        .filter_map(|p| snapshot.node(p))
        .map(|v| snapshot.betweenness(v))
        .sum();
    BetweennessStats {
        total,
        average: total / team.members.len() as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActorDirectorCollab {
    pub avg_frequency: f64,
    pub avg_profit: f64,
    /// No director on the team.
    pub cold_start: bool,
}

/// Past collaborations between the cast and the director in movies released
/// up to and including `snapshot_year`.
pub fn actor_director_collab(corpus: &Corpus, snapshot_year: i32, team: &Team) -> ActorDirectorCollab {
    let cold = ActorDirectorCollab {
        avg_frequency: 0.0,
        avg_profit: 0.0,
        cold_start: true,
    };
    let Some(director) = team.director_id.as_deref() else {
        return cold;
    };
    if team.members.is_empty() {
        return cold;
    }
    let members: HashSet<&str> = team.members.iter().map(String::as_str).collect();
    let mut appearances = 0usize;
    let mut profits = Vec::new();
    if let Some(person) = corpus.person(director) {
        for entry in person
            .filmography
            .iter()
            .filter(|e| e.role == Role::Director && e.year <= snapshot_year)
        {
            let movie = &corpus.movies()[entry.movie_index];
            let hits = movie.cast.iter().filter(|p| members.contains(p.as_str())).count();
            appearances += hits;
            if hits > 0 {
                if let Some(p) = movie.profit() {
                    profits.push(p);
                }
            }
        }
    }
    ActorDirectorCollab {
        avg_frequency: appearances as f64 / team.members.len() as f64,
        avg_profit: if profits.is_empty() {
            0.0
        } else {
            profits.iter().sum::<f64>() / profits.len() as f64
        },
        cold_start: false,
    }
}

/// The snapshot with the team's clique overlaid. Team members absent from the
/// snapshot get ids `n..n+q`.
struct Overlay<'a> {
    snap: &'a CollabSnapshot,
    n: usize,
    new_nodes: usize,
    team: Vec<usize>,
    team_set: HashSet<usize>,
    new_edges: Vec<(usize, usize)>,
}

impl<'a> Overlay<'a> {
    fn new(snap: &'a CollabSnapshot, team: &Team) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let members: Vec<&String> = team.members.iter().filter(|m| seen.insert(m.as_str())).collect();
        if members.len() < 2 {
            return Err(Error::UndefinedTeam(members.len()));
        }
        let n = snap.node_count();
        let mut new_nodes = 0;
        let ids: Vec<usize> = members
            .iter()
            .map(|p| match snap.node(p) {
                Some(v) => v as usize,
                None => {
                    new_nodes += 1;
                    n + new_nodes - 1
                }
            })
            .collect();
        let mut new_edges = Vec::new();
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                if a >= n || b >= n || !snap.adjacent(a as NodeId, b as NodeId) {
                    new_edges.push((a, b));
                }
            }
        }
        Ok(Overlay {
            snap,
            n,
            new_nodes,
            team_set: ids.iter().copied().collect(),
            team: ids,
            new_edges,
        })
    }

    fn neighbors(&self, v: usize) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = if v < self.n {
            self.snap.neighbors(v as NodeId).iter().map(|&(w, _)| w).collect()
        } else {
            Vec::new()
        };
        if self.team_set.contains(&v) {
            out.extend(self.team.iter().filter(|&&t| t != v).map(|&t| t as NodeId));
            out.sort_unstable();
            out.dedup();
        }
        out
    }

    fn adjacent(&self, a: usize, b: usize) -> bool {
        (a < self.n && b < self.n && self.snap.adjacent(a as NodeId, b as NodeId))
            || (a != b && self.team_set.contains(&a) && self.team_set.contains(&b))
    }

    fn local_clustering(&self, v: usize) -> f64 {
        let nbrs = self.neighbors(v);
        let d = nbrs.len();
        if d < 2 {
            return 0.0;
        }
        let mut links = 0usize;
        for (i, &a) in nbrs.iter().enumerate() {
            links += nbrs[i + 1..]
                .iter()
                .filter(|&&b| self.adjacent(a as usize, b as usize))
                .count();
        }
        2.0 * links as f64 / (d * (d - 1)) as f64
    }
}

/// C(before) - C(after adding the team clique); positive when the new
/// collaborations lower the network's mean local clustering.
pub fn delta_clustering(snapshot: &CollabSnapshot, team: &Team) -> Result<f64> {
    let ov = Overlay::new(snapshot, team)?;
    if ov.new_edges.is_empty() {
        return Ok(0.0);
    }
    let mut affected: BTreeSet<usize> = ov.team.iter().copied().collect();
    for &(a, b) in &ov.new_edges {
        if a < ov.n && b < ov.n {
            let (ra, rb) = (snapshot.neighbors(a as NodeId), snapshot.neighbors(b as NodeId));
            let (mut i, mut j) = (0, 0);
            while i < ra.len() && j < rb.len() {
                match ra[i].0.cmp(&rb[j].0) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        affected.insert(ra[i].0 as usize);
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
    }
    let cache = snapshot.cache();
    let before = snapshot.clustering_coefficient();
    let mut sum = cache.clustering_sum;
    for &v in &affected {
        if v < ov.n {
            sum -= cache.clustering[v];
        }
        sum += ov.local_clustering(v);
    }
    let after = sum / (ov.n + ov.new_nodes) as f64;
    Ok(before - after)
}

/// L(before) - L(after adding the team clique), with L the mean hop distance
/// over connected pairs.
pub fn delta_avg_shortest_path(snapshot: &CollabSnapshot, team: &Team) -> Result<f64> {
    let ov = Overlay::new(snapshot, team)?;
    if ov.new_edges.is_empty() {
        return Ok(0.0);
    }
    let n = ov.n;
    let cache = snapshot.cache();
    let old_team: Vec<usize> = ov.team.iter().copied().filter(|&v| v < n).collect();
    let g = if cache.distances.is_none() || !old_team.is_empty() {
        Some(snapshot.unweighted())
    } else {
        None
    };
    let mut to_team = Vec::new();
    if let Some(g) = &g {
        bfs_from(g, &old_team, &mut to_team);
    } else {
        to_team = vec![UNREACHABLE; n];
    }
    // Any improved shortest path crosses at most one clique edge, so
    // d'(s,t) = min(d(s,t), d(s,T) + 1 + d(T,t)).
    let reach: Vec<usize> = (0..n).filter(|&v| to_team[v] != UNREACHABLE).collect();
    let mut sum = cache.path_sum;
    let mut pairs = cache.path_pairs as f64;
    let mut row = Vec::new();
    for &s in &reach {
        let old_row: &[u16] = match &cache.distances {
            Some(table) => &table[s * n..(s + 1) * n],
            None => {
                bfs_from(g.as_ref().expect("graph built"), &[s], &mut row);
                &row
            }
        };
        let ds = to_team[s] as u32;
        for &t in &reach {
            if t == s {
                continue;
            }
            let via = ds + 1 + to_team[t] as u32;
            let old = old_row[t];
            if old == UNREACHABLE {
                sum += via as f64;
                pairs += 1.0;
            } else if via < old as u32 {
                sum -= (old as u32 - via) as f64;
            }
        }
    }
    let q = ov.new_nodes as f64;
    for &t in &reach {
        sum += 2.0 * q * (1.0 + to_team[t] as f64);
        pairs += 2.0 * q;
    }
    sum += q * (q - 1.0);
    pairs += q * (q - 1.0);
    let before = snapshot.average_shortest_path();
    let after = if pairs == 0.0 { 0.0 } else { sum / pairs };
    Ok(before - after)
}

/// Local clustering of a node in the snapshot (0 when degree < 2).
pub fn node_clustering(snapshot: &CollabSnapshot, person: &str) -> f64 {
    snapshot
        .node(person)
        .map(|v| local_clustering(&snapshot.unweighted(), v as usize))
        .unwrap_or(0.0)
}
