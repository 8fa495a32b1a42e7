use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::algo;
use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Node index inside one snapshot.
pub type NodeId = u32;

/// Above this many nodes the all-pairs distance table is not materialized
/// and path deltas fall back to per-source BFS.
const DISTANCE_TABLE_MAX_NODES: usize = 8000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum BetweennessMode {
    #[default]
    Exact,
    /// Brandes accumulation from `pivots` random sources, rescaled by n/pivots.
    Sampled { pivots: usize, seed: u64 },
}

#[derive(Debug)]
pub(crate) struct SnapshotCache {
    pub betweenness: Vec<f64>,
    pub clustering: Vec<f64>,
    pub clustering_sum: f64,
    /// Row-major n*n hop counts, `u16::MAX` for unreachable.
    pub distances: Option<Vec<u16>>,
    pub path_sum: f64,
    pub path_pairs: u64,
}

/// Weighted, undirected actor collaboration network aggregated through
/// `as_of_year`. Node indices follow sorted person ids.
#[derive(Debug)]
pub struct CollabSnapshot {
    pub as_of_year: i32,
    ids: Vec<String>,
    index: HashMap<String, NodeId>,
    /// Sorted by neighbor id; weights >= 1.
    adj: Vec<Vec<(NodeId, u32)>>,
    betweenness_mode: BetweennessMode,
    cache: OnceLock<SnapshotCache>,
}

impl Clone for CollabSnapshot {
    fn clone(&self) -> Self {
        CollabSnapshot {
            as_of_year: self.as_of_year,
            ids: self.ids.clone(),
            index: self.index.clone(),
            adj: self.adj.clone(),
            betweenness_mode: self.betweenness_mode,
            cache: OnceLock::new(),
        }
    }
}

impl PartialEq for CollabSnapshot {
    fn eq(&self, other: &Self) -> bool {
        self.as_of_year == other.as_of_year && self.ids == other.ids && self.adj == other.adj
    }
}

impl CollabSnapshot {
    /// Builds a snapshot from explicit nodes and weighted edges. Edge
    /// endpoints are added as nodes; repeated pairs accumulate weight.
    pub fn from_edges<I, S>(as_of_year: i32, nodes: I, edges: &[(S, S, u32)]) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut node_set: BTreeSet<String> = nodes.into_iter().map(|s| s.as_ref().to_string()).collect();
        let mut weights: BTreeMap<(String, String), u32> = BTreeMap::new();
        for (a, b, w) in edges {
            let (a, b) = (a.as_ref(), b.as_ref());
            if a == b {
                return Err(Error::InvalidInput(format!("self-loop on '{a}'")));
            }
            if *w == 0 {
                return Err(Error::InvalidInput(format!("zero weight on ({a}, {b})")));
            }
            node_set.insert(a.to_string());
            node_set.insert(b.to_string());
            let key = if a < b {
                (a.to_string(), b.to_string())
            } else {
                (b.to_string(), a.to_string())
            };
            *weights.entry(key).or_insert(0) += w;
        }
        Ok(Self::assemble(as_of_year, node_set, &weights))
    }

    fn assemble(as_of_year: i32, nodes: BTreeSet<String>, weights: &BTreeMap<(String, String), u32>) -> Self {
        let ids: Vec<String> = nodes.into_iter().collect();
        let index: HashMap<String, NodeId> = ids.iter().enumerate().map(|(i, s)| (s.clone(), i as NodeId)).collect();
        let mut adj = vec![Vec::new(); ids.len()];
        for ((a, b), &w) in weights {
            let (ia, ib) = (index[a], index[b]);
            adj[ia as usize].push((ib, w));
            adj[ib as usize].push((ia, w));
        }
        for row in &mut adj {
            row.sort_unstable();
        }
        CollabSnapshot {
            as_of_year,
            ids,
            index,
            adj,
            betweenness_mode: BetweennessMode::Exact,
            cache: OnceLock::new(),
        }
    }

    pub fn with_betweenness_mode(mut self, mode: BetweennessMode) -> Self {
        self.betweenness_mode = mode;
        self.cache = OnceLock::new();
        self
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn node(&self, person: &str) -> Option<NodeId> {
        self.index.get(person).copied()
    }

    pub fn person(&self, node: NodeId) -> &str {
        &self.ids[node as usize]
    }

    pub fn contains(&self, person: &str) -> bool {
        self.index.contains_key(person)
    }

    /// Weight of the (a, b) edge, 0 when absent.
    pub fn weight(&self, a: &str, b: &str) -> u32 {
        match (self.node(a), self.node(b)) {
            (Some(x), Some(y)) => self.weight_between(x, y),
            _ => 0,
        }
    }

    pub(crate) fn weight_between(&self, a: NodeId, b: NodeId) -> u32 {
        let row = &self.adj[a as usize];
        row.binary_search_by_key(&b, |&(n, _)| n).map(|i| row[i].1).unwrap_or(0)
    }

    pub(crate) fn adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.adj[a as usize].binary_search_by_key(&b, |&(n, _)| n).is_ok()
    }

    /// Weighted neighborhood row of a node (its adjacency-matrix row).
    pub fn neighbors(&self, node: NodeId) -> &[(NodeId, u32)] {
        &self.adj[node as usize]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adj[node as usize].len()
    }

    /// All edges as (a, b, weight) with a < b by person id, sorted.
    pub fn edges(&self) -> Vec<(&str, &str, u32)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (i, row) in self.adj.iter().enumerate() {
            for &(j, w) in row {
                if (i as NodeId) < j {
                    out.push((self.ids[i].as_str(), self.ids[j as usize].as_str(), w));
                }
            }
        }
        out
    }

    pub(crate) fn unweighted(&self) -> Vec<Vec<NodeId>> {
        self.adj
            .iter()
            .map(|row| row.iter().map(|&(n, _)| n).collect())
            .collect()
    }

    pub(crate) fn cache(&self) -> &SnapshotCache {
        self.cache.get_or_init(|| {
            let g = self.unweighted();
            let betweenness = match self.betweenness_mode {
                BetweennessMode::Exact => algo::brandes(&g),
                BetweennessMode::Sampled { pivots, seed } => algo::brandes_sampled(&g, pivots, seed),
            };
            let clustering: Vec<f64> = (0..g.len()).map(|v| algo::local_clustering(&g, v)).collect();
            let clustering_sum = clustering.iter().sum();
            let (distances, path_sum, path_pairs) = if g.len() <= DISTANCE_TABLE_MAX_NODES {
                let (table, sum, pairs) = algo::distance_table(&g);
                (Some(table), sum, pairs)
            } else {
                let (sum, pairs) = algo::path_totals(&g);
                (None, sum, pairs)
            };
            SnapshotCache {
                betweenness,
                clustering,
                clustering_sum,
                distances,
                path_sum,
                path_pairs,
            }
        })
    }

    /// Unnormalized betweenness of a node (unordered pairs counted once).
    pub fn betweenness(&self, node: NodeId) -> f64 {
        self.cache().betweenness[node as usize]
    }

    /// Mean local clustering coefficient over all nodes (0 for an empty graph).
    pub fn clustering_coefficient(&self) -> f64 {
        if self.ids.is_empty() {
            0.0
        } else {
            self.cache().clustering_sum / self.ids.len() as f64
        }
    }

    /// Mean hop distance over connected pairs (0 when no pair is connected).
    pub fn average_shortest_path(&self) -> f64 {
        let c = self.cache();
        if c.path_pairs == 0 {
            0.0
        } else {
            c.path_sum / c.path_pairs as f64
        }
    }

    /// Edge-list export: a JSON header line, then `a<TAB>b<TAB>weight` rows.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header = serde_json::json!({
            "as_of_year": self.as_of_year,
            "node_count": self.node_count(),
            "edge_count": self.edge_count(),
        });
        writeln!(w, "{header}")?;
        for (a, b, weight) in self.edges() {
            writeln!(w, "{a}\t{b}\t{weight}")?;
        }
        Ok(())
    }

    /// Reads the edge-list export back. Isolated nodes are not recoverable.
    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty edge list".into()))?
            .map_err(|e| Error::io("<edge list>", e))?;
        let header: serde_json::Value = serde_json::from_str(&header_line)?;
        let year = header["as_of_year"]
            .as_i64()
            .ok_or_else(|| Error::InvalidInput("header lacks as_of_year".into()))?;
        let mut edges = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io("<edge list>", e))?;
            let mut parts = line.split('\t');
            let (Some(a), Some(b), Some(w), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
                return Err(Error::InvalidLine {
                    line: i + 2,
                    message: "expected three tab-separated fields".into(),
                });
            };
            let w: u32 = w.parse().map_err(|_| Error::InvalidLine {
                line: i + 2,
                message: format!("bad weight '{w}'"),
            })?;
            edges.push((a.to_string(), b.to_string(), w));
        }
        Self::from_edges(year as i32, Vec::<String>::new(), &edges)
    }
}

/// One snapshot per year in `first_year..=last_year`; each aggregates all
/// team co-appearances in movies released in or before that year.
pub fn build_snapshots(
    corpus: &Corpus,
    first_year: i32,
    last_year: i32,
    team_size: usize,
) -> Result<Vec<CollabSnapshot>> {
    if first_year > last_year {
        return Err(Error::InvalidInput(format!(
            "first_year {first_year} > last_year {last_year}"
        )));
    }
    let mut nodes: BTreeSet<String> = BTreeSet::new();
    let mut weights: BTreeMap<(String, String), u32> = BTreeMap::new();
    let add = |m: &crate::corpus::MovieRecord,
               nodes: &mut BTreeSet<String>,
               weights: &mut BTreeMap<(String, String), u32>| {
        let team = m.team(team_size);
        for (i, a) in team.iter().enumerate() {
            nodes.insert(a.clone());
            for b in &team[i + 1..] {
                let key = if a < b {
                    (a.clone(), b.clone())
                } else {
                    (b.clone(), a.clone())
                };
                *weights.entry(key).or_insert(0) += 1;
            }
        }
    };
    for m in corpus.movies().iter().filter(|m| m.year <= first_year) {
        add(m, &mut nodes, &mut weights);
    }
    let mut out = Vec::with_capacity((last_year - first_year + 1) as usize);
    out.push(CollabSnapshot::assemble(first_year, nodes.clone(), &weights));
    for year in first_year + 1..=last_year {
        for &i in corpus.movies_in_year(year) {
            add(&corpus.movies()[i], &mut nodes, &mut weights);
        }
        out.push(CollabSnapshot::assemble(year, nodes.clone(), &weights));
    }
    Ok(out)
}

/// Yearly snapshots over a whole corpus, addressable by any year.
#[derive(Debug, Clone)]
pub struct SnapshotSet {
    first_year: i32,
    snapshots: Vec<CollabSnapshot>,
    empty: CollabSnapshot,
    pub team_size: usize,
}

impl SnapshotSet {
    /// Covers the year before the earliest movie through the latest one.
    pub fn build(corpus: &Corpus, team_size: usize, mode: BetweennessMode) -> Result<Self> {
        let (lo, hi) = corpus.year_range().unwrap_or((2000, 2000));
        let snapshots = build_snapshots(corpus, lo - 1, hi, team_size)?
            .into_iter()
            .map(|s| s.with_betweenness_mode(mode))
            .collect();
        Ok(SnapshotSet {
            first_year: lo - 1,
            snapshots,
            empty: CollabSnapshot::assemble(lo - 2, BTreeSet::new(), &BTreeMap::new()),
            team_size,
        })
    }

    /// The network of all movies released in or before `year`.
    pub fn as_of(&self, year: i32) -> &CollabSnapshot {
        if year < self.first_year {
            return &self.empty;
        }
        let i = ((year - self.first_year) as usize).min(self.snapshots.len() - 1);
        &self.snapshots[i]
    }

    pub fn snapshots(&self) -> &[CollabSnapshot] {
        &self.snapshots
    }
}
