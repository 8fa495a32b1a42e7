//! Unweighted graph kernels over adjacency lists with sorted neighbor ids.

use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::snapshot::NodeId;

pub(crate) const UNREACHABLE: u16 = u16::MAX;

/// Brandes single-source accumulation; adds dependencies of `s` into `out`.
fn accumulate(g: &[Vec<NodeId>], s: usize, out: &mut [f64], scratch: &mut Scratch) {
    let Scratch {
        stack,
        preds,
        sigma,
        dist,
        delta,
        queue,
    } = scratch;
    stack.clear();
    for p in preds.iter_mut() {
        p.clear();
    }
    sigma.fill(0.0);
    dist.fill(-1);
    delta.fill(0.0);
    sigma[s] = 1.0;
    dist[s] = 0;
    queue.clear();
    queue.push_back(s);
    while let Some(v) = queue.pop_front() {
        stack.push(v);
        for &w in &g[v] {
            let w = w as usize;
            if dist[w] < 0 {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
            if dist[w] == dist[v] + 1 {
                sigma[w] += sigma[v];
                preds[w].push(v);
            }
        }
    }
    while let Some(w) = stack.pop() {
        for &v in &preds[w] {
            delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
        }
        if w != s {
            out[w] += delta[w];
        }
    }
}

struct Scratch {
    stack: Vec<usize>,
    preds: Vec<Vec<usize>>,
    sigma: Vec<f64>,
    dist: Vec<i64>,
    delta: Vec<f64>,
    queue: VecDeque<usize>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            stack: Vec::with_capacity(n),
            preds: vec![Vec::new(); n],
            sigma: vec![0.0; n],
            dist: vec![-1; n],
            delta: vec![0.0; n],
            queue: VecDeque::with_capacity(n),
        }
    }
}

/// Exact unnormalized betweenness; each unordered (s, t) pair counted once.
pub(crate) fn brandes(g: &[Vec<NodeId>]) -> Vec<f64> {
    let n = g.len();
    let mut out = vec![0.0; n];
    let mut scratch = Scratch::new(n);
    for s in 0..n {
        accumulate(g, s, &mut out, &mut scratch);
    }
    for b in &mut out {
        *b /= 2.0;
    }
    out
}

/// Pivot-sampled estimate of `brandes`, scaled by n / pivots.
pub(crate) fn brandes_sampled(g: &[Vec<NodeId>], pivots: usize, seed: u64) -> Vec<f64> {
    let n = g.len();
    if pivots == 0 || pivots >= n {
        return brandes(g);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0; n];
    let mut scratch = Scratch::new(n);
    for s in sample(&mut rng, n, pivots).into_iter() {
        accumulate(g, s, &mut out, &mut scratch);
    }
    let scale = n as f64 / pivots as f64 / 2.0;
    for b in &mut out {
        *b *= scale;
    }
    out
}

fn sorted_contains(row: &[NodeId], x: NodeId) -> bool {
    row.binary_search(&x).is_ok()
}

/// Fraction of neighbor pairs that are adjacent; 0 for degree < 2.
pub(crate) fn local_clustering(g: &[Vec<NodeId>], v: usize) -> f64 {
    let nbrs = &g[v];
    let d = nbrs.len();
    if d < 2 {
        return 0.0;
    }
    let mut links = 0usize;
    for (i, &a) in nbrs.iter().enumerate() {
        let row = &g[a as usize];
        links += nbrs[i + 1..].iter().filter(|&&b| sorted_contains(row, b)).count();
    }
    2.0 * links as f64 / (d * (d - 1)) as f64
}

/// BFS hop counts from `sources` (multi-source), `UNREACHABLE` elsewhere.
pub(crate) fn bfs_from(g: &[Vec<NodeId>], sources: &[usize], dist: &mut Vec<u16>) {
    dist.clear();
    dist.resize(g.len(), UNREACHABLE);
    let mut queue = VecDeque::new();
    for &s in sources {
        if dist[s] != 0 {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        let next = dist[v] + 1;
        for &w in &g[v] {
            let w = w as usize;
            if dist[w] == UNREACHABLE {
                dist[w] = next;
                queue.push_back(w);
            }
        }
    }
}

/// All-pairs hop table (row-major) plus the sum and count over connected
/// ordered pairs.
pub(crate) fn distance_table(g: &[Vec<NodeId>]) -> (Vec<u16>, f64, u64) {
    let n = g.len();
    let mut table = vec![UNREACHABLE; n * n];
    let mut sum = 0u64;
    let mut pairs = 0u64;
    let mut dist = Vec::with_capacity(n);
    for s in 0..n {
        bfs_from(g, &[s], &mut dist);
        for (t, &d) in dist.iter().enumerate() {
            if t != s && d != UNREACHABLE {
                sum += d as u64;
                pairs += 1;
            }
        }
        table[s * n..(s + 1) * n].copy_from_slice(&dist);
    }
    (table, sum as f64, pairs)
}

/// Sum and count of hop distances over connected ordered pairs.
pub(crate) fn path_totals(g: &[Vec<NodeId>]) -> (f64, u64) {
    let mut sum = 0u64;
    let mut pairs = 0u64;
    let mut dist = Vec::with_capacity(g.len());
    for s in 0..g.len() {
        bfs_from(g, &[s], &mut dist);
        for (t, &d) in dist.iter().enumerate() {
            if t != s && d != UNREACHABLE {
                sum += d as u64;
                pairs += 1;
            }
        }
    }
    (sum as f64, pairs)
}
