//! Brute-force network measures on dense adjacency matrices: Floyd-Warshall
//! distances, explicit shortest-path enumeration and triangle counting.

use mias_core::collab::CollabSnapshot;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const INF: usize = usize::MAX / 4;

pub struct Dense {
    pub names: Vec<String>,
    pub adj: Vec<Vec<bool>>,
}

impl Dense {
    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn floyd(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut d = vec![vec![INF; n]; n];
        for i in 0..n {
            d[i][i] = 0;
            for j in 0..n {
                if self.adj[i][j] {
                    d[i][j] = 1;
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d
    }

    pub fn avg_path(&self) -> f64 {
        let d = self.floyd();
        let (mut sum, mut pairs) = (0usize, 0usize);
        for i in 0..self.n() {
            for j in 0..self.n() {
                if i != j && d[i][j] < INF {
                    sum += d[i][j];
                    pairs += 1;
                }
            }
        }
        if pairs == 0 {
            0.0
        } else {
            sum as f64 / pairs as f64
        }
    }

    pub fn local_clustering(&self, v: usize) -> f64 {
        let nb: Vec<usize> = (0..self.n()).filter(|&u| self.adj[v][u]).collect();
        if nb.len() < 2 {
            return 0.0;
        }
        let mut tri = 0;
        for a in 0..nb.len() {
            for b in a + 1..nb.len() {
                if self.adj[nb[a]][nb[b]] {
                    tri += 1;
                }
            }
        }
        tri as f64 / (nb.len() * (nb.len() - 1) / 2) as f64
    }

    pub fn avg_clustering(&self) -> f64 {
        if self.n() == 0 {
            return 0.0;
        }
        (0..self.n()).map(|v| self.local_clustering(v)).sum::<f64>() / self.n() as f64
    }

    /// Every shortest s-t path, enumerated by depth-first search.
    pub fn shortest_paths(&self, s: usize, t: usize, d: &[Vec<usize>]) -> Vec<Vec<usize>> {
        fn go(g: &Dense, v: usize, t: usize, left: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if v == t && left == 0 {
                out.push(path.clone());
                return;
            }
            if left == 0 {
                return;
            }
            for w in 0..g.n() {
                if g.adj[v][w] && !path.contains(&w) {
                    path.push(w);
                    go(g, w, t, left - 1, path, out);
                    path.pop();
                }
            }
        }
        let mut out = Vec::new();
        if d[s][t] < INF {
            go(self, s, t, d[s][t], &mut vec![s], &mut out);
        }
        out
    }

    pub fn betweenness(&self) -> Vec<f64> {
        let d = self.floyd();
        let mut b = vec![0.0; self.n()];
        for s in 0..self.n() {
            for t in s + 1..self.n() {
                let paths = self.shortest_paths(s, t, &d);
                if paths.is_empty() {
                    continue;
                }
                for p in &paths {
                    for &v in &p[1..p.len() - 1] {
                        b[v] += 1.0 / paths.len() as f64;
                    }
                }
            }
        }
        b
    }

    pub fn with_clique(&self, members: &[String]) -> Dense {
        let mut names = self.names.clone();
        for m in members {
            if !names.contains(m) {
                names.push(m.clone());
            }
        }
        let n = names.len();
        let mut adj = vec![vec![false; n]; n];
        for i in 0..self.n() {
            adj[i][..self.n()].copy_from_slice(&self.adj[i]);
        }
        let idx: Vec<usize> = members
            .iter()
            .map(|m| names.iter().position(|x| x == m).unwrap())
            .collect();
        for &a in &idx {
            for &b in &idx {
                if a != b {
                    adj[a][b] = true;
                }
            }
        }
        Dense { names, adj }
    }

    pub fn snapshot(&self) -> CollabSnapshot {
        let mut edges = Vec::new();
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                if self.adj[i][j] {
                    edges.push((self.names[i].clone(), self.names[j].clone(), 1));
                }
            }
        }
        CollabSnapshot::from_edges(2000, self.names.clone(), &edges).unwrap()
    }
}

pub fn random_graph(rng: &mut ChaCha8Rng) -> Dense {
    let n = rng.random_range(1..=10);
    let p: f64 = rng.random_range(0.1..0.7);
    let names: Vec<String> = (0..n).map(|i| format!("p{i:02}")).collect();
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                adj[i][j] = true;
                adj[j][i] = true;
            }
        }
    }
    Dense { names, adj }
}

pub fn random_team(rng: &mut ChaCha8Rng, g: &Dense) -> Vec<String> {
    let size = rng.random_range(2..=4);
    let mut team = Vec::new();
    while team.len() < size {
        let name = if rng.random_bool(0.2) || g.n() == 0 {
            format!("new{}", rng.random_range(0..3))
        } else {
            g.names[rng.random_range(0..g.n())].clone()
        };
        if !team.contains(&name) {
            team.push(name);
        }
    }
    team
}
