//! Information-gain classification trees with optional reduced-error pruning.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::binning::Binned;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    /// Minimum rows on each side of a split.
    pub min_leaf: usize,
    /// 0 means unlimited.
    pub max_depth: usize,
    pub prune: bool,
    /// Share of training rows held out for pruning.
    pub prune_fraction: f64,
    pub max_bins: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            min_leaf: 2,
            max_depth: 0,
            prune: true,
            prune_fraction: 1.0 / 3.0,
            max_bins: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Class distribution of the growing rows that reached this node.
    pub dist: Vec<f64>,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_classes: usize,
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        self.leaf(x).dist.clone()
    }

    pub(crate) fn leaf(&self, x: &[f64]) -> &Node {
        let mut node = &self.nodes[0];
        while let Some(s) = &node.split {
            node = &self.nodes[if x[s.feature] <= s.threshold { s.left } else { s.right }];
        }
        node
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.split.is_none()).count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: usize) -> usize {
            match &t.nodes[i].split {
                None => 0,
                Some(s) => 1 + go(t, s.left).max(go(t, s.right)),
            }
        }
        go(self, 0)
    }
}

pub(crate) struct GrowParams {
    pub min_leaf: usize,
    pub max_depth: usize,
    /// Features drawn per node; `None` scans all.
    pub max_features: Option<usize>,
}

/// Class counts per node kept alongside the tree while growing.
struct Grower<'a> {
    binned: &'a Binned,
    y: &'a [usize],
    k: usize,
    params: &'a GrowParams,
    hist: Vec<f64>,
    features: Vec<usize>,
}

fn n_log_n(c: f64) -> f64 {
    if c > 0.0 {
        c * c.ln()
    } else {
        0.0
    }
}

/// n * entropy(counts) in nats.
fn weighted_entropy(counts: &[f64]) -> f64 {
    let n: f64 = counts.iter().sum();
    n_log_n(n) - counts.iter().map(|&c| n_log_n(c)).sum::<f64>()
}

impl Grower<'_> {
    fn counts(&self, rows: &[usize]) -> Vec<f64> {
        let mut c = vec![0.0; self.k];
        for &r in rows {
            c[self.y[r]] += 1.0;
        }
        c
    }

    /// Best (feature, bin) by information gain.
    fn best_split(&mut self, rows: &[usize], parent: &[f64], rng: Option<&mut ChaCha8Rng>) -> Option<(usize, usize)> {
        let d = self.binned.codes.len();
        let candidates: &[usize] = match (self.params.max_features, rng) {
            (Some(m), Some(rng)) if m < d => {
                self.features.partial_shuffle(rng, m);
                let mut chosen = self.features[..m].to_vec();
                chosen.sort_unstable();
                self.features[..m].copy_from_slice(&chosen);
                &self.features[..m]
            }
            _ => &self.features[..],
        };
        let candidates = candidates.to_vec();
        let parent_h = weighted_entropy(parent);
        let n = rows.len() as f64;
        let min_leaf = self.params.min_leaf.max(1) as f64;
        let k = self.k;
        let mut best: Option<(usize, usize, f64)> = None;
        for j in candidates {
            let nb = self.binned.n_bins(j);
            if nb < 2 {
                continue;
            }
            let codes = &self.binned.codes[j];
            self.hist.clear();
            self.hist.resize(nb * k, 0.0);
            for &r in rows {
                self.hist[codes[r] as usize * k + self.y[r]] += 1.0;
            }
            let mut left = vec![0.0; k];
            let mut right = parent.to_vec();
            let mut nl = 0.0;
            for b in 0..nb - 1 {
                let mut moved = 0.0;
                for c in 0..k {
                    let h = self.hist[b * k + c];
                    left[c] += h;
                    right[c] -= h;
                    moved += h;
                }
                if moved == 0.0 {
                    continue;
                }
                nl += moved;
                if nl < min_leaf {
                    continue;
                }
                if n - nl < min_leaf {
                    break;
                }
                let gain = parent_h - weighted_entropy(&left) - weighted_entropy(&right);
                if gain > 1e-9 && best.is_none_or(|(_, _, g)| gain > g + 1e-12) {
                    best = Some((j, b, gain));
                }
            }
        }
        best.map(|(j, b, _)| (j, b))
    }
}

fn normalize(counts: &[f64]) -> Vec<f64> {
    let n: f64 = counts.iter().sum();
    if n == 0.0 {
        return vec![1.0 / counts.len() as f64; counts.len()];
    }
    counts.iter().map(|c| c / n).collect()
}

pub(crate) fn grow(
    binned: &Binned,
    y: &[usize],
    k: usize,
    rows: Vec<usize>,
    params: &GrowParams,
    mut rng: Option<&mut ChaCha8Rng>,
) -> DecisionTree {
    let mut g = Grower {
        binned,
        y,
        k,
        params,
        hist: Vec::new(),
        features: (0..binned.codes.len()).collect(),
    };
    let mut nodes: Vec<Node> = Vec::new();
    // (node index, rows, depth)
    let root_counts = g.counts(&rows);
    nodes.push(Node {
        dist: normalize(&root_counts),
        split: None,
    });
    let mut stack = vec![(0usize, rows, root_counts, 0usize)];
    while let Some((id, rows, counts, depth)) = stack.pop() {
        let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
        if pure || (params.max_depth > 0 && depth >= params.max_depth) || rows.len() < 2 * params.min_leaf.max(1) {
            continue;
        }
        let Some((j, b)) = g.best_split(&rows, &counts, rng.as_deref_mut()) else {
            continue;
        };
        let codes = &binned.codes[j];
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| codes[i] as usize <= b);
        let (lc, rc) = (g.counts(&l), g.counts(&r));
        let li = nodes.len();
        nodes.push(Node {
            dist: normalize(&lc),
            split: None,
        });
        nodes.push(Node {
            dist: normalize(&rc),
            split: None,
        });
        nodes[id].split = Some(Split {
            feature: j,
            threshold: binned.thresholds[j][b],
            left: li,
            right: li + 1,
        });
        stack.push((li + 1, r, rc, depth + 1));
        stack.push((li, l, lc, depth + 1));
    }
    DecisionTree { n_classes: k, nodes }
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Collapses every subtree whose held-out error is no better than a leaf's.
pub(crate) fn reduced_error_prune(tree: &mut DecisionTree, x: ArrayView2<f64>, y: &[usize], rows: &[usize]) {
    let n = tree.nodes.len();
    let mut leaf_err = vec![0.0; n];
    for &r in rows {
        let mut i = 0;
        loop {
            let node = &tree.nodes[i];
            if argmax(&node.dist) != y[r] {
                leaf_err[i] += 1.0;
            }
            match &node.split {
                Some(s) => {
                    i = if x[[r, s.feature]] <= s.threshold {
                        s.left
                    } else {
                        s.right
                    }
                }
                None => break,
            }
        }
    }
    // Children always follow their parent, so a reverse scan is bottom-up.
    let mut subtree_err = leaf_err.clone();
    for i in (0..n).rev() {
        if let Some(s) = &tree.nodes[i].split {
            let below = subtree_err[s.left] + subtree_err[s.right];
            if leaf_err[i] <= below {
                tree.nodes[i].split = None;
            } else {
                subtree_err[i] = below;
            }
        }
    }
    compact(tree);
}

fn compact(tree: &mut DecisionTree) {
    let mut out = Vec::with_capacity(tree.nodes.len());
    let mut queue = std::collections::VecDeque::from([(0usize, usize::MAX, false)]);
    while let Some((old, parent, is_right)) = queue.pop_front() {
        let id = out.len();
        let node = tree.nodes[old].clone();
        if let Some(s) = &node.split {
            queue.push_back((s.left, id, false));
            queue.push_back((s.right, id, true));
        }
        out.push(node);
        if parent != usize::MAX {
            let s: &mut Split = out[parent].split.as_mut().expect("parent is a split");
            if is_right {
                s.right = id;
            } else {
                s.left = id;
            }
        }
    }
    tree.nodes = out;
}

/// Grows on a random share of rows and prunes against the rest.
pub fn fit_tree(x: ArrayView2<f64>, y: &[usize], k: usize, cfg: &TreeConfig, rng: &mut ChaCha8Rng) -> DecisionTree {
    let n = x.nrows();
    let mut rows: Vec<usize> = (0..n).collect();
    let n_prune = if cfg.prune {
        ((n as f64 * cfg.prune_fraction).round() as usize).min(n.saturating_sub(2))
    } else {
        0
    };
    if n_prune > 0 {
        rows.shuffle(rng);
    }
    let (prune_rows, grow_rows) = rows.split_at(n_prune);
    let mut grow_rows = grow_rows.to_vec();
    grow_rows.sort_unstable();
    let binned = Binned::new(x, cfg.max_bins);
    let params = GrowParams {
        min_leaf: cfg.min_leaf,
        max_depth: cfg.max_depth,
        max_features: None,
    };
    let mut tree = grow(&binned, y, k, grow_rows, &params, None);
    if n_prune > 0 {
        reduced_error_prune(&mut tree, x, y, prune_rows);
    }
    tree
}
