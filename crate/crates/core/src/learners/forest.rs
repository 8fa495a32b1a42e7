//! Bagged trees with per-node feature subsampling.

use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::binning::Binned;
use super::tree::{grow, DecisionTree, GrowParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features drawn per node; 0 means floor(sqrt(d)).
    pub max_features: usize,
    pub min_leaf: usize,
    /// 0 means unlimited.
    pub max_depth: usize,
    pub max_bins: usize,
    /// Fit a probability sharpening exponent on the out-of-bag estimates.
    pub calibrate: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 200,
            max_features: 0,
            min_leaf: 1,
            max_depth: 0,
            max_bins: 256,
            calibrate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub n_classes: usize,
    pub trees: Vec<DecisionTree>,
    /// Exponent applied to the averaged distribution before renormalizing.
    #[serde(default = "unit")]
    pub sharpen: f64,
}

fn unit() -> f64 {
    1.0
}

impl RandomForest {
    /// Mean of the trees' leaf distributions, sharpened.
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.n_classes];
        for t in &self.trees {
            for (acc, v) in p.iter_mut().zip(&t.leaf(x).dist) {
                *acc += v;
            }
        }
        let n = self.trees.len() as f64;
        p.iter_mut().for_each(|v| *v /= n);
        sharpen(&mut p, self.sharpen);
        p
    }
}

/// Raises `p` to the power `s` and renormalizes; `s = 1` is the identity.
pub fn sharpen(p: &mut [f64], s: f64) {
    if s == 1.0 {
        return;
    }
    p.iter_mut().for_each(|v| *v = v.powf(s));
    let z: f64 = p.iter().sum();
    if z > 0.0 {
        p.iter_mut().for_each(|v| *v /= z);
    }
}

/// Exponent in [0.5, 5] minimizing out-of-bag log loss.
fn fit_sharpen(oob: &[Option<Vec<f64>>], y: &[usize]) -> f64 {
    let rows: Vec<(&Vec<f64>, usize)> = oob
        .iter()
        .zip(y)
        .filter_map(|(p, &c)| p.as_ref().map(|p| (p, c)))
        .collect();
    if rows.len() < 10 {
        return 1.0;
    }
    let loss = |s: f64| -> f64 {
        rows.iter()
            .map(|(p, c)| {
                let mut q = (*p).clone();
                q.iter_mut().for_each(|v| *v = v.max(1e-3));
                sharpen(&mut q, s);
                -q[*c].ln()
            })
            .sum()
    };
    let mut best = (1.0, loss(1.0));
    for i in 0..=90 {
        let s = 0.5 + 0.05 * i as f64;
        let l = loss(s);
        if l < best.1 {
            best = (s, l);
        }
    }
    best.0
}

/// The generator for tree `index`: its own ChaCha stream under `seed`.
pub fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub struct ForestFit {
    pub forest: RandomForest,
    /// Out-of-bag class distribution per training row; `None` if the row was
    /// in every bootstrap sample.
    pub oob: Vec<Option<Vec<f64>>>,
}

pub fn fit_forest(x: ArrayView2<f64>, y: &[usize], k: usize, cfg: &ForestConfig, seed: u64) -> ForestFit {
    let (n, d) = x.dim();
    let binned = Binned::new(x, cfg.max_bins);
    let m = if cfg.max_features == 0 {
        ((d as f64).sqrt().floor() as usize).max(1)
    } else {
        cfg.max_features.min(d)
    };
    let params = GrowParams {
        min_leaf: cfg.min_leaf,
        max_depth: cfg.max_depth,
        max_features: Some(m),
    };
    let mut oob_sum = vec![vec![0.0; k]; n];
    let mut oob_hits = vec![0usize; n];
    let mut trees = Vec::with_capacity(cfg.n_trees);
    let mut in_bag = vec![false; n];
    for t in 0..cfg.n_trees.max(1) {
        let mut rng = tree_rng(seed, t);
        let mut rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        rows.sort_unstable();
        in_bag.iter_mut().for_each(|b| *b = false);
        for &r in &rows {
            in_bag[r] = true;
        }
        let tree = grow(&binned, y, k, rows, &params, Some(&mut rng));
        for i in (0..n).filter(|&i| !in_bag[i]) {
            let xr: Vec<f64> = x.row(i).to_vec();
            for (acc, v) in oob_sum[i].iter_mut().zip(&tree.leaf(&xr).dist) {
                *acc += v;
            }
            oob_hits[i] += 1;
        }
        trees.push(tree);
    }
    let oob: Vec<Option<Vec<f64>>> = oob_sum
        .into_iter()
        .zip(oob_hits)
        .map(|(s, h)| (h > 0).then(|| s.into_iter().map(|v| v / h as f64).collect()))
        .collect();
    let sharpen = if cfg.calibrate { fit_sharpen(&oob, y) } else { 1.0 };
    ForestFit {
        forest: RandomForest {
            n_classes: k,
            trees,
            sharpen,
        },
        oob,
    }
}
