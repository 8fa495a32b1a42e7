//! Multi-class LogitBoost over weighted least-squares regression stumps.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::binning::Binned;
use super::logistic::softmax_in_place;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogitBoostConfig {
    pub iterations: usize,
    pub shrinkage: f64,
    /// Clamp on the working response.
    pub z_max: f64,
    pub max_bins: usize,
}

impl Default for LogitBoostConfig {
    fn default() -> Self {
        LogitBoostConfig {
            iterations: 100,
            shrinkage: 1.0,
            z_max: 3.0,
            max_bins: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub left: f64,
    pub right: f64,
}

impl Stump {
    pub fn eval(&self, x: &[f64]) -> f64 {
        if x[self.feature] <= self.threshold {
            self.left
        } else {
            self.right
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitBoost {
    pub n_classes: usize,
    /// `rounds[m][c]`: the centered stump added to class `c` in round `m`.
    pub rounds: Vec<Vec<Stump>>,
}

impl LogitBoost {
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; self.n_classes];
        for round in &self.rounds {
            for (fc, s) in f.iter_mut().zip(round) {
                *fc += s.eval(x);
            }
        }
        f
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut f = self.scores(x);
        softmax_in_place(&mut f);
        f
    }
}

fn bin_of(binned: &Binned, s: &Stump) -> usize {
    binned.thresholds[s.feature].partition_point(|&t| t < s.threshold)
}

/// Weighted least-squares stump; a constant fit when no split helps.
fn fit_stump(binned: &Binned, z: &[f64], w: &[f64]) -> (usize, usize, f64, f64) {
    let sw: f64 = w.iter().sum();
    let swz: f64 = w.iter().zip(z).map(|(a, b)| a * b).sum();
    let mean = swz / sw;
    let mut best = (0, usize::MAX, mean, mean);
    let mut best_gain = 1e-12 * sw.max(1.0);
    let mut hw = Vec::new();
    let mut hz = Vec::new();
    for (j, codes) in binned.codes.iter().enumerate() {
        let nb = binned.n_bins(j);
        if nb < 2 {
            continue;
        }
        hw.clear();
        hw.resize(nb, 0.0);
        hz.clear();
        hz.resize(nb, 0.0);
        for (i, &b) in codes.iter().enumerate() {
            hw[b as usize] += w[i];
            hz[b as usize] += w[i] * z[i];
        }
        let (mut lw, mut lz) = (0.0, 0.0);
        for b in 0..nb - 1 {
            lw += hw[b];
            lz += hz[b];
            let (rw, rz) = (sw - lw, swz - lz);
            if lw <= 0.0 || rw <= 0.0 {
                continue;
            }
            // Reduction in weighted squared error versus the constant fit.
            let gain = lz * lz / lw + rz * rz / rw - swz * swz / sw;
            if gain > best_gain {
                best_gain = gain;
                best = (j, b, lz / lw, rz / rw);
            }
        }
    }
    best
}

pub fn fit_logitboost(x: ArrayView2<f64>, y: &[usize], k: usize, cfg: &LogitBoostConfig) -> LogitBoost {
    let n = x.nrows();
    let binned = Binned::new(x, cfg.max_bins);
    let kf = k as f64;
    let mut f = vec![vec![0.0; k]; n];
    let mut p = vec![vec![1.0 / kf; k]; n];
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut rounds = Vec::with_capacity(cfg.iterations);
    // The class-mean centering of each round cancels in the softmax, so only
    // the (K - 1) / K scale is applied.
    let scale = cfg.shrinkage * (kf - 1.0) / kf;
    for _ in 0..cfg.iterations {
        let mut round = Vec::with_capacity(k);
        for c in 0..k {
            for i in 0..n {
                let pc = p[i][c];
                let target = if y[i] == c { 1.0 } else { 0.0 };
                let wi = (pc * (1.0 - pc)).max(1e-24);
                z[i] = ((target - pc) / wi).clamp(-cfg.z_max, cfg.z_max);
                w[i] = wi;
            }
            let (j, b, left, right) = fit_stump(&binned, &z, &w);
            let threshold = if b == usize::MAX {
                f64::INFINITY
            } else {
                binned.thresholds[j][b]
            };
            round.push(Stump {
                feature: j,
                threshold,
                left: scale * left,
                right: scale * right,
            });
        }
        let bins: Vec<usize> = round.iter().map(|s| bin_of(&binned, s)).collect();
        for i in 0..n {
            for (c, s) in round.iter().enumerate() {
                let left = s.threshold == f64::INFINITY || binned.codes[s.feature][i] as usize <= bins[c];
                f[i][c] += if left { s.left } else { s.right };
            }
            p[i].copy_from_slice(&f[i]);
            softmax_in_place(&mut p[i]);
        }
        rounds.push(round);
    }
    LogitBoost { n_classes: k, rounds }
}
