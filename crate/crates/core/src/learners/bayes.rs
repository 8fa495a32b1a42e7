//! Gaussian naive Bayes.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::logistic::softmax_in_place;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NaiveBayesConfig {
    /// Added to every variance, as a share of the largest column variance.
    pub var_smoothing: f64,
}

impl Default for NaiveBayesConfig {
    fn default() -> Self {
        NaiveBayesConfig { var_smoothing: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    /// Log prior per class; `-inf` for classes absent from training.
    pub log_prior: Vec<f64>,
    pub means: Array2<f64>,
    pub vars: Array2<f64>,
}

impl NaiveBayes {
    pub fn log_joint(&self, x: &[f64]) -> Vec<f64> {
        self.log_prior
            .iter()
            .enumerate()
            .map(|(c, &lp)| {
                if lp == f64::NEG_INFINITY {
                    return lp;
                }
                let mut s = lp;
                for (j, &v) in x.iter().enumerate() {
                    let var = self.vars[[c, j]];
                    let diff = v - self.means[[c, j]];
                    s -= 0.5 * ((2.0 * std::f64::consts::PI * var).ln() + diff * diff / var);
                }
                s
            })
            .collect()
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut s = self.log_joint(x);
        softmax_in_place(&mut s);
        s
    }
}

pub fn fit_naive_bayes(x: ArrayView2<f64>, y: &[usize], k: usize, cfg: &NaiveBayesConfig) -> NaiveBayes {
    let (n, d) = x.dim();
    let mut counts = vec![0.0; k];
    let mut means = Array2::<f64>::zeros((k, d));
    for (i, &c) in y.iter().enumerate() {
        counts[c] += 1.0;
        means.row_mut(c).scaled_add(1.0, &x.row(i));
    }
    for c in 0..k {
        if counts[c] > 0.0 {
            means.row_mut(c).mapv_inplace(|v| v / counts[c]);
        }
    }
    let mut vars = Array2::<f64>::zeros((k, d));
    for (i, &c) in y.iter().enumerate() {
        for j in 0..d {
            let diff = x[[i, j]] - means[[c, j]];
            vars[[c, j]] += diff * diff;
        }
    }
    let max_var = (0..d)
        .map(|j| {
            let col = x.column(j);
            let m = col.sum() / n as f64;
            col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64
        })
        .fold(0.0, f64::max);
    let eps = cfg.var_smoothing * max_var.max(1e-300) + f64::MIN_POSITIVE;
    for c in 0..k {
        for j in 0..d {
            vars[[c, j]] = if counts[c] > 0.0 { vars[[c, j]] / counts[c] } else { 1.0 } + eps;
        }
    }
    let log_prior = counts.iter().map(|&c| (c / n as f64).ln()).collect();
    NaiveBayes { log_prior, means, vars }
}
