//! L2-regularized multinomial logistic regression fit by accelerated gradient descent.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::Standardizer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticConfig {
    /// Penalty on the squared weights of standardized columns.
    pub lambda: f64,
    pub max_iter: usize,
    /// Stop when the gradient's max-norm falls below this.
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            lambda: 1e-3,
            max_iter: 500,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    pub scaler: Standardizer,
    /// `weights[[c, j]]` on standardized column `j`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    z.iter_mut().for_each(|v| *v /= s);
}

impl Logistic {
    /// Per-class linear scores before the softmax.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let z = self.scaler.transform_row(x);
        self.weights
            .rows()
            .into_iter()
            .zip(&self.bias)
            .map(|(w, b)| b + w.iter().zip(&z).map(|(a, c)| a * c).sum::<f64>())
            .collect()
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut s = self.scores(x);
        softmax_in_place(&mut s);
        s
    }
}

/// Largest eigenvalue of `a` (symmetric PSD) by power iteration.
fn top_eigenvalue(a: &Array2<f64>) -> f64 {
    let d = a.nrows();
    let mut v = Array1::from_elem(d, 1.0 / (d as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..100 {
        let w = a.dot(&v);
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = v.dot(&w);
        v = w / norm;
    }
    lambda.max(a.diag().iter().cloned().fold(0.0, f64::max))
}

pub fn fit_logistic(x: ArrayView2<f64>, y: &[usize], k: usize, cfg: &LogisticConfig) -> Logistic {
    let scaler = Standardizer::fit(x);
    let z = scaler.transform(x);
    let (n, d) = z.dim();
    let nf = n as f64;
    let mut onehot = Array2::<f64>::zeros((n, k));
    for (i, &c) in y.iter().enumerate() {
        onehot[[i, c]] = 1.0;
    }
    // Lipschitz bound of the mean cross-entropy gradient, bias column included.
    let mut with_bias = Array2::<f64>::ones((n, d + 1));
    with_bias.slice_mut(ndarray::s![.., ..d]).assign(&z);
    let gram = with_bias.t().dot(&with_bias) / nf;
    let step = 1.0 / (0.5 * top_eigenvalue(&gram) + cfg.lambda);

    // Parameters as (d + 1) x k, last row the bias.
    let mut theta = Array2::<f64>::zeros((d + 1, k));
    let mut prev = theta.clone();
    let mut t_k = 1.0f64;
    for it in 0..cfg.max_iter {
        let t_next = (1.0 + (1.0 + 4.0 * t_k * t_k).sqrt()) / 2.0;
        let look = &theta + &((&theta - &prev) * ((t_k - 1.0) / t_next));
        let grad = gradient(&with_bias, &onehot, &look, cfg.lambda, d);
        prev = theta;
        theta = &look - &(&grad * step);
        t_k = t_next;
        if it % 25 != 24 {
            continue;
        }
        let g_now = gradient(&with_bias, &onehot, &theta, cfg.lambda, d);
        if g_now.iter().fold(0.0f64, |m, v| m.max(v.abs())) < cfg.tol {
            break;
        }
    }
    let weights = theta.slice(ndarray::s![..d, ..]).t().to_owned();
    let bias = theta.row(d).to_owned();
    Logistic { scaler, weights, bias }
}

fn gradient(xb: &Array2<f64>, onehot: &Array2<f64>, theta: &Array2<f64>, lambda: f64, d: usize) -> Array2<f64> {
    let n = xb.nrows() as f64;
    let mut p = xb.dot(theta);
    for mut row in p.axis_iter_mut(Axis(0)) {
        softmax_in_place(row.as_slice_mut().expect("contiguous row"));
    }
    p -= onehot;
    let mut g = xb.t().dot(&p) / n;
    let mut w = g.slice_mut(ndarray::s![..d, ..]);
    w.scaled_add(lambda, &theta.slice(ndarray::s![..d, ..]));
    g
}
