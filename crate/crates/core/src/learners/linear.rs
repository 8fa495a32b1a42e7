//! Penalized least squares on standardized columns: LASSO, ridge, and the
//! variance-inflation diagnostics that drive the LASSO penalty schedule.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::Standardizer;
use crate::error::{Error, Result};

/// A linear predictor kept in standardized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub scaler: Standardizer,
    /// Coefficients on standardized columns; zero for constant columns.
    pub standardized: Vec<f64>,
    /// Mean of the training target; the score at the column means.
    pub base: f64,
    pub lambda: f64,
}

impl LinearFit {
    /// Coefficients in the columns' original units.
    pub fn coefficients(&self) -> Vec<f64> {
        self.standardized
            .iter()
            .zip(&self.scaler.scales)
            .map(|(b, s)| if *s > 0.0 { b / s } else { 0.0 })
            .collect()
    }

    /// Intercept in original units.
    pub fn intercept(&self) -> f64 {
        self.base
            - self
                .coefficients()
                .iter()
                .zip(&self.scaler.means)
                .map(|(c, m)| c * m)
                .sum::<f64>()
    }

    /// Per-column `coefficient * standardized value`.
    pub fn contributions(&self, x: &[f64]) -> Vec<f64> {
        let z = self.scaler.transform_row(x);
        self.standardized.iter().zip(&z).map(|(b, v)| b * v).collect()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.base + self.contributions(x).iter().sum::<f64>()
    }

    pub fn nonzero(&self) -> Vec<usize> {
        (0..self.standardized.len())
            .filter(|&j| self.standardized[j] != 0.0)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LassoConfig {
    pub lambda: f64,
    /// Converged when no coefficient moves more than this in a sweep.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for LassoConfig {
    fn default() -> Self {
        LassoConfig {
            lambda: 0.01,
            tol: 1e-8,
            max_sweeps: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub fit: LinearFit,
    pub sweeps: usize,
    pub converged: bool,
    /// VIF of each surviving column among the survivors; NaN elsewhere.
    pub vif: Vec<f64>,
}

/// Standardized columns, column-major, plus the centered target.
struct Problem {
    n: f64,
    cols: Vec<Vec<f64>>,
    /// `||z_j||^2 / n`; zero for constant columns.
    norms: Vec<f64>,
    y: Vec<f64>,
    mean_y: f64,
}

impl Problem {
    fn new(x: ArrayView2<f64>, y: &[f64]) -> Result<(Self, Standardizer)> {
        let (n, p) = x.dim();
        if n < 2 {
            return Err(Error::InvalidInput("at least 2 rows required".into()));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: y.len(),
            });
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite value in regression input".into()));
        }
        let scaler = Standardizer::fit(x);
        let z = scaler.transform(x);
        let cols: Vec<Vec<f64>> = (0..p).map(|j| z.column(j).to_vec()).collect();
        let norms = cols
            .iter()
            .map(|c| c.iter().map(|v| v * v).sum::<f64>() / n as f64)
            .collect();
        let mean_y = y.iter().sum::<f64>() / n as f64;
        let y = y.iter().map(|v| v - mean_y).collect();
        Ok((
            Problem {
                n: n as f64,
                cols,
                norms,
                y,
                mean_y,
            },
            scaler,
        ))
    }

    fn residual(&self, beta: &[f64]) -> Vec<f64> {
        let mut r = self.y.clone();
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (ri, zi) in r.iter_mut().zip(&self.cols[j]) {
                    *ri -= b * zi;
                }
            }
        }
        r
    }

    fn objective(&self, beta: &[f64], lambda: f64) -> f64 {
        let r = self.residual(beta);
        r.iter().map(|v| v * v).sum::<f64>() / (2.0 * self.n) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    }

    /// Cyclic coordinate descent from `beta`.
    fn descend(&self, beta: &mut [f64], cfg: &LassoConfig) -> (usize, bool) {
        let mut r = self.residual(beta);
        for sweep in 1..=cfg.max_sweeps {
            let mut max_change = 0.0f64;
            for j in 0..beta.len() {
                let c = self.norms[j];
                if c == 0.0 {
                    continue;
                }
                let zj = &self.cols[j];
                let rho = zj.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / self.n + c * beta[j];
                let new = soft_threshold(rho, cfg.lambda) / c;
                let delta = new - beta[j];
                if delta != 0.0 {
                    for (ri, zi) in r.iter_mut().zip(zj) {
                        *ri -= delta * zi;
                    }
                    beta[j] = new;
                    max_change = max_change.max(delta.abs());
                }
            }
            if max_change < cfg.tol {
                return (sweep, true);
            }
        }
        (cfg.max_sweeps, false)
    }
}

pub fn soft_threshold(v: f64, lambda: f64) -> f64 {
    if v > lambda {
        v - lambda
    } else if v < -lambda {
        v + lambda
    } else {
        0.0
    }
}

/// Minimizes `(1/2n)||y - Z b||^2 + lambda ||b||_1` over standardized columns.
pub fn fit_lasso(x: ArrayView2<f64>, y: &[f64], cfg: &LassoConfig) -> Result<LassoFit> {
    let (problem, scaler) = Problem::new(x, y)?;
    let mut beta = vec![0.0; x.ncols()];
    Ok(lasso_from(&problem, scaler, &mut beta, cfg))
}

fn lasso_from(problem: &Problem, scaler: Standardizer, beta: &mut [f64], cfg: &LassoConfig) -> LassoFit {
    let (sweeps, converged) = problem.descend(beta, cfg);
    LassoFit {
        fit: LinearFit {
            scaler,
            standardized: beta.to_vec(),
            base: problem.mean_y,
            lambda: cfg.lambda,
        },
        sweeps,
        converged,
        vif: vec![f64::NAN; beta.len()],
    }
}

/// LASSO objective of a fit on the data it was trained on.
pub fn lasso_objective(x: ArrayView2<f64>, y: &[f64], fit: &LinearFit) -> Result<f64> {
    let (problem, _) = Problem::new(x, y)?;
    Ok(problem.objective(&fit.standardized, fit.lambda))
}

/// Smallest penalty at which every coefficient is zero.
pub fn lambda_max(x: ArrayView2<f64>, y: &[f64]) -> Result<f64> {
    let (p, _) = Problem::new(x, y)?;
    Ok(p.cols
        .iter()
        .map(|c| (c.iter().zip(&p.y).map(|(a, b)| a * b).sum::<f64>() / p.n).abs())
        .fold(0.0, f64::max))
}

/// Closed-form `(Z'Z + n lambda I)^-1 Z'y` over the non-constant columns.
pub fn fit_ridge(x: ArrayView2<f64>, y: &[f64], lambda: f64) -> Result<LinearFit> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidInput("ridge penalty must be nonnegative".into()));
    }
    let (problem, scaler) = Problem::new(x, y)?;
    let active: Vec<usize> = (0..problem.cols.len()).filter(|&j| problem.norms[j] > 0.0).collect();
    let m = active.len();
    let mut a = Array2::<f64>::zeros((m, m));
    let mut b = Array1::<f64>::zeros(m);
    for (ai, &i) in active.iter().enumerate() {
        b[ai] = dot(&problem.cols[i], &problem.y);
        for (aj, &j) in active.iter().enumerate().skip(ai) {
            let v = dot(&problem.cols[i], &problem.cols[j]);
            a[[ai, aj]] = v;
            a[[aj, ai]] = v;
        }
        a[[ai, ai]] += problem.n * lambda;
    }
    let sol = cholesky_solve(&a, &b)
        .ok_or_else(|| Error::InvalidInput("ridge system is singular; use a positive penalty".into()))?;
    let mut standardized = vec![0.0; problem.cols.len()];
    for (ai, &j) in active.iter().enumerate() {
        standardized[j] = sol[ai];
    }
    Ok(LinearFit {
        scaler,
        standardized,
        base: problem.mean_y,
        lambda,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `a x = b` for symmetric positive definite `a`.
fn cholesky_solve(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= 1e-12 * a[[i, i]].abs().max(1e-300) {
                    return None;
                }
                l[[i, i]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[[i, k]] * y[k]).sum();
        y[i] = (b[i] - s) / l[[i, i]];
    }
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[[k, i]] * x[k]).sum();
        x[i] = (y[i] - s) / l[[i, i]];
    }
    Some(x)
}

/// Relative pivot below which a column counts as a combination of earlier ones.
const COLLINEAR: f64 = 1e-10;

/// Variance inflation factor of every column; NaN for constant columns and
/// infinity for exact linear dependence on the others.
pub fn vif(x: ArrayView2<f64>) -> Result<Vec<f64>> {
    let (n, p) = x.dim();
    if n < 3 {
        return Err(Error::InvalidInput("at least 3 rows required for VIF".into()));
    }
    let scaler = Standardizer::fit(x);
    let z = scaler.transform(x);
    let corr = z.t().dot(&z) / n as f64;
    let live: Vec<usize> = (0..p).filter(|&j| scaler.scales[j] > 0.0).collect();
    let mut out = vec![f64::NAN; p];
    for &j in &live {
        let others: Vec<usize> = live.iter().copied().filter(|&i| i != j).collect();
        let r2 = explained_share(&corr, &others, j);
        let resid = corr[[j, j]] - r2;
        out[j] = if resid <= COLLINEAR * corr[[j, j]] {
            f64::INFINITY
        } else {
            corr[[j, j]] / resid
        };
    }
    Ok(out)
}

/// Variance of column `target` explained by `cols`, from the covariance
/// matrix, skipping columns that add no new direction.
fn explained_share(cov: &Array2<f64>, cols: &[usize], target: usize) -> f64 {
    // Rows of the Cholesky factor of the kept columns' covariance.
    let mut kept: Vec<usize> = Vec::new();
    let mut l: Vec<Vec<f64>> = Vec::new();
    for &i in cols {
        let row = forward(&l, &kept, cov, i);
        let d = cov[[i, i]] - row.iter().map(|v| v * v).sum::<f64>();
        if d > COLLINEAR * cov[[i, i]] {
            let mut row = row;
            row.push(d.sqrt());
            l.push(row);
            kept.push(i);
        }
    }
    let u = forward(&l, &kept, cov, target);
    u.iter().map(|v| v * v).sum()
}

/// `L^-1 cov[kept, i]` by forward substitution.
fn forward(l: &[Vec<f64>], kept: &[usize], cov: &Array2<f64>, i: usize) -> Vec<f64> {
    let mut u = Vec::with_capacity(kept.len());
    for (a, &k) in kept.iter().enumerate() {
        let s: f64 = (0..a).map(|b| l[a][b] * u[b]).sum();
        u.push((cov[[k, i]] - s) / l[a][a]);
    }
    u
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleResult {
    pub fit: LassoFit,
    /// Index into the grid of the returned fit.
    pub lambda_index: usize,
    /// False when no penalty in the grid brought every VIF below the limit.
    pub accepted: bool,
    pub surviving: usize,
    pub positive: usize,
    pub negative: usize,
}

pub const VIF_LIMIT: f64 = 10.0;

/// Raises the LASSO penalty along `grid` until every surviving column has
/// VIF below [`VIF_LIMIT`] among the survivors.
pub fn lasso_vif_schedule(x: ArrayView2<f64>, y: &[f64], grid: &[f64], cfg: &LassoConfig) -> Result<ScheduleResult> {
    if grid.is_empty() || grid.iter().any(|&l| !(l > 0.0)) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "penalty grid must be positive and strictly ascending".into(),
        ));
    }
    let (problem, scaler) = Problem::new(x, y)?;
    let mut beta = vec![0.0; x.ncols()];
    let mut last = None;
    for (idx, &lambda) in grid.iter().enumerate() {
        let step = LassoConfig { lambda, ..cfg.clone() };
        let mut fit = lasso_from(&problem, scaler.clone(), &mut beta, &step);
        let surviving = fit.fit.nonzero();
        let accepted = if surviving.len() < 2 {
            for &j in &surviving {
                fit.vif[j] = 1.0;
            }
            true
        } else {
            let sub = x.select(ndarray::Axis(1), &surviving);
            let v = vif(sub.view())?;
            for (&j, &f) in surviving.iter().zip(&v) {
                fit.vif[j] = f;
            }
            v.iter().all(|&f| f < VIF_LIMIT)
        };
        let positive = surviving.iter().filter(|&&j| fit.fit.standardized[j] > 0.0).count();
        let result = ScheduleResult {
            lambda_index: idx,
            accepted,
            surviving: surviving.len(),
            positive,
            negative: surviving.len() - positive,
            fit,
        };
        if accepted {
            return Ok(result);
        }
        last = Some(result);
    }
    let mut result = last.expect("nonempty grid");
    result.accepted = false;
    log::warn!(
        "no penalty in the grid brought all VIFs below {VIF_LIMIT}; returning lambda = {}",
        grid[result.lambda_index]
    );
    Ok(result)
}
