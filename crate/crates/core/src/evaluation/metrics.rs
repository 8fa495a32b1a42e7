use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Fold index per row. Stratified by label; fold sizes differ by at most one.
/// Falls back to an unstratified split when a class has fewer than `k` rows.
pub fn kfold_split(labels: &[usize], k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = labels.len();
    if k < 2 || n < k {
        return Err(Error::InvalidInput(format!("cannot split {n} rows into {k} folds")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in labels.iter().enumerate() {
        by_class[c].push(i);
    }
    let order: Vec<usize> = if by_class.iter().any(|rows| !rows.is_empty() && rows.len() < k) {
        log::warn!("a class has fewer than {k} rows; using an unstratified split");
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        all
    } else {
        by_class
            .into_iter()
            .flat_map(|mut rows| {
                rows.shuffle(&mut rng);
                rows
            })
            .collect()
    };
    let mut folds = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        folds[row] = pos % k;
    }
    Ok(folds)
}

/// Unstratified split for continuous targets.
pub fn kfold_plain(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    kfold_split(&vec![0; n], k, seed)
}

/// P(score_pos > score_neg) + P(tie) / 2, via midranks.
pub fn auc_binary(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            actual: positive.len(),
        });
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j+1 share their mean.
        let mid = (i + j + 2) as f64 / 2.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&r| positive[r]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Prevalence-weighted mean of one-vs-rest AUCs. Classes absent from
/// `labels` are left out and the weights renormalized.
pub fn auc_weighted_multiclass(probas: ArrayView2<f64>, labels: &[usize]) -> Result<f64> {
    let (n, k) = probas.dim();
    if n != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: labels.len(),
        });
    }
    let present: Vec<usize> = (0..k).filter(|&c| labels.contains(&c)).collect();
    if present.len() < 2 {
        return Err(Error::SingleClass);
    }
    if present.len() < k {
        log::warn!(
            "{} class(es) absent from labels; excluded from weighted AUC",
            k - present.len()
        );
    }
    let mut total = 0.0;
    let mut weight = 0.0;
    for c in present {
        let scores: Vec<f64> = probas.column(c).to_vec();
        let pos: Vec<bool> = labels.iter().map(|&l| l == c).collect();
        let w = pos.iter().filter(|&&p| p).count() as f64;
        total += w * auc_binary(&scores, &pos)?;
        weight += w;
    }
    Ok(total / weight)
}

pub fn rmse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    if pred.len() != actual.len() || pred.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: actual.len(),
            actual: pred.len(),
        });
    }
    let s: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum();
    Ok((s / pred.len() as f64).sqrt())
}

/// Pearson correlation; `None` when either side is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len();
    if n != b.len() || n < 2 {
        return None;
    }
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks, ties sharing their mean rank.
pub fn midranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let mid = (i + j + 2) as f64 / 2.0;
        for &r in &order[i..=j] {
            ranks[r] = mid;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson over midranks).
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson(&midranks(a), &midranks(b))
}

/// Rates for the highest class (positive) and the lowest (negative).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassRates {
    pub accuracy: f64,
    pub precision_pos: f64,
    pub recall_pos: f64,
    pub precision_neg: f64,
    pub recall_neg: f64,
}

pub fn class_rates(actual: &[usize], predicted: &[usize], k: usize) -> ClassRates {
    let n = actual.len().max(1) as f64;
    let hits = actual.iter().zip(predicted).filter(|(a, p)| a == p).count() as f64;
    let rate = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let pr = |c: usize| {
        let tp = actual.iter().zip(predicted).filter(|(&a, &p)| a == c && p == c).count();
        let predicted_c = predicted.iter().filter(|&&p| p == c).count();
        let actual_c = actual.iter().filter(|&&a| a == c).count();
        (rate(tp, predicted_c), rate(tp, actual_c))
    };
    let (precision_pos, recall_pos) = pr(k - 1);
    let (precision_neg, recall_neg) = pr(0);
    ClassRates {
        accuracy: hits / n,
        precision_pos,
        recall_pos,
        precision_neg,
        recall_neg,
    }
}
