//! Per-column quantile binning shared by the tree learners.

use ndarray::ArrayView2;

/// Column-major bin codes plus the split threshold after each bin.
#[derive(Debug, Clone)]
pub(crate) struct Binned {
    /// `codes[j][i]`: bin of row `i` in column `j`.
    pub codes: Vec<Vec<u16>>,
    /// `thresholds[j][b]`: midpoint between bin `b` and bin `b + 1`.
    pub thresholds: Vec<Vec<f64>>,
}

impl Binned {
    pub fn new(x: ArrayView2<f64>, max_bins: usize) -> Self {
        let max_bins = max_bins.clamp(2, u16::MAX as usize);
        let (n, d) = x.dim();
        let mut codes = Vec::with_capacity(d);
        let mut thresholds = Vec::with_capacity(d);
        for j in 0..d {
            let col = x.column(j);
            let mut sorted: Vec<f64> = col.to_vec();
            sorted.sort_by(f64::total_cmp);
            let mut distinct = sorted.clone();
            distinct.dedup();
            // Upper edge of each bin, as an observed value.
            let uppers: Vec<f64> = if distinct.len() <= max_bins {
                distinct.clone()
            } else {
                let mut u: Vec<f64> = (1..max_bins).map(|b| sorted[(b * n / max_bins).min(n - 1)]).collect();
                u.push(*distinct.last().expect("nonempty column"));
                u.dedup();
                u
            };
            let mut cuts = Vec::with_capacity(uppers.len().saturating_sub(1));
            for w in uppers.windows(2) {
                // Smallest observed value above this bin.
                let next = distinct[distinct.partition_point(|&v| v <= w[0])];
                cuts.push(w[0] + (next - w[0]) / 2.0);
            }
            let c: Vec<u16> = col.iter().map(|&v| uppers.partition_point(|&u| u < v) as u16).collect();
            codes.push(c);
            thresholds.push(cuts);
        }
        Binned { codes, thresholds }
    }

    pub fn n_bins(&self, j: usize) -> usize {
        self.thresholds[j].len() + 1
    }
}
