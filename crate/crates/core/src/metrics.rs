//! Classification, multi-label ranking and regression scores.
//!
//! Label matrices hold `{0, 1}` (or `{-1, +1}`) indicators; an entry is a
//! positive label when it is strictly greater than zero. Score matrices hold
//! arbitrary reals, higher meaning more likely.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, Layout};

#[inline]
fn positive(v: f64) -> bool {
    v > 0.0
}

fn check_shapes(y: &DenseMatrix, other: &DenseMatrix) -> Result<()> {
    if y.shape() != other.shape() {
        return Err(Error::Shape(format!(
            "truth is {:?}, prediction is {:?}",
            y.shape(),
            other.shape()
        )));
    }
    if y.n_rows() == 0 || y.n_cols() == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}

/// Indicator matrix `F > tau`.
pub fn threshold(f: &DenseMatrix, tau: f64) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(f.n_rows(), f.n_cols(), Layout::RowMajor);
    for i in 0..f.n_rows() {
        for j in 0..f.n_cols() {
            if f.get(i, j) > tau {
                out.set(i, j, 1.0);
            }
        }
    }
    out
}

/// Fraction of samples whose predicted label set matches exactly.
pub fn subset_accuracy(y: &DenseMatrix, y_hat: &DenseMatrix) -> Result<f64> {
    check_shapes(y, y_hat)?;
    let (n, d) = y.shape();
    let hits = (0..n)
        .filter(|&i| (0..d).all(|j| positive(y.get(i, j)) == positive(y_hat.get(i, j))))
        .count();
    Ok(hits as f64 / n as f64)
}

/// Fraction of wrong label-sample pairs.
pub fn hamming_loss(y: &DenseMatrix, y_hat: &DenseMatrix) -> Result<f64> {
    check_shapes(y, y_hat)?;
    let (n, d) = y.shape();
    let mut wrong = 0usize;
    for i in 0..n {
        for j in 0..d {
            wrong += usize::from(positive(y.get(i, j)) != positive(y_hat.get(i, j)));
        }
    }
    Ok(wrong as f64 / (n * d) as f64)
}

/// Mean Jaccard index between true and predicted label sets, with
/// `J(empty, empty) = 1`.
pub fn jaccard(y: &DenseMatrix, y_hat: &DenseMatrix) -> Result<f64> {
    check_shapes(y, y_hat)?;
    let (n, d) = y.shape();
    let mut total = 0.0;
    for i in 0..n {
        let (mut inter, mut union) = (0usize, 0usize);
        for j in 0..d {
            let (a, b) = (positive(y.get(i, j)), positive(y_hat.get(i, j)));
            inter += usize::from(a && b);
            union += usize::from(a || b);
        }
        total += if union == 0 { 1.0 } else { inter as f64 / union as f64 };
    }
    Ok(total / n as f64)
}

/// Index of the highest score, lowest index on ties.
fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Fraction of samples whose top-scored label is not a true label.
pub fn one_error(y: &DenseMatrix, f: &DenseMatrix) -> Result<f64> {
    check_shapes(y, f)?;
    let n = y.n_rows();
    let wrong = (0..n).filter(|&i| !positive(y.get(i, argmax(&f.row_vec(i))))).count();
    Ok(wrong as f64 / n as f64)
}

/// Mean number of top-scored labels needed to cover every true label. A
/// sample without true labels needs none.
pub fn coverage_error(y: &DenseMatrix, f: &DenseMatrix) -> Result<f64> {
    check_shapes(y, f)?;
    let (n, d) = y.shape();
    let mut total = 0usize;
    for i in 0..n {
        let row = f.row_vec(i);
        let lowest = (0..d)
            .filter(|&j| positive(y.get(i, j)))
            .map(|j| row[j])
            .min_by(f64::total_cmp);
        if let Some(s) = lowest {
            total += row.iter().filter(|&&v| v >= s).count();
        }
    }
    Ok(total as f64 / n as f64)
}

/// Mean fraction of (true, false) label pairs ranked in the wrong order.
///
/// Samples whose labels are all true or all false have no pairs and are left
/// out of the mean; with no usable sample the loss is 0.
pub fn ranking_loss(y: &DenseMatrix, f: &DenseMatrix) -> Result<f64> {
    check_shapes(y, f)?;
    let (n, d) = y.shape();
    let (mut total, mut used) = (0.0, 0usize);
    let mut neg = Vec::with_capacity(d);
    for i in 0..n {
        let row = f.row_vec(i);
        neg.clear();
        neg.extend((0..d).filter(|&j| !positive(y.get(i, j))).map(|j| row[j]));
        let n_neg = neg.len();
        let n_pos = d - n_neg;
        if n_pos == 0 || n_neg == 0 {
            continue;
        }
        neg.sort_by(f64::total_cmp);
        let swapped: usize = (0..d)
            .filter(|&j| positive(y.get(i, j)))
            .map(|j| n_neg - neg.partition_point(|&v| v <= row[j]))
            .sum();
        total += swapped as f64 / (n_pos * n_neg) as f64;
        used += 1;
    }
    Ok(if used == 0 { 0.0 } else { total / used as f64 })
}

/// Label ranking average precision and the number of samples left out for
/// having no true label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lrap {
    pub value: f64,
    pub n_excluded: usize,
}

/// For every true label `j`, the fraction of labels scored at least `f_j`
/// that are true, averaged over true labels then over samples. With no
/// usable sample the score is 1.
pub fn lrap(y: &DenseMatrix, f: &DenseMatrix) -> Result<Lrap> {
    check_shapes(y, f)?;
    let (n, d) = y.shape();
    let (mut total, mut excluded) = (0.0, 0usize);
    let mut all = Vec::with_capacity(d);
    let mut pos = Vec::with_capacity(d);
    for i in 0..n {
        all.clear();
        all.extend(f.row_vec(i));
        pos.clear();
        pos.extend((0..d).filter(|&j| positive(y.get(i, j))).map(|j| all[j]));
        if pos.is_empty() {
            excluded += 1;
            continue;
        }
        all.sort_by(f64::total_cmp);
        pos.sort_by(f64::total_cmp);
        let mut s = 0.0;
        for &v in &pos {
            let above_all = d - all.partition_point(|&a| a < v);
            let above_pos = pos.len() - pos.partition_point(|&a| a < v);
            s += above_pos as f64 / above_all as f64;
        }
        total += s / pos.len() as f64;
    }
    let used = n - excluded;
    Ok(Lrap {
        value: if used == 0 { 1.0 } else { total / used as f64 },
        n_excluded: excluded,
    })
}

/// Binary confusion counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_labels(y: &[f64], y_hat: &[f64]) -> Result<Self> {
        if y.len() != y_hat.len() {
            return Err(Error::Shape(format!("{} labels, {} predictions", y.len(), y_hat.len())));
        }
        let mut c = Confusion::default();
        for (&a, &b) in y.iter().zip(y_hat) {
            c.add(positive(a), positive(b));
        }
        Ok(c)
    }

    fn add(&mut self, truth: bool, pred: bool) {
        match (truth, pred) {
            (true, true) => self.tp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn n(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub error_rate: f64,
    pub accuracy: f64,
    /// True positive rate, also sensitivity.
    pub recall: f64,
    /// True negative rate.
    pub specificity: f64,
    pub fnr: f64,
    pub fpr: f64,
    pub precision: f64,
    pub balanced_accuracy: f64,
    pub f1: f64,
    /// Set when some ratio had a zero denominator and was reported as 0.
    pub degenerate: bool,
}

pub fn binary_metrics(c: &Confusion) -> BinaryMetrics {
    let mut degenerate = false;
    let mut ratio = |num: usize, den: usize| {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let accuracy = ratio(c.tp + c.tn, c.n());
    let recall = ratio(c.tp, c.tp + c.fn_);
    let specificity = ratio(c.tn, c.tn + c.fp);
    let fnr = ratio(c.fn_, c.tp + c.fn_);
    let fpr = ratio(c.fp, c.tn + c.fp);
    let precision = ratio(c.tp, c.tp + c.fp);
    // harmonic mean of precision and recall, written on counts
    let f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_);
    BinaryMetrics {
        error_rate: if c.n() == 0 { 0.0 } else { 1.0 - accuracy },
        accuracy,
        recall,
        specificity,
        fnr,
        fpr,
        precision,
        balanced_accuracy: 0.5 * (recall + specificity),
        f1,
        degenerate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinaryMetric {
    Accuracy,
    ErrorRate,
    Precision,
    Recall,
    Specificity,
    BalancedAccuracy,
    F1,
}

impl BinaryMetric {
    pub fn of(self, c: &Confusion) -> f64 {
        let m = binary_metrics(c);
        match self {
            BinaryMetric::Accuracy => m.accuracy,
            BinaryMetric::ErrorRate => m.error_rate,
            BinaryMetric::Precision => m.precision,
            BinaryMetric::Recall => m.recall,
            BinaryMetric::Specificity => m.specificity,
            BinaryMetric::BalancedAccuracy => m.balanced_accuracy,
            BinaryMetric::F1 => m.f1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Averaging {
    /// Mean over labels of the per-label metric.
    Macro,
    /// Metric of all label-sample pairs pooled into one binary task.
    Micro,
    /// Mean over samples of the per-sample metric.
    Samples,
}

/// A binary metric extended to label matrices.
pub fn averaged_metric(y: &DenseMatrix, y_hat: &DenseMatrix, metric: BinaryMetric, mode: Averaging) -> Result<f64> {
    check_shapes(y, y_hat)?;
    let (n, d) = y.shape();
    let pair = |i: usize, j: usize| (positive(y.get(i, j)), positive(y_hat.get(i, j)));
    Ok(match mode {
        Averaging::Micro => {
            let mut c = Confusion::default();
            for i in 0..n {
                for j in 0..d {
                    let (a, b) = pair(i, j);
                    c.add(a, b);
                }
            }
            metric.of(&c)
        }
        Averaging::Macro => {
            let total: f64 = (0..d)
                .map(|j| {
                    let mut c = Confusion::default();
                    for i in 0..n {
                        let (a, b) = pair(i, j);
                        c.add(a, b);
                    }
                    metric.of(&c)
                })
                .sum();
            total / d as f64
        }
        Averaging::Samples => {
            let total: f64 = (0..n)
                .map(|i| {
                    let mut c = Confusion::default();
                    for j in 0..d {
                        let (a, b) = pair(i, j);
                        c.add(a, b);
                    }
                    metric.of(&c)
                })
                .sum();
            total / n as f64
        }
    })
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn roc_auc(y: &[f64], scores: &[f64]) -> Result<f64> {
    if y.len() != scores.len() {
        return Err(Error::Shape(format!("{} labels, {} scores", y.len(), scores.len())));
    }
    let n_pos = y.iter().filter(|&&v| positive(v)).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidTarget("roc auc needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of positive mid-ranks (1-based)
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let mid = (start + end + 1) as f64 / 2.0;
        let pos_in_block = order[start..end].iter().filter(|&&i| positive(y[i])).count();
        rank_sum += mid * pos_in_block as f64;
        start = end;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    /// Squared error averaged over samples and outputs.
    pub mse: f64,
    pub mae: f64,
    /// Coefficient of determination, single-output only.
    pub r2: Option<f64>,
    /// Per-output r², `None` for outputs whose truth is constant.
    pub r2_per_output: Vec<Option<f64>>,
    /// Mean of the per-output r² over non-constant outputs.
    pub macro_r2: f64,
    /// Fraction of the total output variance explained.
    pub variance_r2: f64,
    pub n_constant_outputs: usize,
}

/// With every output constant both r² summaries are 1 for an exact fit and 0
/// otherwise; a constant single output gets the same value.
pub fn regression_metrics(y: &DenseMatrix, y_hat: &DenseMatrix) -> Result<RegressionMetrics> {
    check_shapes(y, y_hat)?;
    let (n, d) = y.shape();
    let (mut se, mut ae) = (0.0, 0.0);
    let mut sse = vec![0.0; d];
    let mut sst = vec![0.0; d];
    for j in 0..d {
        let mean = (0..n).map(|i| y.get(i, j)).sum::<f64>() / n as f64;
        for i in 0..n {
            let r = y.get(i, j) - y_hat.get(i, j);
            se += r * r;
            ae += r.abs();
            sse[j] += r * r;
            sst[j] += (y.get(i, j) - mean).powi(2);
        }
    }
    let r2_per_output: Vec<Option<f64>> = (0..d)
        .map(|j| (sst[j] > 0.0).then(|| 1.0 - sse[j] / sst[j]))
        .collect();
    let varying: Vec<f64> = r2_per_output.iter().flatten().copied().collect();
    let all_constant_score = if se == 0.0 { 1.0 } else { 0.0 };
    let (macro_r2, variance_r2) = if varying.is_empty() {
        (all_constant_score, all_constant_score)
    } else {
        let total_sst: f64 = sst.iter().sum();
        let explained: f64 = (0..d).filter(|&j| sst[j] > 0.0).map(|j| sst[j] - sse[j]).sum();
        (varying.iter().sum::<f64>() / varying.len() as f64, explained / total_sst)
    };
    Ok(RegressionMetrics {
        mse: se / (n * d) as f64,
        mae: ae / (n * d) as f64,
        r2: (d == 1).then(|| r2_per_output[0].unwrap_or(all_constant_score)),
        n_constant_outputs: d - varying.len(),
        r2_per_output,
        macro_r2,
        variance_r2,
    })
}

#[cfg(test)]
mod tests;
