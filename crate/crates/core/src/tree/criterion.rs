use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Node impurity. Classification criteria treat every output as a binary
/// {0, 1} variable and sum the per-output impurities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Gini,
    Entropy,
    Variance,
}

impl Criterion {
    pub fn is_classification(self) -> bool {
        !matches!(self, Criterion::Variance)
    }
}

fn entropy_term(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.ln()
    }
}

/// Impurity of a node from its weighted count and per-output weighted sums.
/// Only defined for the classification criteria; variance needs second moments.
#[inline]
pub(crate) fn class_impurity(kind: Criterion, w: f64, sums: &[f64]) -> f64 {
    match kind {
        Criterion::Gini => sums
            .iter()
            .map(|s| {
                let p = s / w;
                2.0 * p * (1.0 - p)
            })
            .sum(),
        Criterion::Entropy => sums
            .iter()
            .map(|s| {
                let p = s / w;
                entropy_term(p) + entropy_term(1.0 - p)
            })
            .sum(),
        Criterion::Variance => unreachable!("variance impurity needs second moments"),
    }
}

/// Impurity decrease `I(t) - w_l/w_t I(l) - w_r/w_t I(r)` of a split given
/// child statistics. For variance this is computed without second moments,
/// through `sum_o (S_l^2/w_l + S_r^2/w_r - S_t^2/w_t) / w_t`, which equals the
/// exact decrease.
#[inline]
#[allow(clippy::too_many_arguments)]
pub(crate) fn decrease(
    kind: Criterion,
    parent_impurity: f64,
    w_t: f64,
    s_t: &[f64],
    w_l: f64,
    s_l: &[f64],
    w_r: f64,
    s_r: &[f64],
) -> f64 {
    match kind {
        Criterion::Variance => {
            let mut acc = 0.0;
            for o in 0..s_t.len() {
                acc += s_l[o] * s_l[o] / w_l + s_r[o] * s_r[o] / w_r - s_t[o] * s_t[o] / w_t;
            }
            acc / w_t
        }
        _ => {
            parent_impurity
                - (w_l / w_t) * class_impurity(kind, w_l, s_l)
                - (w_r / w_t) * class_impurity(kind, w_r, s_r)
        }
    }
}

/// Impurity of the unweighted rows of `values` (one row per sample).
pub fn impurity(values: &DenseMatrix, kind: Criterion) -> Result<f64> {
    let n = values.n_rows();
    if n == 0 {
        return Err(Error::EmptyPartition);
    }
    let d = values.n_cols();
    let sums: Vec<f64> = (0..d).map(|o| (0..n).map(|i| values.get(i, o)).sum()).collect();
    match kind {
        Criterion::Variance => Ok((0..d)
            .map(|o| {
                let m = sums[o] / n as f64;
                (0..n).map(|i| (values.get(i, o) - m).powi(2)).sum::<f64>() / n as f64
            })
            .sum()),
        _ => {
            if let Some(v) = values.values().iter().find(|v| **v != 0.0 && **v != 1.0) {
                return Err(Error::InvalidTarget(format!("{v} is not a 0/1 class indicator")));
            }
            Ok(class_impurity(kind, n as f64, &sums))
        }
    }
}

/// `I(parent) - |left|/|parent| I(left) - |right|/|parent| I(right)`.
pub fn impurity_reduction(parent: &DenseMatrix, left: &DenseMatrix, right: &DenseMatrix, kind: Criterion) -> Result<f64> {
    if left.n_rows() == 0 || right.n_rows() == 0 {
        return Err(Error::InvalidSplit("both children must be non-empty".into()));
    }
    if left.n_rows() + right.n_rows() != parent.n_rows() {
        return Err(Error::InvalidSplit("children do not partition the parent".into()));
    }
    let n = parent.n_rows() as f64;
    Ok(impurity(parent, kind)?
        - left.n_rows() as f64 / n * impurity(left, kind)?
        - right.n_rows() as f64 / n * impurity(right, kind)?)
}
