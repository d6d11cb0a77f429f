use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, Layout};

/// Loss functions `l(y, f)`. Multi-output kinds sum the per-output loss; the
/// single-output kinds require exactly one output column.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    /// `(y - f)^2 / 2`
    Square,
    /// `|y - f|`
    Absolute,
    /// `ln(1 + exp(-2 y f))`, `y` in {-1, +1}
    Logistic,
    #[default]
    L2Multi,
    L1Multi,
    LogisticMulti,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Base {
    Square,
    Absolute,
    Logistic,
}

impl Loss {
    fn base(self) -> Base {
        match self {
            Loss::Square | Loss::L2Multi => Base::Square,
            Loss::Absolute | Loss::L1Multi => Base::Absolute,
            Loss::Logistic | Loss::LogisticMulti => Base::Logistic,
        }
    }

    pub fn is_multi(self) -> bool {
        matches!(self, Loss::L2Multi | Loss::L1Multi | Loss::LogisticMulti)
    }

    pub fn is_logistic(self) -> bool {
        self.base() == Base::Logistic
    }

    pub fn is_square(self) -> bool {
        self.base() == Base::Square
    }

    /// Checks the output count and, for logistic losses, that targets are ±1.
    pub fn check_targets(self, y: &DenseMatrix) -> Result<()> {
        if !self.is_multi() && y.n_cols() != 1 {
            return Err(Error::Shape(format!("{self:?} loss needs one output, got {}", y.n_cols())));
        }
        if self.is_logistic() && y.values().iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidTarget("logistic loss needs targets in {-1, +1}".into()));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn point(self, y: f64, f: f64) -> f64 {
        match self.base() {
            Base::Square => 0.5 * (y - f) * (y - f),
            Base::Absolute => (y - f).abs(),
            Base::Logistic => softplus(-2.0 * y * f),
        }
    }

    /// `-dl/df` at `(y, f)`.
    #[inline]
    pub(crate) fn point_negative_gradient(self, y: f64, f: f64) -> f64 {
        match self.base() {
            Base::Square => y - f,
            Base::Absolute => {
                if y > f {
                    1.0
                } else if y < f {
                    -1.0
                } else {
                    0.0
                }
            }
            Base::Logistic => 2.0 * y * sigmoid(-2.0 * y * f),
        }
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_same_shape(y: &DenseMatrix, f: &DenseMatrix) -> Result<()> {
    if y.shape() != f.shape() {
        return Err(Error::Shape(format!("targets {:?} vs predictions {:?}", y.shape(), f.shape())));
    }
    Ok(())
}

/// Mean over samples of the per-sample loss (summed over outputs).
pub fn loss_value(loss: Loss, y: &DenseMatrix, f: &DenseMatrix) -> Result<f64> {
    loss.check_targets(y)?;
    check_same_shape(y, f)?;
    if y.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for i in 0..y.n_rows() {
        for j in 0..y.n_cols() {
            total += loss.point(y.get(i, j), f.get(i, j));
        }
    }
    Ok(total / y.n_rows() as f64)
}

/// Per-sample gradient `dl/df`, `n x d`.
pub fn loss_gradient(loss: Loss, y: &DenseMatrix, f: &DenseMatrix) -> Result<DenseMatrix> {
    let mut g = negative_gradient(loss, y, f)?;
    for i in 0..g.n_rows() {
        for j in 0..g.n_cols() {
            g.set(i, j, -g.get(i, j));
        }
    }
    Ok(g)
}

/// `-dl/df`, the pseudo-residuals fitted by each weak model.
pub fn negative_gradient(loss: Loss, y: &DenseMatrix, f: &DenseMatrix) -> Result<DenseMatrix> {
    loss.check_targets(y)?;
    check_same_shape(y, f)?;
    let (n, d) = y.shape();
    let mut out = DenseMatrix::zeros(n, d, Layout::RowMajor);
    for i in 0..n {
        for j in 0..d {
            out.set(i, j, loss.point_negative_gradient(y.get(i, j), f.get(i, j)));
        }
    }
    Ok(out)
}

/// Per-output constant minimizing the training loss: the mean (square), the
/// median (absolute) or half the log-odds (logistic). For logistic losses class
/// counts are clamped to at least 1/2 so that a missing class stays finite.
pub fn constant_minimizer(loss: Loss, y: &DenseMatrix) -> Result<Vec<f64>> {
    loss.check_targets(y)?;
    let n = y.n_rows();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok((0..y.n_cols())
        .map(|j| {
            let col = y.column_vec(j);
            match loss.base() {
                Base::Square => col.iter().sum::<f64>() / n as f64,
                Base::Absolute => median(col),
                Base::Logistic => {
                    let pos = col.iter().filter(|&&v| v > 0.0).count() as f64;
                    let neg = n as f64 - pos;
                    0.5 * (pos.max(0.5) / neg.max(0.5)).ln()
                }
            }
        })
        .collect())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng as _;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn square_at_target_is_flat() {
        let y = m(&[&[1.5], &[-2.0]]);
        assert_eq!(loss_value(Loss::Square, &y, &y).unwrap(), 0.0);
        assert!(loss_gradient(Loss::Square, &y, &y).unwrap().values().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn logistic_at_zero() {
        let y = m(&[&[1.0]]);
        let f = m(&[&[0.0]]);
        assert!((loss_value(Loss::Logistic, &y, &f).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(negative_gradient(Loss::Logistic, &y, &f).unwrap().values(), &[1.0]);
        assert!(matches!(
            loss_value(Loss::Logistic, &m(&[&[0.5]]), &f),
            Err(Error::InvalidTarget(_))
        ));
        assert!(loss_value(Loss::Square, &m(&[&[1.0, 2.0]]), &m(&[&[1.0, 2.0]])).is_err());
    }

    #[test]
    fn logistic_is_stable_for_large_margins() {
        assert!(Loss::Logistic.point(1.0, 1e4) >= 0.0);
        assert!((Loss::Logistic.point(-1.0, 1e4) - 2e4).abs() < 1e-9);
        assert!(Loss::Logistic.point_negative_gradient(-1.0, 1e4).is_finite());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = rng_from_seed(1);
        let h = 1e-6;
        for loss in [Loss::Square, Loss::Absolute, Loss::Logistic] {
            for _ in 0..500 {
                let y = if loss == Loss::Logistic {
                    if rng.random::<bool>() { 1.0 } else { -1.0 }
                } else {
                    rng.random::<f64>() * 10.0 - 5.0
                };
                let f = rng.random::<f64>() * 6.0 - 3.0;
                if loss == Loss::Absolute && (y - f).abs() < 1e-3 {
                    continue;
                }
                let fd = (loss.point(y, f + h) - loss.point(y, f - h)) / (2.0 * h);
                let g = -loss.point_negative_gradient(y, f);
                assert!((fd - g).abs() <= 1e-5 * g.abs().max(1e-3), "{loss:?} y={y} f={f}: {fd} vs {g}");
            }
        }
    }

    #[test]
    fn multi_losses_sum_outputs() {
        let y = m(&[&[1.0, -1.0], &[-1.0, -1.0]]);
        let f = m(&[&[0.3, 0.1], &[-2.0, 0.5]]);
        let multi = loss_value(Loss::LogisticMulti, &y, &f).unwrap();
        let by_col: f64 = (0..2)
            .map(|j| {
                let yc = DenseMatrix::from_column(y.column_vec(j));
                let fc = DenseMatrix::from_column(f.column_vec(j));
                loss_value(Loss::Logistic, &yc, &fc).unwrap()
            })
            .sum();
        assert!((multi - by_col).abs() < 1e-15);
    }

    #[test]
    fn constant_minimizers() {
        assert_eq!(constant_minimizer(Loss::Square, &m(&[&[1.0], &[3.0]])).unwrap(), vec![2.0]);
        assert_eq!(constant_minimizer(Loss::Absolute, &m(&[&[1.0], &[2.0], &[100.0]])).unwrap(), vec![2.0]);
        let y = m(&[&[1.0], &[1.0], &[1.0], &[-1.0]]);
        let c = constant_minimizer(Loss::Logistic, &y).unwrap()[0];
        // grid oracle over the actual training loss
        let mut best = (f64::INFINITY, 0.0);
        for k in -5000..=5000 {
            let r = k as f64 * 1e-3;
            let v: f64 = y.values().iter().map(|&t| Loss::Logistic.point(t, r)).sum();
            if v < best.0 {
                best = (v, r);
            }
        }
        assert!((c - best.1).abs() < 1e-3);
        assert!((c - 0.5 * 3f64.ln()).abs() < 1e-15);
        let all_pos = constant_minimizer(Loss::Logistic, &m(&[&[1.0], &[1.0]])).unwrap()[0];
        assert!((all_pos - 0.5 * 4f64.ln()).abs() < 1e-15);
    }
}
