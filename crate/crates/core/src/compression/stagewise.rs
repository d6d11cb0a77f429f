use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::CscMatrix;

/// Columns whose standard deviation is below this are treated as constant.
const CONSTANT_COLUMN: f64 = 1e-12;
const MIN_CORRELATION: f64 = 1e-12;

/// Incremental forward stagewise path over standardized columns.
///
/// Columns are centered and scaled to unit variance (`mean`, `scale`);
/// constant columns have `scale == 0` and never enter the path. `steps[s]`
/// is the column moved at step `s` and its signed increment `+-epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagewisePath {
    pub epsilon: f64,
    pub steps: Vec<(usize, f64)>,
    /// Mean of `y`.
    pub intercept: f64,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// Residual sum of squares before any step, then after each step.
    pub rss: Vec<f64>,
}

impl StagewisePath {
    pub fn n_columns(&self) -> usize {
        self.mean.len()
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    /// `||beta||_1` after the whole path.
    pub fn t_max(&self) -> f64 {
        self.steps.len() as f64 * self.epsilon
    }

    /// Standardized-column coefficients after `k` steps.
    pub fn beta_after(&self, k: usize) -> Vec<f64> {
        let mut beta = vec![0.0; self.n_columns()];
        for &(j, delta) in &self.steps[..k.min(self.steps.len())] {
            beta[j] += delta;
        }
        beta
    }

    /// Number of steps reaching `||beta||_1 = t`, or `InvalidT` beyond the path.
    pub fn steps_for(&self, t: f64) -> Result<usize> {
        let k = (t / self.epsilon).round();
        if !(t >= 0.0) || k > self.steps.len() as f64 {
            return Err(Error::InvalidT { t, max: self.t_max() });
        }
        Ok(k as usize)
    }

    pub fn beta_at(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.beta_after(self.steps_for(t)?))
    }

    /// Coefficients on the raw columns and the matching intercept, so that
    /// `y_hat = b0 + sum_j b_j z_j`.
    pub fn raw_coefficients(&self, beta: &[f64]) -> (f64, Vec<f64>) {
        let mut b0 = self.intercept;
        let raw = beta
            .iter()
            .enumerate()
            .map(|(j, &b)| {
                if b == 0.0 {
                    return 0.0;
                }
                let r = b / self.scale[j];
                b0 -= r * self.mean[j];
                r
            })
            .collect();
        (b0, raw)
    }
}

/// Forward stagewise regression of `y` on the standardized columns of `z`.
///
/// Each step moves the coefficient of the column most correlated with the
/// residual by `epsilon` in the direction of the correlation (lowest index on
/// ties). In monotone mode a column whose coefficient is nonzero can only move
/// further in its own direction. The path stops after `max_steps`, when every
/// admissible correlation vanishes, or when a step would not decrease the
/// residual sum of squares.
pub fn forward_stagewise(z: &CscMatrix, y: &[f64], epsilon: f64, max_steps: usize, monotone: bool) -> Result<StagewisePath> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidStep(epsilon));
    }
    let (n, q) = (z.n_rows(), z.n_cols());
    if y.len() != n {
        return Err(Error::Shape(format!("{} targets for {n} rows", y.len())));
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let nf = n as f64;
    let intercept = y.iter().sum::<f64>() / nf;
    let mut mean = vec![0.0; q];
    let mut scale = vec![0.0; q];
    let mut col_sum = vec![0.0; q];
    for j in 0..q {
        let (_, vals) = z.col(j);
        let s: f64 = vals.iter().sum();
        let ss: f64 = vals.iter().map(|v| v * v).sum();
        let mu = s / nf;
        let var = (ss / nf - mu * mu).max(0.0);
        col_sum[j] = s;
        mean[j] = mu;
        let sd = var.sqrt();
        if sd > CONSTANT_COLUMN {
            scale[j] = sd;
        }
    }
    let r: Vec<f64> = y.iter().map(|v| v - intercept).collect();
    let r_sum: f64 = r.iter().sum();
    // c_j = z~_j . r
    let mut c: Vec<f64> = (0..q)
        .map(|j| {
            if scale[j] == 0.0 {
                return 0.0;
            }
            let (rows, vals) = z.col(j);
            let dot: f64 = rows.iter().zip(vals).map(|(&i, v)| v * r[i]).sum();
            (dot - mean[j] * r_sum) / scale[j]
        })
        .collect();
    let mut rss: f64 = r.iter().map(|v| v * v).sum();
    let csr = z.to_csr();
    let mut beta = vec![0.0; q];
    let mut steps = Vec::new();
    let mut rss_path = vec![rss];
    let mut cross = vec![0.0; q];
    let mut touched: Vec<usize> = Vec::new();
    // a step of size eps on a unit-variance column changes the RSS by
    // -2 eps |c| + eps^2 n
    let min_gain = (0.5 * epsilon * nf).max(MIN_CORRELATION);
    while steps.len() < max_steps {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..q {
            if scale[j] == 0.0 {
                continue;
            }
            let cj = c[j];
            if monotone && beta[j] != 0.0 && cj * beta[j] < 0.0 {
                continue;
            }
            if best.is_none_or(|(_, b)| cj.abs() > b) {
                best = Some((j, cj.abs()));
            }
        }
        let Some((k, ck)) = best else { break };
        if ck <= min_gain {
            break;
        }
        let delta = epsilon.copysign(c[k]);
        beta[k] += delta;
        steps.push((k, delta));
        rss += -2.0 * delta * c[k] + delta * delta * nf;
        rss_path.push(rss.max(0.0));
        // c_j -= delta * z~_j . z~_k
        // z~_j . z~_k = (z_j . z_k - mean_j sum_k) / (scale_j scale_k)
        let (rows, vals) = z.col(k);
        for (&i, &zik) in rows.iter().zip(vals) {
            let (cols, rvals) = csr.row(i);
            for (&j, &zij) in cols.iter().zip(rvals) {
                if cross[j] == 0.0 {
                    touched.push(j);
                }
                cross[j] += zik * zij;
            }
        }
        let coef = delta / scale[k];
        for j in 0..q {
            if scale[j] != 0.0 {
                c[j] -= coef * (cross[j] - mean[j] * col_sum[k]) / scale[j];
            }
        }
        for &j in &touched {
            cross[j] = 0.0;
        }
        touched.clear();
    }
    Ok(StagewisePath {
        epsilon,
        steps,
        intercept,
        mean,
        scale,
        rss: rss_path,
    })
}
