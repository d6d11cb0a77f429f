use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::learner::LearnerSpec;
use crate::datasets::{Features, Generator};
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, Layout};
use crate::rng;

/// Sizes of a bias-variance experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BvConfig {
    pub n_train: usize,
    /// Independent learning sets.
    pub n_ls_draws: usize,
    /// Fits per learning set with different algorithm seeds.
    pub n_algo_draws: usize,
    pub n_test: usize,
    pub seed: u64,
}

/// Monte-Carlo decomposition of the expected squared error at a fixed set of
/// test inputs, averaged over test points and outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BvReport {
    /// Noise variance of the generator.
    pub residual_error: f64,
    pub bias_sq: f64,
    pub var_total: f64,
    /// Variance over learning sets of the seed-averaged prediction.
    pub var_ls: f64,
    /// Mean over learning sets of the variance over algorithm seeds.
    pub var_algo: f64,
    pub n_ls_draws: usize,
    pub n_algo_draws: usize,
    pub n_test: usize,
}

impl BvReport {
    /// `residual + bias^2 + variance`.
    pub fn expected_error(&self) -> f64 {
        self.residual_error + self.bias_sq + self.var_total
    }
}

/// Seed of learning set `l`; its data comes from sub-stream 0 and the
/// algorithm draws from sub-streams `1..`.
fn ls_seed(seed: u64, l: usize) -> u64 {
    rng::derive_seed(seed, l as u64 + 1)
}

/// Estimates noise, bias and both variance terms of `learner` on problems
/// drawn from `generator`. The test inputs are drawn once (stream 0 of
/// `seed`) and shared by every learning set.
pub fn bias_variance_decompose(generator: &dyn Generator, learner: &LearnerSpec, cfg: &BvConfig) -> Result<BvReport> {
    if cfg.n_ls_draws == 0 || cfg.n_algo_draws == 0 || cfg.n_test == 0 || cfg.n_train == 0 {
        return Err(Error::InvalidParameter("every bias-variance count must be positive".into()));
    }
    let noise = generator
        .noise_variance()
        .ok_or_else(|| Error::Unsupported("generator has no known noise variance".into()))?;
    let test = generator.generate(cfg.n_test, rng::derive_seed(cfg.seed, 0))?;
    let x = test.x.to_dense(Layout::RowMajor)?;
    let d = test.n_outputs();
    let mut f = DenseMatrix::zeros(cfg.n_test, d, Layout::RowMajor);
    for i in 0..cfg.n_test {
        let b = generator
            .bayes(x.row(i).unwrap())
            .ok_or_else(|| Error::Unsupported("generator has no known regression function".into()))?;
        f.row_mut(i).unwrap().copy_from_slice(&b);
    }
    let x = Features::Dense(x);

    // (seed-averaged prediction, mean over points of the seed variance)
    let per_ls = (0..cfg.n_ls_draws)
        .into_par_iter()
        .map(|l| -> Result<(Vec<f64>, f64)> {
            let s = ls_seed(cfg.seed, l);
            let train = generator.generate(cfg.n_train, rng::derive_seed(s, 0))?;
            // moments are accumulated around the first fit to avoid cancellation
            let mut first: Vec<f64> = Vec::new();
            let mut sum = vec![0.0; cfg.n_test * d];
            let mut sq = vec![0.0; cfg.n_test * d];
            for a in 0..cfg.n_algo_draws {
                let pred = learner.fit(&train, rng::derive_seed(s, a as u64 + 1))?.predict(&x)?;
                let pred = pred.to_layout(Layout::RowMajor).into_values();
                if a == 0 {
                    first = pred;
                    continue;
                }
                for (k, v) in pred.iter().enumerate() {
                    let dv = v - first[k];
                    sum[k] += dv;
                    sq[k] += dv * dv;
                }
            }
            let na = cfg.n_algo_draws as f64;
            let mean: Vec<f64> = sum.iter().zip(&first).map(|(s, f)| f + s / na).collect();
            let var = sq
                .iter()
                .zip(&sum)
                .map(|(q, s)| (q / na - (s / na) * (s / na)).max(0.0))
                .sum::<f64>()
                / mean.len() as f64;
            Ok((mean, var))
        })
        .collect::<Result<Vec<_>>>()?;

    let nl = cfg.n_ls_draws as f64;
    let m = cfg.n_test * d;
    let mut grand = vec![0.0; m];
    for (mean, _) in &per_ls {
        for (g, v) in grand.iter_mut().zip(mean) {
            *g += v / nl;
        }
    }
    let mut var_ls = 0.0;
    for (mean, _) in &per_ls {
        var_ls += mean.iter().zip(&grand).map(|(v, g)| (v - g) * (v - g)).sum::<f64>();
    }
    var_ls /= nl * m as f64;
    let var_algo = per_ls.iter().map(|(_, v)| v).sum::<f64>() / nl;
    let f = f.values();
    let bias_sq = grand.iter().zip(f).map(|(g, t)| (g - t) * (g - t)).sum::<f64>() / m as f64;
    Ok(BvReport {
        residual_error: noise.iter().sum::<f64>() / noise.len() as f64,
        bias_sq,
        var_total: var_ls + var_algo,
        var_ls,
        var_algo,
        n_ls_draws: cfg.n_ls_draws,
        n_algo_draws: cfg.n_algo_draws,
        n_test: cfg.n_test,
    })
}
