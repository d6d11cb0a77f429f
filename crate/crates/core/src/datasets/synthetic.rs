use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Features, Task};
use crate::error::{Error, Result};
use crate::matrix::{CscMatrix, DenseMatrix, Layout};
use crate::rng::{rng_from_seed, Rng};

/// Class mean shift of the two-norm problem, `2 / sqrt(20)`.
pub const TWONORM_SHIFT: f64 = 0.447_213_595_499_957_9;

/// A seeded synthetic problem. Regression generators also expose their
/// noise-free regression function, which the bias-variance harness needs.
pub trait Generator: Sync {
    fn generate(&self, n: usize, seed: u64) -> Result<Dataset>;

    /// `E[y | x]`, if known in closed form.
    fn bayes(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Per-output variance of `y - E[y | x]`, if known.
    fn noise_variance(&self) -> Option<Vec<f64>> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputLaw {
    /// i.i.d. U(0, 1)
    Uniform,
    /// i.i.d. N(0, 1)
    Gaussian,
}

impl InputLaw {
    fn draw(self, rng: &mut Rng) -> f64 {
        match self {
            InputLaw::Uniform => rng.random::<f64>(),
            InputLaw::Gaussian => rng.sample(StandardNormal),
        }
    }
}

/// `10 sin(pi x1 x2) + 20 (x3 - 1/2)^2 + 10 x4 + c5 x5` on the first five entries of `x`.
pub fn friedman1_function(x: &[f64], x5_coef: f64) -> f64 {
    10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + x5_coef * x[4]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Friedman1 {
    pub noise_sd: f64,
    pub input_law: InputLaw,
    pub x5_coef: f64,
    /// Total number of inputs; those past the fifth are irrelevant.
    pub n_features: usize,
}

impl Default for Friedman1 {
    fn default() -> Self {
        Friedman1 {
            noise_sd: 1.0,
            input_law: InputLaw::Uniform,
            x5_coef: 5.0,
            n_features: 10,
        }
    }
}

impl Generator for Friedman1 {
    fn generate(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if self.n_features < 5 {
            return Err(Error::InvalidParameter("friedman1 needs at least 5 features".into()));
        }
        let p = self.n_features;
        let mut rng = rng_from_seed(seed);
        let mut x = Vec::with_capacity(n * p);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let start = x.len();
            for _ in 0..p {
                x.push(self.input_law.draw(&mut rng));
            }
            let eps: f64 = rng.sample(StandardNormal);
            y.push(friedman1_function(&x[start..], self.x5_coef) + self.noise_sd * eps);
        }
        Dataset::new(
            Features::Dense(DenseMatrix::new(n, p, Layout::RowMajor, x)?),
            DenseMatrix::from_column(y),
            Task::Regression,
        )
    }

    fn bayes(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(vec![friedman1_function(x, self.x5_coef)])
    }

    fn noise_variance(&self) -> Option<Vec<f64>> {
        Some(vec![self.noise_sd * self.noise_sd])
    }
}

/// Friedman1 with uniform inputs and ten features.
pub fn gen_friedman1(n: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    Friedman1 {
        noise_sd,
        ..Friedman1::default()
    }
    .generate(n, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FriedmanMultiKind {
    /// `y_1 = f(x) + e_1`, `y_j = y_{j-1} + e_j`.
    Chain,
    /// `y_j = f(x) + e_j`.
    Group,
    /// `y_j = f(x_{5j..5j+5}) + e_j` on disjoint input blocks.
    Ind,
}

/// Multi-output Friedman1 variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FriedmanMulti {
    pub kind: FriedmanMultiKind,
    pub d: usize,
    pub noise_sd: f64,
    pub input_law: InputLaw,
    pub x5_coef: f64,
}

impl FriedmanMulti {
    pub fn new(kind: FriedmanMultiKind, d: usize) -> Self {
        FriedmanMulti {
            kind,
            d,
            noise_sd: 1.0,
            input_law: InputLaw::Gaussian,
            x5_coef: 5.0,
        }
    }

    pub fn n_features(&self) -> usize {
        match self.kind {
            FriedmanMultiKind::Ind => 5 * self.d,
            _ => 5,
        }
    }
}

impl Generator for FriedmanMulti {
    fn generate(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if self.d == 0 {
            return Err(Error::InvalidParameter("need at least one output".into()));
        }
        let (p, d) = (self.n_features(), self.d);
        let mut rng = rng_from_seed(seed);
        let mut x = Vec::with_capacity(n * p);
        let mut y = Vec::with_capacity(n * d);
        for _ in 0..n {
            let start = x.len();
            for _ in 0..p {
                x.push(self.input_law.draw(&mut rng));
            }
            let row = &x[start..];
            let f = friedman1_function(row, self.x5_coef);
            let mut prev = f;
            for j in 0..d {
                let eps = self.noise_sd * rng.sample::<f64, _>(StandardNormal);
                let v = match self.kind {
                    FriedmanMultiKind::Group => f + eps,
                    FriedmanMultiKind::Chain => prev + eps,
                    FriedmanMultiKind::Ind => friedman1_function(&row[5 * j..], self.x5_coef) + eps,
                };
                prev = v;
                y.push(v);
            }
        }
        Dataset::new(
            Features::Dense(DenseMatrix::new(n, p, Layout::RowMajor, x)?),
            DenseMatrix::new(n, d, Layout::RowMajor, y)?,
            Task::Regression,
        )
    }

    fn bayes(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(match self.kind {
            FriedmanMultiKind::Chain | FriedmanMultiKind::Group => {
                vec![friedman1_function(x, self.x5_coef); self.d]
            }
            FriedmanMultiKind::Ind => (0..self.d)
                .map(|j| friedman1_function(&x[5 * j..], self.x5_coef))
                .collect(),
        })
    }

    fn noise_variance(&self) -> Option<Vec<f64>> {
        let s2 = self.noise_sd * self.noise_sd;
        Some(match self.kind {
            FriedmanMultiKind::Chain => (1..=self.d).map(|j| j as f64 * s2).collect(),
            _ => vec![s2; self.d],
        })
    }
}

pub fn gen_friedman1_chain(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    FriedmanMulti::new(FriedmanMultiKind::Chain, d).generate(n, seed)
}

pub fn gen_friedman1_group(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    FriedmanMulti::new(FriedmanMultiKind::Group, d).generate(n, seed)
}

pub fn gen_friedman1_ind(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    FriedmanMulti::new(FriedmanMultiKind::Ind, d).generate(n, seed)
}

/// Two 20-dimensional unit Gaussians centred at `-a` and `+a`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Twonorm;

impl Twonorm {
    pub const N_FEATURES: usize = 20;

    /// Bayes classifier: the sign of the coordinate sum (ties go to +1).
    pub fn bayes_label(x: &[f64]) -> f64 {
        if x.iter().sum::<f64>() >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl Generator for Twonorm {
    fn generate(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let p = Self::N_FEATURES;
        let mut rng = rng_from_seed(seed);
        let mut labels: Vec<f64> = (0..n).map(|i| if i < n / 2 { 1.0 } else { -1.0 }).collect();
        labels.shuffle(&mut rng);
        let mut x = Vec::with_capacity(n * p);
        for &label in &labels {
            for _ in 0..p {
                x.push(label * TWONORM_SHIFT + rng.sample::<f64, _>(StandardNormal));
            }
        }
        Dataset::new(
            Features::Dense(DenseMatrix::new(n, p, Layout::RowMajor, x)?),
            DenseMatrix::from_column(labels),
            Task::Binary,
        )
    }
}

pub fn gen_twonorm(n: usize, seed: u64) -> Result<Dataset> {
    Twonorm.generate(n, seed)
}

/// Multilabel problem on Gaussian inputs: label `j` is on when
/// `x_a + x_b + noise_sd * e > 0.5 + j / d`, with `a = j mod p` and
/// `b = (j + 1 + j / p) mod p`. Labels sharing an input are correlated and
/// label density decreases with `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSumMultilabel {
    pub n_features: usize,
    pub d: usize,
    pub noise_sd: f64,
}

impl PairSumMultilabel {
    pub fn new(n_features: usize, d: usize) -> Self {
        PairSumMultilabel {
            n_features,
            d,
            noise_sd: 0.5,
        }
    }

    /// Input pair and threshold of label `j`.
    pub fn label_rule(&self, j: usize) -> (usize, usize, f64) {
        let p = self.n_features;
        (j % p, (j + 1 + j / p) % p, 0.5 + j as f64 / self.d as f64)
    }
}

impl Generator for PairSumMultilabel {
    fn generate(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if self.n_features < 2 || self.d == 0 {
            return Err(Error::InvalidParameter("need at least 2 features and 1 label".into()));
        }
        let (p, d) = (self.n_features, self.d);
        let mut rng = rng_from_seed(seed);
        let mut x = Vec::with_capacity(n * p);
        let mut y = Vec::with_capacity(n * d);
        for _ in 0..n {
            let start = x.len();
            for _ in 0..p {
                x.push(rng.sample::<f64, _>(StandardNormal));
            }
            for j in 0..d {
                let (a, b, t) = self.label_rule(j);
                let e: f64 = rng.sample(StandardNormal);
                let on = x[start + a] + x[start + b] + self.noise_sd * e > t;
                y.push(if on { 1.0 } else { 0.0 });
            }
        }
        Dataset::new(
            Features::Dense(DenseMatrix::new(n, p, Layout::RowMajor, x)?),
            DenseMatrix::new(n, d, Layout::RowMajor, y)?,
            Task::Multilabel,
        )
    }
}

/// CSC inputs with i.i.d. N(0,1) non-zeros at the given expected density and
/// a U(0,1) target independent of the inputs.
pub fn gen_random_sparse_regression(n: usize, p: usize, density: f64, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidParameter(format!("density {density} outside [0, 1]")));
    }
    let mut rng = rng_from_seed(seed);
    let binomial = Binomial::new(n as u64, density)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut indptr = Vec::with_capacity(p + 1);
    let mut indices = Vec::new();
    let mut data = Vec::new();
    indptr.push(0);
    for _ in 0..p {
        let k = binomial.sample(&mut rng) as usize;
        let mut rows = rand::seq::index::sample(&mut rng, n, k).into_vec();
        rows.sort_unstable();
        for r in rows {
            let v: f64 = rng.sample(StandardNormal);
            if v != 0.0 {
                indices.push(r);
                data.push(v);
            }
        }
        indptr.push(indices.len());
    }
    let x = CscMatrix::try_new(n, p, indptr, indices, data)?;
    let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    Dataset::new(Features::Sparse(x), DenseMatrix::from_column(y), Task::Regression)
}
