use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Dataset, Features, Task};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    /// Split each class (distinct target row) separately.
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Self {
        SplitSpec { train_fraction, seed, stratified: false }
    }
}

/// Train and test row ids, each sorted ascending.
pub fn split_indices(ds: &Dataset, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = ds.n_samples();
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction {} outside (0, 1)",
            spec.train_fraction
        )));
    }
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two samples to split".into()));
    }
    let mut rng = rng_from_seed(spec.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    if spec.stratified {
        if ds.task == Task::Regression {
            return Err(Error::InvalidParameter("stratified split needs class targets".into()));
        }
        let mut classes: BTreeMap<Vec<bool>, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            let key = (0..ds.n_outputs()).map(|j| ds.y.get(i, j) > 0.0).collect();
            classes.entry(key).or_default().push(i);
        }
        for mut members in classes.into_values() {
            members.shuffle(&mut rng);
            let k = (spec.train_fraction * members.len() as f64).round() as usize;
            train.extend_from_slice(&members[..k]);
            test.extend_from_slice(&members[k..]);
        }
        if train.is_empty() || test.is_empty() {
            return Err(Error::InvalidParameter("stratified split left one side empty".into()));
        }
    } else {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let k = ((spec.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
        train.extend_from_slice(&perm[..k]);
        test.extend_from_slice(&perm[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn train_test_split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds, spec)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Per-column affine map `v -> (v - mean) / scale`, with the population
/// standard deviation as scale (1 for constant columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl ColumnScaler {
    pub fn fit(m: &DenseMatrix) -> Result<Self> {
        let n = m.n_rows();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut mean = Vec::with_capacity(m.n_cols());
        let mut scale = Vec::with_capacity(m.n_cols());
        for j in 0..m.n_cols() {
            let col = m.column_vec(j);
            let mu = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n as f64;
            mean.push(mu);
            scale.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Ok(ColumnScaler { mean, scale })
    }

    fn check(&self, m: &DenseMatrix) -> Result<()> {
        if m.n_cols() != self.mean.len() {
            return Err(Error::Shape(format!(
                "scaler fitted on {} columns, got {}",
                self.mean.len(),
                m.n_cols()
            )));
        }
        Ok(())
    }

    pub fn transform(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        self.check(m)?;
        let mut out = m.clone();
        for i in 0..m.n_rows() {
            for j in 0..m.n_cols() {
                out.set(i, j, (m.get(i, j) - self.mean[j]) / self.scale[j]);
            }
        }
        Ok(out)
    }

    pub fn inverse_transform(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        self.check(m)?;
        let mut out = m.clone();
        for i in 0..m.n_rows() {
            for j in 0..m.n_cols() {
                out.set(i, j, m.get(i, j) * self.scale[j] + self.mean[j]);
            }
        }
        Ok(out)
    }
}

/// Standardizes the (dense) input columns and returns the fitted transform,
/// which should be reused on test data.
pub fn standardize(ds: &Dataset) -> Result<(Dataset, ColumnScaler)> {
    let Features::Dense(x) = &ds.x else {
        return Err(Error::Unsupported("centering a sparse matrix would densify it".into()));
    };
    let scaler = ColumnScaler::fit(x)?;
    let out = Dataset { x: Features::Dense(scaler.transform(x)?), y: ds.y.clone(), task: ds.task };
    Ok((out, scaler))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::gen_friedman1;
    use crate::matrix::Layout;

    fn labelled(labels: &[f64]) -> Dataset {
        let x = DenseMatrix::from_column((0..labels.len()).map(|i| i as f64).collect());
        Dataset::new(Features::Dense(x), DenseMatrix::from_column(labels.to_vec()), Task::Binary).unwrap()
    }

    #[test]
    fn half_split_of_ten() {
        let ds = gen_friedman1(10, 1.0, 0).unwrap();
        let (tr, te) = train_test_split(&ds, &SplitSpec::new(0.5, 1)).unwrap();
        assert_eq!((tr.n_samples(), te.n_samples()), (5, 5));
        let (a, b) = split_indices(&ds, &SplitSpec::new(0.5, 1)).unwrap();
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!((a, b), split_indices(&ds, &SplitSpec::new(0.5, 1)).unwrap());
    }

    #[test]
    fn stratified_counts() {
        let mut labels = vec![1.0; 8];
        labels.extend([-1.0, -1.0]);
        let ds = labelled(&labels);
        let spec = SplitSpec { train_fraction: 0.5, seed: 3, stratified: true };
        let (tr, te) = train_test_split(&ds, &spec).unwrap();
        for part in [&tr, &te] {
            let pos = part.y.values().iter().filter(|v| **v == 1.0).count();
            assert_eq!((pos, part.n_samples() - pos), (4, 1));
        }
    }

    #[test]
    fn extreme_fractions_keep_both_sides() {
        let ds = gen_friedman1(3, 1.0, 0).unwrap();
        let (tr, te) = train_test_split(&ds, &SplitSpec::new(0.01, 0)).unwrap();
        assert_eq!((tr.n_samples(), te.n_samples()), (1, 2));
        assert!(train_test_split(&ds, &SplitSpec::new(1.0, 0)).is_err());
    }

    #[test]
    fn standardize_examples() {
        let x = DenseMatrix::from_rows(&[[1.0, 7.0], [3.0, 7.0]]).unwrap();
        let ds = Dataset::new(Features::Dense(x), DenseMatrix::from_column(vec![0.0, 1.0]), Task::Regression).unwrap();
        let (out, scaler) = standardize(&ds).unwrap();
        let Features::Dense(z) = &out.x else { panic!() };
        assert_eq!(z.column_vec(0), vec![-1.0, 1.0]);
        assert_eq!(z.column_vec(1), vec![0.0, 0.0]);
        assert_eq!(scaler.scale[1], 1.0);
    }

    #[test]
    fn train_statistics_are_reused_on_test() {
        let ds = gen_friedman1(200, 1.0, 4).unwrap();
        let (tr, te) = train_test_split(&ds, &SplitSpec::new(0.7, 2)).unwrap();
        let (tr_std, scaler) = standardize(&tr).unwrap();
        let Features::Dense(z) = &tr_std.x else { panic!() };
        for j in 0..z.n_cols() {
            let c = z.column_vec(j);
            let m = c.iter().sum::<f64>() / c.len() as f64;
            let v = c.iter().map(|x| (x - m).powi(2)).sum::<f64>() / c.len() as f64;
            assert!(m.abs() < 1e-12 && (v - 1.0).abs() < 1e-12);
        }
        let Features::Dense(xt) = &te.x else { panic!() };
        let zt = scaler.transform(xt).unwrap();
        for i in 0..xt.n_rows() {
            for j in 0..xt.n_cols() {
                let expected = (xt.get(i, j) - scaler.mean[j]) / scaler.scale[j];
                assert_eq!(zt.get(i, j), expected);
            }
        }
        let back = scaler.inverse_transform(&zt).unwrap();
        for (a, b) in back.values().iter().zip(xt.to_layout(Layout::RowMajor).values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
