//! Random projections `Phi` of the output space and distance-distortion diagnostics.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{CsrMatrix, DenseMatrix, Layout};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionKind {
    /// Entries i.i.d. N(0, 1/q).
    Gaussian,
    /// Entries `±sqrt(s/q)` with probability `1/(2s)` each, zero otherwise.
    /// `s = 1` is the dense Rademacher, `s = 3` Achlioptas, `s = sqrt(d)` the very sparse variant.
    Rademacher { s: f64 },
    /// `q` distinct rows of the identity, drawn without replacement.
    Subsample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProjectionStorage {
    Dense(DenseMatrix),
    Sparse(CsrMatrix),
}

/// A `q x d` projection matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionMatrix {
    pub q: usize,
    pub d: usize,
    pub kind: ProjectionKind,
    pub storage: ProjectionStorage,
}

pub fn sample_projection(kind: ProjectionKind, q: usize, d: usize, rng: &mut Rng) -> Result<ProjectionMatrix> {
    if q == 0 || d == 0 {
        return Err(Error::InvalidProjection(format!("cannot build a {q}x{d} projection")));
    }
    let storage = match kind {
        ProjectionKind::Gaussian => {
            let normal = Normal::new(0.0, (1.0 / q as f64).sqrt())
                .map_err(|e| Error::InvalidProjection(e.to_string()))?;
            let values = (0..q * d).map(|_| normal.sample(rng)).collect();
            ProjectionStorage::Dense(DenseMatrix::new(q, d, Layout::RowMajor, values)?)
        }
        ProjectionKind::Rademacher { s } => {
            if !(s >= 1.0) || !s.is_finite() {
                return Err(Error::InvalidProjection(format!("sparsity s = {s} must be >= 1")));
            }
            let magnitude = (s / q as f64).sqrt();
            if s == 1.0 {
                let values = (0..q * d)
                    .map(|_| if rng.random::<bool>() { magnitude } else { -magnitude })
                    .collect();
                ProjectionStorage::Dense(DenseMatrix::new(q, d, Layout::RowMajor, values)?)
            } else {
                let half = 0.5 / s;
                let mut indptr = Vec::with_capacity(q + 1);
                let mut indices = Vec::new();
                let mut data = Vec::new();
                indptr.push(0);
                for _ in 0..q {
                    for j in 0..d {
                        let u: f64 = rng.random();
                        if u < half {
                            indices.push(j);
                            data.push(-magnitude);
                        } else if u < 2.0 * half {
                            indices.push(j);
                            data.push(magnitude);
                        }
                    }
                    indptr.push(indices.len());
                }
                ProjectionStorage::Sparse(CsrMatrix::try_new(q, d, indptr, indices, data)?)
            }
        }
        ProjectionKind::Subsample => {
            if q > d {
                return Err(Error::InvalidProjection(format!(
                    "cannot subsample {q} distinct outputs out of {d}"
                )));
            }
            let rows = rand::seq::index::sample(rng, d, q).into_vec();
            let indptr = (0..=q).collect();
            ProjectionStorage::Sparse(CsrMatrix::try_new(q, d, indptr, rows, vec![1.0; q])?)
        }
    };
    Ok(ProjectionMatrix { q, d, kind, storage })
}

impl ProjectionMatrix {
    /// Output index kept by each row of a subsample projection.
    pub fn subsampled_outputs(&self) -> Option<&[usize]> {
        match (&self.kind, &self.storage) {
            (ProjectionKind::Subsample, ProjectionStorage::Sparse(m)) => Some(m.indices()),
            _ => None,
        }
    }

    /// Dense `q x d` copy.
    pub fn to_dense(&self) -> DenseMatrix {
        match &self.storage {
            ProjectionStorage::Dense(m) => m.clone(),
            ProjectionStorage::Sparse(m) => m.to_dense(Layout::RowMajor).expect("projection fits in memory"),
        }
    }

    /// `Phi * v` for a single vector of length `d`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.d);
        debug_assert_eq!(out.len(), self.q);
        match &self.storage {
            ProjectionStorage::Dense(m) => {
                for (k, o) in out.iter_mut().enumerate() {
                    let row = m.row(k).expect("dense projections are row-major");
                    *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
                }
            }
            ProjectionStorage::Sparse(m) => {
                for (k, o) in out.iter_mut().enumerate() {
                    let (cols, vals) = m.row(k);
                    *o = cols.iter().zip(vals).map(|(&j, a)| a * v[j]).sum();
                }
            }
        }
    }
}

/// Row `i` of the result is `Phi y_i`.
pub fn project(phi: &ProjectionMatrix, y: &DenseMatrix) -> Result<DenseMatrix> {
    if y.n_cols() != phi.d {
        return Err(Error::Shape(format!(
            "projection expects {} outputs, Y has {}",
            phi.d,
            y.n_cols()
        )));
    }
    let mut out = DenseMatrix::zeros(y.n_rows(), phi.q, Layout::RowMajor);
    let mut row = vec![0.0; phi.d];
    for i in 0..y.n_rows() {
        for (j, r) in row.iter_mut().enumerate() {
            *r = y.get(i, j);
        }
        phi.apply(&row, out.row_mut(i).expect("row-major"));
    }
    Ok(out)
}

/// Smallest `q` with `q >= 8 ln(n) / eps^2`, at least 1.
pub fn jl_min_dimension(epsilon: f64, n: f64) -> usize {
    let q = (8.0 * n.ln() / (epsilon * epsilon)).ceil();
    if q.is_nan() || q < 1.0 {
        1
    } else {
        q as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionStats {
    pub mean: f64,
    pub max: f64,
    /// Pairs actually used (zero-distance pairs are skipped).
    pub n_pairs: usize,
}

/// Relative distortion `| ||Phi(y_i - y_j)||^2 / ||y_i - y_j||^2 - 1 |` over the given pairs.
pub fn distortion_stats(y: &DenseMatrix, phi: &ProjectionMatrix, pairs: &[(usize, usize)]) -> Result<DistortionStats> {
    let z = project(phi, y)?;
    let mut sum = 0.0;
    let mut max: f64 = 0.0;
    let mut used = 0;
    for &(i, j) in pairs {
        let orig: f64 = (0..y.n_cols()).map(|k| (y.get(i, k) - y.get(j, k)).powi(2)).sum();
        if orig == 0.0 {
            continue;
        }
        let proj: f64 = (0..z.n_cols()).map(|k| (z.get(i, k) - z.get(j, k)).powi(2)).sum();
        let dist = (proj / orig - 1.0).abs();
        sum += dist;
        max = max.max(dist);
        used += 1;
    }
    Ok(DistortionStats {
        mean: if used > 0 { sum / used as f64 } else { 0.0 },
        max,
        n_pairs: used,
    })
}

/// Every unordered pair `(i, j)`, `i < j`.
pub fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Total variance: the trace of the (population) covariance of the rows.
pub fn total_variance(y: &DenseMatrix) -> f64 {
    let n = y.n_rows() as f64;
    (0..y.n_cols())
        .map(|j| {
            let c = y.column_vec(j);
            let m = c.iter().sum::<f64>() / n;
            c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n
        })
        .sum()
}

/// `1/(2 n^2) sum_i sum_j ||y_i - y_j||^2`, equal to [`total_variance`].
pub fn pairwise_variance(y: &DenseMatrix) -> f64 {
    let n = y.n_rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += (0..y.n_cols()).map(|k| (y.get(i, k) - y.get(j, k)).powi(2)).sum::<f64>();
        }
    }
    s / (2.0 * (n * n) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand_distr::StandardNormal;

    fn gaussian_matrix(n: usize, d: usize, seed: u64) -> DenseMatrix {
        let mut rng = rng_from_seed(seed);
        let v = (0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        DenseMatrix::new(n, d, Layout::RowMajor, v).unwrap()
    }

    #[test]
    fn jl_dimension_examples() {
        assert_eq!(jl_min_dimension(1.0, std::f64::consts::E), 8);
        assert_eq!(jl_min_dimension(0.429, 100.0), 201);
        assert_eq!(jl_min_dimension(1e9, 100.0), 1);
        assert_eq!(jl_min_dimension(f64::INFINITY, 100.0), 1);
    }

    #[test]
    fn full_subsample_is_a_permutation() {
        let mut rng = rng_from_seed(1);
        let phi = sample_projection(ProjectionKind::Subsample, 6, 6, &mut rng).unwrap();
        let mut rows = phi.subsampled_outputs().unwrap().to_vec();
        rows.sort_unstable();
        assert_eq!(rows, (0..6).collect::<Vec<_>>());
        let y = gaussian_matrix(5, 6, 2);
        let z = project(&phi, &y).unwrap();
        for (k, &j) in phi.subsampled_outputs().unwrap().iter().enumerate() {
            assert_eq!(z.column_vec(k), y.column_vec(j));
        }
        let stats = distortion_stats(&y, &phi, &all_pairs(5)).unwrap();
        assert!(stats.max < 1e-12);
        assert!(sample_projection(ProjectionKind::Subsample, 7, 6, &mut rng).is_err());
    }

    #[test]
    fn rademacher_sign_frequency() {
        let mut rng = rng_from_seed(3);
        let (q, d) = (1000, 1000);
        let phi = sample_projection(ProjectionKind::Rademacher { s: 1.0 }, q, d, &mut rng).unwrap();
        let m = phi.to_dense();
        let mag = 1.0 / (q as f64).sqrt();
        assert!(m.values().iter().all(|v| (v.abs() - mag).abs() < 1e-15));
        let pos = m.values().iter().filter(|v| **v > 0.0).count() as f64 / (q * d) as f64;
        assert!((pos - 0.5).abs() < 0.01);
    }

    #[test]
    fn sparse_rademacher_entry_law() {
        let mut rng = rng_from_seed(4);
        let (q, d, s) = (200, 500, 3.0);
        let phi = sample_projection(ProjectionKind::Rademacher { s }, q, d, &mut rng).unwrap();
        let m = phi.to_dense();
        let mag = (s / q as f64).sqrt();
        assert!(m.values().iter().all(|v| *v == 0.0 || (v.abs() - mag).abs() < 1e-15));
        let nz = m.nnz() as f64 / (q * d) as f64;
        assert!((nz - 1.0 / s).abs() < 0.01);
    }

    #[test]
    fn gaussian_preserves_norm_in_expectation() {
        let mut rng = rng_from_seed(5);
        let d = 20;
        let v: Vec<f64> = (0..d).map(|k| (k as f64 - 7.0) / 3.0).collect();
        let norm2: f64 = v.iter().map(|x| x * x).sum();
        let draws = 10_000;
        let mut acc = 0.0;
        let mut out = vec![0.0; 5];
        for _ in 0..draws {
            let phi = sample_projection(ProjectionKind::Gaussian, 5, d, &mut rng).unwrap();
            phi.apply(&v, &mut out);
            acc += out.iter().map(|x| x * x).sum::<f64>();
        }
        assert!((acc / draws as f64 / norm2 - 1.0).abs() < 0.02);
    }

    #[test]
    fn projecting_one_hot_returns_a_column() {
        let mut rng = rng_from_seed(6);
        let phi = sample_projection(ProjectionKind::Gaussian, 4, 7, &mut rng).unwrap();
        let mut y = DenseMatrix::zeros(1, 7, Layout::RowMajor);
        y.set(0, 3, 1.0);
        let z = project(&phi, &y).unwrap();
        assert_eq!(z.row(0).unwrap(), phi.to_dense().column_vec(3).as_slice());
        let y2 = gaussian_matrix(3, 7, 0);
        let a = project(&phi, &y2.scale(2.5)).unwrap();
        let b = project(&phi, &y2).unwrap().scale(2.5);
        for (u, w) in a.values().iter().zip(b.values()) {
            assert!((u - w).abs() < 1e-12);
        }
        assert!(matches!(project(&phi, &gaussian_matrix(2, 6, 0)), Err(Error::Shape(_))));
    }

    #[test]
    fn orthonormal_square_has_no_distortion() {
        // 2-d rotation by 30 degrees.
        let (c, s) = (30f64.to_radians().cos(), 30f64.to_radians().sin());
        let phi = ProjectionMatrix {
            q: 2,
            d: 2,
            kind: ProjectionKind::Gaussian,
            storage: ProjectionStorage::Dense(DenseMatrix::from_rows(&[[c, -s], [s, c]]).unwrap()),
        };
        let y = gaussian_matrix(10, 2, 1);
        let mut pairs = all_pairs(10);
        pairs.push((3, 3));
        let stats = distortion_stats(&y, &phi, &pairs).unwrap();
        assert!(stats.max < 1e-12);
        assert_eq!(stats.n_pairs, 45);
    }

    #[test]
    fn distortion_decreases_with_q() {
        let y = gaussian_matrix(200, 500, 7);
        let pairs = all_pairs(200);
        let mut rng = rng_from_seed(8);
        let means: Vec<f64> = [1, 10, 100, 1000]
            .iter()
            .map(|&q| {
                let phi = sample_projection(ProjectionKind::Gaussian, q, 500, &mut rng).unwrap();
                distortion_stats(&y, &phi, &pairs).unwrap().mean
            })
            .collect();
        assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
    }

    proptest::proptest! {
        #[test]
        fn variance_identity(n in 1usize..30, d in 1usize..6, seed in 0u64..1000) {
            let y = gaussian_matrix(n, d, seed);
            let a = total_variance(&y);
            let b = pairwise_variance(&y);
            proptest::prop_assert!((a - b).abs() <= 1e-10 * a.max(1e-300));
        }
    }
}
