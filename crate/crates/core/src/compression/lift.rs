use rayon::prelude::*;

use crate::datasets::Features;
use crate::error::{Error, Result};
use crate::forest::Forest;
use crate::matrix::{CscMatrix, CsrMatrix, Layout};

/// Flat column index of every forest node: tree `m`'s node `l` is column
/// `offsets[m] + l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorSpace {
    offsets: Vec<usize>,
}

impl IndicatorSpace {
    pub fn new(forest: &Forest) -> Self {
        let mut offsets = Vec::with_capacity(forest.trees().len() + 1);
        offsets.push(0);
        for t in forest.trees() {
            offsets.push(offsets.last().unwrap() + t.n_nodes());
        }
        IndicatorSpace { offsets }
    }

    /// Total node count `q`.
    pub fn n_columns(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn n_trees(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn column(&self, tree: usize, node: usize) -> usize {
        debug_assert!(self.offsets[tree] + node < self.offsets[tree + 1]);
        self.offsets[tree] + node
    }

    /// `(tree, node)` of flat column `j`.
    pub fn node(&self, j: usize) -> (usize, usize) {
        let m = self.offsets.partition_point(|&o| o <= j) - 1;
        (m, j - self.offsets[m])
    }

    /// Columns of tree `m`.
    pub fn range(&self, m: usize) -> std::ops::Range<usize> {
        self.offsets[m]..self.offsets[m + 1]
    }
}

/// Node-indicator matrix: entry `(i, j)` is 1 iff sample `i` passes through
/// node `j` (every node of its root-to-leaf path in each tree).
pub fn lift(forest: &Forest, x: &Features) -> Result<CscMatrix> {
    if x.n_cols() != forest.n_features() {
        return Err(Error::Shape(format!(
            "forest expects {} features, input has {}",
            forest.n_features(),
            x.n_cols()
        )));
    }
    let space = IndicatorSpace::new(forest);
    let n = x.n_rows();
    let rows: Vec<Vec<usize>> = match x {
        Features::Dense(m) => {
            let m = m.to_layout(Layout::RowMajor);
            (0..n)
                .into_par_iter()
                .map(|i| row_columns(forest, &space, |j| m.get(i, j)))
                .collect()
        }
        Features::Sparse(m) => {
            let csr = m.to_csr();
            (0..n)
                .into_par_iter()
                .map(|i| {
                    let (cols, vals) = csr.row(i);
                    row_columns(forest, &space, |j| cols.binary_search(&j).map_or(0.0, |k| vals[k]))
                })
                .collect()
        }
    };
    let mut indptr = Vec::with_capacity(n + 1);
    indptr.push(0);
    let mut indices = Vec::with_capacity(rows.iter().map(Vec::len).sum());
    for r in rows {
        indices.extend(r);
        indptr.push(indices.len());
    }
    let data = vec![1.0; indices.len()];
    Ok(CsrMatrix::try_new(n, space.n_columns(), indptr, indices, data)?.to_csc())
}

fn row_columns(forest: &Forest, space: &IndicatorSpace, feature: impl Fn(usize) -> f64) -> Vec<usize> {
    let mut cols = Vec::new();
    let mut path = Vec::new();
    for (m, t) in forest.trees().iter().enumerate() {
        t.decision_path(&feature, &mut path);
        path.sort_unstable();
        cols.extend(path.iter().map(|&l| space.column(m, l)));
    }
    cols
}
