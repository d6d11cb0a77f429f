use super::{Tree, TreeNode};
use crate::datasets::Features;
use crate::error::{Error, Result};
use crate::matrix::{CsrMatrix, DenseMatrix, Layout};

/// Per-batch lookup for CSR rows: `mask[j] == row` marks feature `j` as stored
/// in the current row, with its value in `value[j]`. Stamping with the row id
/// avoids clearing the arrays between rows.
struct SparseRowLookup {
    mask: Vec<usize>,
    value: Vec<f64>,
}

impl SparseRowLookup {
    fn new(p: usize) -> Self {
        SparseRowLookup {
            mask: vec![usize::MAX; p],
            value: vec![0.0; p],
        }
    }

    fn load(&mut self, x: &CsrMatrix, row: usize) {
        let (cols, vals) = x.row(row);
        for (&j, &v) in cols.iter().zip(vals) {
            self.mask[j] = row;
            self.value[j] = v;
        }
    }

    #[inline]
    fn get(&self, row: usize, j: usize) -> f64 {
        if self.mask[j] == row {
            self.value[j]
        } else {
            0.0
        }
    }
}

impl Tree {
    /// Id of the leaf reached by a sample whose feature `j` is `feature(j)`.
    #[inline]
    pub fn leaf_of(&self, feature: impl Fn(usize) -> f64) -> usize {
        let mut id = 0;
        while let TreeNode::Test {
            feature: f,
            threshold,
            left,
            right,
            ..
        } = &self.nodes[id]
        {
            id = if feature(*f) <= *threshold { *left } else { *right };
        }
        id
    }

    /// Node ids on the root-to-leaf path, root first.
    pub fn decision_path(&self, feature: impl Fn(usize) -> f64, path: &mut Vec<usize>) {
        path.clear();
        let mut id = 0;
        path.push(id);
        while let TreeNode::Test {
            feature: f,
            threshold,
            left,
            right,
            ..
        } = &self.nodes[id]
        {
            id = if feature(*f) <= *threshold { *left } else { *right };
            path.push(id);
        }
    }

    pub fn leaf_value(&self, id: usize) -> &[f64] {
        match &self.nodes[id] {
            TreeNode::Leaf { value, .. } => value,
            TreeNode::Test { .. } => panic!("node {id} is not a leaf"),
        }
    }

    fn check_width(&self, p: usize) -> Result<()> {
        if p != self.n_features {
            return Err(Error::Shape(format!(
                "tree expects {} features, input has {p}",
                self.n_features
            )));
        }
        Ok(())
    }

    /// Leaf id reached by every row.
    pub fn apply(&self, x: &Features) -> Result<Vec<usize>> {
        self.check_width(x.n_cols())?;
        Ok(match x {
            Features::Dense(m) => (0..m.n_rows()).map(|i| self.leaf_of(|j| m.get(i, j))).collect(),
            Features::Sparse(m) => {
                let csr = m.to_csr();
                let mut lookup = SparseRowLookup::new(self.n_features);
                (0..csr.n_rows())
                    .map(|i| {
                        lookup.load(&csr, i);
                        self.leaf_of(|j| lookup.get(i, j))
                    })
                    .collect()
            }
        })
    }

    pub fn predict_dense(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_width(x.n_cols())?;
        let mut out = DenseMatrix::zeros(x.n_rows(), self.n_outputs, Layout::RowMajor);
        for i in 0..x.n_rows() {
            let leaf = self.leaf_of(|j| x.get(i, j));
            out.row_mut(i).expect("row-major").copy_from_slice(self.leaf_value(leaf));
        }
        Ok(out)
    }

    /// Prediction on CSR rows without densifying them.
    pub fn predict_csr(&self, x: &CsrMatrix) -> Result<DenseMatrix> {
        self.check_width(x.n_cols())?;
        let mut out = DenseMatrix::zeros(x.n_rows(), self.n_outputs, Layout::RowMajor);
        let mut lookup = SparseRowLookup::new(self.n_features);
        for i in 0..x.n_rows() {
            lookup.load(x, i);
            let leaf = self.leaf_of(|j| lookup.get(i, j));
            out.row_mut(i).expect("row-major").copy_from_slice(self.leaf_value(leaf));
        }
        Ok(out)
    }

    pub fn predict(&self, x: &Features) -> Result<DenseMatrix> {
        match x {
            Features::Dense(m) => self.predict_dense(m),
            Features::Sparse(m) => self.predict_csr(&m.to_csr()),
        }
    }

    /// Same structure, with every leaf value replaced by the (weighted) mean of
    /// the rows of `y` reaching it. `y` may have a different width than the
    /// targets the tree was grown on.
    pub fn relabel_leaves(&self, x: &Features, y: &DenseMatrix, weights: Option<&[f64]>) -> Result<Tree> {
        let n = x.n_rows();
        if y.n_rows() != n {
            return Err(Error::Shape(format!("X has {n} rows but Y has {}", y.n_rows())));
        }
        if weights.is_some_and(|w| w.len() != n) {
            return Err(Error::Shape("one weight per sample is required".into()));
        }
        let leaves = self.apply(x)?;
        let d = y.n_cols();
        let mut w = vec![0.0; self.nodes.len()];
        let mut sums = vec![0.0; self.nodes.len() * d];
        for (i, &leaf) in leaves.iter().enumerate() {
            let wi = weights.map_or(1.0, |w| w[i]);
            if wi == 0.0 {
                continue;
            }
            w[leaf] += wi;
            for j in 0..d {
                sums[leaf * d + j] += wi * y.get(i, j);
            }
        }
        let mut nodes = self.nodes.clone();
        for (id, node) in nodes.iter_mut().enumerate() {
            if let TreeNode::Leaf { value, .. } = node {
                if w[id] <= 0.0 {
                    return Err(Error::Relabel(id));
                }
                *value = sums[id * d..(id + 1) * d].iter().map(|s| s / w[id]).collect();
            }
        }
        Ok(Tree {
            nodes,
            n_features: self.n_features,
            n_outputs: d,
        })
    }

    /// Mutable access to leaf values, for callers that rescale a fitted tree.
    pub fn map_leaf_values(&mut self, mut f: impl FnMut(&mut Vec<f64>)) {
        let mut width = None;
        for node in &mut self.nodes {
            if let TreeNode::Leaf { value, .. } = node {
                f(value);
                width = Some(value.len());
            }
        }
        if let Some(w) = width {
            self.n_outputs = w;
        }
    }
}
