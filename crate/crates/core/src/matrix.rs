//! Numeric matrix containers: dense (row- or column-major), CSC and CSR.
//!
//! Sparse matrices are canonical: indices within a column (CSC) or row (CSR)
//! are strictly increasing and explicit zeros are never stored. Split search
//! relies on "stored" meaning "non-zero".

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on dense allocations made by [`CscMatrix::to_dense`] and
/// [`CsrMatrix::to_dense`] (4 GiB).
pub const DEFAULT_DENSE_BYTE_CAP: usize = 4 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    RowMajor,
    ColumnMajor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    layout: Layout,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(n_rows: usize, n_cols: usize, layout: Layout, values: Vec<f64>) -> Result<Self> {
        if n_rows.checked_mul(n_cols) != Some(values.len()) {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {n_rows}x{n_cols} matrix",
                values.len()
            )));
        }
        Ok(DenseMatrix {
            n_rows,
            n_cols,
            layout,
            values,
        })
    }

    pub fn zeros(n_rows: usize, n_cols: usize, layout: Layout) -> Self {
        DenseMatrix {
            n_rows,
            n_cols,
            layout,
            values: vec![0.0; n_rows * n_cols],
        }
    }

    /// Builds a row-major matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n_cols {
                return Err(Error::Shape(format!(
                    "row {i} has {} columns, expected {n_cols}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), n_cols, Layout::RowMajor, values)
    }

    pub fn from_column(values: Vec<f64>) -> Self {
        DenseMatrix {
            n_rows: values.len(),
            n_cols: 1,
            layout: Layout::RowMajor,
            values,
        }
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    #[inline]
    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        match self.layout {
            Layout::RowMajor => i * self.n_cols + j,
            Layout::ColumnMajor => j * self.n_rows + i,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        self.values[self.offset(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let o = self.offset(i, j);
        self.values[o] = v;
    }

    /// Contiguous row slice; only available for row-major storage.
    #[inline]
    pub fn row(&self, i: usize) -> Option<&[f64]> {
        match self.layout {
            Layout::RowMajor => Some(&self.values[i * self.n_cols..(i + 1) * self.n_cols]),
            Layout::ColumnMajor => None,
        }
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> Option<&mut [f64]> {
        match self.layout {
            Layout::RowMajor => Some(&mut self.values[i * self.n_cols..(i + 1) * self.n_cols]),
            Layout::ColumnMajor => None,
        }
    }

    /// Contiguous column slice; only available for column-major storage.
    #[inline]
    pub fn column(&self, j: usize) -> Option<&[f64]> {
        match self.layout {
            Layout::ColumnMajor => Some(&self.values[j * self.n_rows..(j + 1) * self.n_rows]),
            Layout::RowMajor => None,
        }
    }

    /// Copies row `i` into a fresh vector, whatever the layout.
    pub fn row_vec(&self, i: usize) -> Vec<f64> {
        (0..self.n_cols).map(|j| self.get(i, j)).collect()
    }

    pub fn column_vec(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    pub fn to_layout(&self, layout: Layout) -> DenseMatrix {
        if layout == self.layout {
            return self.clone();
        }
        let mut out = DenseMatrix::zeros(self.n_rows, self.n_cols, layout);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                out.set(i, j, self.get(i, j));
            }
        }
        out
    }

    /// Copies the selected rows (repetitions allowed) into a new matrix with the same layout.
    pub fn select_rows(&self, rows: &[usize]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(rows.len(), self.n_cols, self.layout);
        for (new_i, &i) in rows.iter().enumerate() {
            for j in 0..self.n_cols {
                out.set(new_i, j, self.get(i, j));
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n_cols, self.n_rows, self.layout);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn scale(&self, alpha: f64) -> DenseMatrix {
        DenseMatrix {
            values: self.values.iter().map(|v| v * alpha).collect(),
            ..self.clone()
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    pub fn density(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.nnz() as f64 / self.values.len() as f64
        }
    }

    pub fn to_csc(&self) -> CscMatrix {
        let mut indptr = Vec::with_capacity(self.n_cols + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for j in 0..self.n_cols {
            for i in 0..self.n_rows {
                let v = self.get(i, j);
                if v != 0.0 {
                    indices.push(i);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CscMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            indptr,
            indices,
            data,
        }
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let mut indptr = Vec::with_capacity(self.n_rows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                let v = self.get(i, j);
                if v != 0.0 {
                    indices.push(j);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            indptr,
            indices,
            data,
        }
    }
}

/// Compressed sparse column matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CscMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

/// Compressed sparse row matrix: the transposed storage of [`CscMatrix`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

/// Shared validation for both compressed layouts. `n_major` is the number of
/// slices (columns for CSC) and `n_minor` the index bound inside a slice.
fn validate_compressed(
    n_major: usize,
    n_minor: usize,
    indptr: &[usize],
    indices: &[usize],
    data: &[f64],
) -> Result<()> {
    if indptr.len() != n_major + 1 {
        return Err(Error::Structure(format!(
            "indptr has length {}, expected {}",
            indptr.len(),
            n_major + 1
        )));
    }
    if indptr[0] != 0 || indptr[n_major] != indices.len() || indices.len() != data.len() {
        return Err(Error::Structure(
            "indptr must start at 0 and end at nnz, indices and data must have length nnz".into(),
        ));
    }
    for k in 0..n_major {
        let (a, b) = (indptr[k], indptr[k + 1]);
        if a > b {
            return Err(Error::Structure(format!("indptr decreases at slice {k}")));
        }
        let slice = &indices[a..b];
        if slice.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Structure(format!(
                "indices of slice {k} are not strictly increasing"
            )));
        }
        if slice.last().is_some_and(|&last| last >= n_minor) {
            return Err(Error::Structure(format!("index out of bounds in slice {k}")));
        }
    }
    if data.iter().any(|v| *v == 0.0) {
        return Err(Error::Structure("explicit zeros are not allowed".into()));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Structure("non-finite stored value".into()));
    }
    Ok(())
}

/// Groups `(major, minor, value)` entries into compressed storage. Entries
/// must be in range and unique; zeros are dropped.
fn compress_entries(
    n_major: usize,
    mut entries: Vec<(usize, usize, f64)>,
) -> Result<(Vec<usize>, Vec<usize>, Vec<f64>)> {
    entries.sort_unstable_by_key(|e| (e.0, e.1));
    let mut indptr = vec![0usize; n_major + 1];
    let mut indices = Vec::with_capacity(entries.len());
    let mut data = Vec::with_capacity(entries.len());
    let mut prev: Option<(usize, usize)> = None;
    for (major, minor, v) in entries {
        if prev == Some((major, minor)) {
            return Err(Error::DuplicateEntry {
                row: minor,
                col: major,
            });
        }
        prev = Some((major, minor));
        if v != 0.0 {
            indptr[major + 1] += 1;
            indices.push(minor);
            data.push(v);
        }
    }
    for k in 0..n_major {
        indptr[k + 1] += indptr[k];
    }
    Ok((indptr, indices, data))
}

impl CscMatrix {
    /// Validating constructor from raw parts.
    pub fn try_new(
        n_rows: usize,
        n_cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        data: Vec<f64>,
    ) -> Result<Self> {
        validate_compressed(n_cols, n_rows, &indptr, &indices, &data)?;
        Ok(CscMatrix {
            n_rows,
            n_cols,
            indptr,
            indices,
            data,
        })
    }

    pub fn empty(n_rows: usize, n_cols: usize) -> Self {
        CscMatrix {
            n_rows,
            n_cols,
            indptr: vec![0; n_cols + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    /// Builds a canonical CSC matrix from `(row, col, value)` triplets.
    pub fn from_triplets(triplets: &[(usize, usize, f64)], n_rows: usize, n_cols: usize) -> Result<Self> {
        let mut entries = Vec::with_capacity(triplets.len());
        for &(row, col, v) in triplets {
            if row >= n_rows || col >= n_cols {
                return Err(Error::Index {
                    row,
                    col,
                    n_rows,
                    n_cols,
                });
            }
            entries.push((col, row, v));
        }
        let (indptr, indices, data) = compress_entries(n_cols, entries)?;
        let m = CscMatrix {
            n_rows,
            n_cols,
            indptr,
            indices,
            data,
        };
        debug_assert!(m.check().is_ok());
        Ok(m)
    }

    pub fn check(&self) -> Result<()> {
        validate_compressed(self.n_cols, self.n_rows, &self.indptr, &self.indices, &self.data)
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Row indices and values stored in column `j`.
    #[inline]
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[j], self.indptr[j + 1]);
        (&self.indices[a..b], &self.data[a..b])
    }

    #[inline]
    pub fn col_nnz(&self, j: usize) -> usize {
        self.indptr[j + 1] - self.indptr[j]
    }

    pub fn density(&self) -> f64 {
        density(self.nnz(), self.n_rows, self.n_cols)
    }

    /// Value at `(i, j)` by binary search within column `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (rows, vals) = self.col(j);
        rows.binary_search(&i).map_or(0.0, |p| vals[p])
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let (indptr, indices, data) =
            transpose_compressed(self.n_cols, self.n_rows, &self.indptr, &self.indices, &self.data);
        let m = CsrMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            indptr,
            indices,
            data,
        };
        debug_assert!(m.check().is_ok());
        m
    }

    pub fn to_dense(&self, layout: Layout) -> Result<DenseMatrix> {
        self.to_dense_with_cap(layout, DEFAULT_DENSE_BYTE_CAP)
    }

    pub fn to_dense_with_cap(&self, layout: Layout, cap: usize) -> Result<DenseMatrix> {
        check_dense_cap(self.n_rows, self.n_cols, cap)?;
        let mut out = DenseMatrix::zeros(self.n_rows, self.n_cols, layout);
        for j in 0..self.n_cols {
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                out.set(i, j, v);
            }
        }
        Ok(out)
    }

    /// Copies the selected rows (repetitions allowed) into a new matrix.
    pub fn select_rows(&self, rows: &[usize]) -> CscMatrix {
        // old row -> new positions
        let mut starts = vec![0usize; self.n_rows + 1];
        for &r in rows {
            starts[r + 1] += 1;
        }
        for i in 0..self.n_rows {
            starts[i + 1] += starts[i];
        }
        let mut positions = vec![0usize; rows.len()];
        let mut fill = starts.clone();
        for (new_i, &r) in rows.iter().enumerate() {
            positions[fill[r]] = new_i;
            fill[r] += 1;
        }
        let mut indptr = Vec::with_capacity(self.n_cols + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        let mut column: Vec<(usize, f64)> = Vec::new();
        for j in 0..self.n_cols {
            column.clear();
            let (rs, vs) = self.col(j);
            for (&r, &v) in rs.iter().zip(vs) {
                for &new_i in &positions[starts[r]..starts[r + 1]] {
                    column.push((new_i, v));
                }
            }
            column.sort_unstable_by_key(|e| e.0);
            for &(i, v) in &column {
                indices.push(i);
                data.push(v);
            }
            indptr.push(indices.len());
        }
        CscMatrix {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            indptr,
            indices,
            data,
        }
    }
}

impl CsrMatrix {
    pub fn try_new(
        n_rows: usize,
        n_cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        data: Vec<f64>,
    ) -> Result<Self> {
        validate_compressed(n_rows, n_cols, &indptr, &indices, &data)?;
        Ok(CsrMatrix {
            n_rows,
            n_cols,
            indptr,
            indices,
            data,
        })
    }

    pub fn from_triplets(triplets: &[(usize, usize, f64)], n_rows: usize, n_cols: usize) -> Result<Self> {
        let mut entries = Vec::with_capacity(triplets.len());
        for &(row, col, v) in triplets {
            if row >= n_rows || col >= n_cols {
                return Err(Error::Index {
                    row,
                    col,
                    n_rows,
                    n_cols,
                });
            }
            entries.push((row, col, v));
        }
        let (indptr, indices, data) = compress_entries(n_rows, entries).map_err(|e| match e {
            // compress_entries reports (minor, major) as (row, col)
            Error::DuplicateEntry { row, col } => Error::DuplicateEntry { row: col, col: row },
            other => other,
        })?;
        Ok(CsrMatrix {
            n_rows,
            n_cols,
            indptr,
            indices,
            data,
        })
    }

    pub fn check(&self) -> Result<()> {
        validate_compressed(self.n_rows, self.n_cols, &self.indptr, &self.indices, &self.data)
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Column indices and values stored in row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.data[a..b])
    }

    pub fn density(&self) -> f64 {
        density(self.nnz(), self.n_rows, self.n_cols)
    }

    pub fn to_csc(&self) -> CscMatrix {
        let (indptr, indices, data) =
            transpose_compressed(self.n_rows, self.n_cols, &self.indptr, &self.indices, &self.data);
        let m = CscMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            indptr,
            indices,
            data,
        };
        debug_assert!(m.check().is_ok());
        m
    }

    pub fn to_dense(&self, layout: Layout) -> Result<DenseMatrix> {
        self.to_dense_with_cap(layout, DEFAULT_DENSE_BYTE_CAP)
    }

    pub fn to_dense_with_cap(&self, layout: Layout, cap: usize) -> Result<DenseMatrix> {
        check_dense_cap(self.n_rows, self.n_cols, cap)?;
        let mut out = DenseMatrix::zeros(self.n_rows, self.n_cols, layout);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out.set(i, j, v);
            }
        }
        Ok(out)
    }
}

fn check_dense_cap(n_rows: usize, n_cols: usize, cap: usize) -> Result<()> {
    let bytes = n_rows
        .checked_mul(n_cols)
        .and_then(|n| n.checked_mul(std::mem::size_of::<f64>()))
        .unwrap_or(usize::MAX);
    if bytes > cap {
        return Err(Error::Capacity { bytes, cap });
    }
    Ok(())
}

/// Counting-sort transpose of compressed storage; output slices come out sorted.
fn transpose_compressed(
    n_major: usize,
    n_minor: usize,
    indptr: &[usize],
    indices: &[usize],
    data: &[f64],
) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let nnz = indices.len();
    let mut out_ptr = vec![0usize; n_minor + 1];
    for &m in indices {
        out_ptr[m + 1] += 1;
    }
    for k in 0..n_minor {
        out_ptr[k + 1] += out_ptr[k];
    }
    let mut fill = out_ptr.clone();
    let mut out_idx = vec![0usize; nnz];
    let mut out_data = vec![0.0; nnz];
    for major in 0..n_major {
        for k in indptr[major]..indptr[major + 1] {
            let m = indices[k];
            let dst = fill[m];
            out_idx[dst] = major;
            out_data[dst] = data[k];
            fill[m] += 1;
        }
    }
    (out_ptr, out_idx, out_data)
}

fn density(nnz: usize, n_rows: usize, n_cols: usize) -> f64 {
    let cells = n_rows * n_cols;
    if cells == 0 {
        0.0
    } else {
        nnz as f64 / cells as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example_matrix() -> CscMatrix {
        CscMatrix::from_triplets(&[(0, 0, 1.5), (0, 3, 2.5), (1, 3, 3.5)], 4, 5).unwrap()
    }

    #[test]
    fn empty_triplets_give_empty_matrix() {
        let m = CscMatrix::from_triplets(&[], 2, 2).unwrap();
        assert_eq!(m.indptr(), &[0, 0, 0]);
        assert!(m.indices().is_empty() && m.data().is_empty());
        assert_eq!(m.density(), 0.0);
        let csr = m.to_csr();
        assert_eq!(csr.indptr(), &[0, 0, 0]);
        let d = m.to_dense(Layout::RowMajor).unwrap();
        assert!(d.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn four_by_five_example() {
        let m = example_matrix();
        assert_eq!(m.indptr(), &[0, 1, 1, 1, 3, 3]);
        assert_eq!(m.indices(), &[0, 0, 1]);
        assert_eq!(m.data(), &[1.5, 2.5, 3.5]);
        assert!((m.density() - 0.15).abs() < 1e-15);

        let csr = m.to_csr();
        assert_eq!(csr.indptr(), &[0, 2, 3, 3, 3]);
        assert_eq!(csr.indices(), &[0, 3, 3]);
        assert_eq!(csr.to_csc(), m);

        let d = m.to_dense(Layout::ColumnMajor).unwrap();
        assert_eq!(d.get(0, 0), 1.5);
        assert_eq!(d.get(0, 3), 2.5);
        assert_eq!(d.get(1, 3), 3.5);
        assert_eq!(d.nnz(), 3);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            CscMatrix::from_triplets(&[(2, 0, 1.0)], 2, 2),
            Err(Error::Index { .. })
        ));
        assert!(matches!(
            CscMatrix::from_triplets(&[(0, 1, 1.0), (0, 1, 2.0)], 2, 2),
            Err(Error::DuplicateEntry { row: 0, col: 1 })
        ));
        assert!(matches!(
            CsrMatrix::from_triplets(&[(1, 0, 1.0), (1, 0, 2.0)], 2, 2),
            Err(Error::DuplicateEntry { row: 1, col: 0 })
        ));
    }

    #[test]
    fn explicit_zeros_are_dropped() {
        let m = CscMatrix::from_triplets(&[(0, 0, 0.0), (1, 1, 2.0)], 2, 2).unwrap();
        assert_eq!(m.nnz(), 1);
        assert!(CscMatrix::try_new(2, 1, vec![0, 1], vec![0], vec![0.0]).is_err());
    }

    #[test]
    fn try_new_rejects_unsorted_indices() {
        assert!(CscMatrix::try_new(3, 1, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        assert!(CscMatrix::try_new(3, 1, vec![0, 2], vec![1, 1], vec![1.0, 1.0]).is_err());
        assert!(CscMatrix::try_new(3, 1, vec![0, 2], vec![1, 2], vec![1.0, 1.0]).is_ok());
    }

    #[test]
    fn dense_cap_is_enforced() {
        let m = CscMatrix::empty(1000, 1000);
        assert!(matches!(
            m.to_dense_with_cap(Layout::RowMajor, 1024),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn full_matrix_has_density_one() {
        let d = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, -4.0]]).unwrap();
        assert_eq!(d.to_csc().density(), 1.0);
    }

    #[test]
    fn select_rows_matches_dense() {
        let m = example_matrix();
        let rows = [1, 0, 1, 3];
        let dense = m.to_dense(Layout::RowMajor).unwrap().select_rows(&rows);
        let sparse = m.select_rows(&rows);
        sparse.check().unwrap();
        assert_eq!(sparse.to_dense(Layout::RowMajor).unwrap(), dense);
    }

    fn random_triplets() -> impl Strategy<Value = (usize, usize, Vec<(usize, usize, f64)>)> {
        (1usize..20, 1usize..30).prop_flat_map(|(r, c)| {
            let cells = proptest::collection::btree_map((0..r, 0..c), -5.0f64..5.0, 0..(r * c).min(60));
            cells.prop_map(move |m| (r, c, m.into_iter().map(|((i, j), v)| (i, j, v)).collect()))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn densify_matches_direct_construction((r, c, t) in random_triplets()) {
            let mut direct = DenseMatrix::zeros(r, c, Layout::RowMajor);
            for &(i, j, v) in &t {
                direct.set(i, j, v);
            }
            let m = CscMatrix::from_triplets(&t, r, c).unwrap();
            m.check().unwrap();
            prop_assert_eq!(m.to_dense(Layout::RowMajor).unwrap(), direct.clone());
            let csr = m.to_csr();
            csr.check().unwrap();
            prop_assert_eq!(csr.to_dense(Layout::RowMajor).unwrap(), direct.clone());
            prop_assert_eq!(csr.to_csc(), m.clone());
            prop_assert_eq!(direct.to_csc(), m);
            prop_assert_eq!(direct.to_csr(), csr);
        }
    }

    #[test]
    fn layouts_address_the_same_elements() {
        let d = DenseMatrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let c = d.to_layout(Layout::ColumnMajor);
        assert_eq!(c.values(), &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        assert_eq!(c.get(1, 2), 6.0);
        assert_eq!(c.column(1).unwrap(), &[2.0, 5.0]);
        assert_eq!(d.row(1).unwrap(), &[4.0, 5.0, 6.0]);
        assert_eq!(c.to_layout(Layout::RowMajor), d);
    }
}
