//! Sample-set bookkeeping for growth on CSC input.
//!
//! `samples` holds the ids of all samples in play; every live node owns a
//! contiguous slice `[start, end)` of it. `mapping[id]` is the position of
//! `id` in `samples` (or `usize::MAX` for samples not in play), so that
//! "is row `id` in this node" is an O(1) range test.

use crate::matrix::CscMatrix;

/// Switch constant between the two extraction strategies.
pub const EXTRACT_NNZ_SWITCH: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct NodePartition {
    samples: Vec<usize>,
    mapping: Vec<usize>,
    scratch: Vec<usize>,
}

impl NodePartition {
    /// `ids` must be distinct and below `n`.
    pub fn new(ids: Vec<usize>, n: usize) -> Self {
        let mut mapping = vec![usize::MAX; n];
        for (i, &id) in ids.iter().enumerate() {
            debug_assert_eq!(mapping[id], usize::MAX, "duplicate sample id {id}");
            mapping[id] = i;
        }
        NodePartition {
            samples: ids,
            mapping,
            scratch: Vec::new(),
        }
    }

    pub fn samples(&self) -> &[usize] {
        &self.samples
    }

    pub fn slice(&self, start: usize, end: usize) -> &[usize] {
        &self.samples[start..end]
    }

    pub fn position(&self, id: usize) -> Option<usize> {
        match self.mapping[id] {
            usize::MAX => None,
            p => Some(p),
        }
    }

    #[inline]
    pub fn swap(&mut self, p1: usize, p2: usize) {
        self.samples.swap(p1, p2);
        self.mapping[self.samples[p1]] = p1;
        self.mapping[self.samples[p2]] = p2;
        debug_assert!(self.mapping[self.samples[p1]] == p1 && self.mapping[self.samples[p2]] == p2);
    }

    /// Full O(n) check of `mapping[samples[i]] == i`.
    pub fn check_invariant(&self) -> bool {
        self.samples.iter().enumerate().all(|(i, &id)| self.mapping[id] == i)
            && self
                .mapping
                .iter()
                .enumerate()
                .all(|(id, &p)| p == usize::MAX || self.samples[p] == id)
    }
}

/// Output of an extraction. `neg[k]` is the value of the sample now at
/// `start + k`; `pos[k]` the value of the sample now at `end - 1 - k`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Nonzeros {
    pub neg: Vec<f64>,
    pub pos: Vec<f64>,
}

impl Nonzeros {
    pub fn n_neg(&self) -> usize {
        self.neg.len()
    }

    pub fn n_pos(&self) -> usize {
        self.pos.len()
    }

    fn clear(&mut self) {
        self.neg.clear();
        self.pos.clear();
    }
}

#[inline]
fn place(part: &mut NodePartition, i: usize, value: f64, start: usize, end: usize, out: &mut Nonzeros) {
    if value > 0.0 {
        let dst = end - 1 - out.pos.len();
        out.pos.push(value);
        part.swap(i, dst);
    } else {
        let dst = start + out.neg.len();
        out.neg.push(value);
        part.swap(i, dst);
    }
}

/// Scans every stored entry of column `j` and keeps those whose row lies in
/// `[start, end)` according to the mapping. O(nnz of column j).
pub fn extract_nnz_mapping(
    x: &CscMatrix,
    j: usize,
    part: &mut NodePartition,
    start: usize,
    end: usize,
    out: &mut Nonzeros,
) {
    out.clear();
    let (rows, vals) = x.col(j);
    for (&row, &v) in rows.iter().zip(vals) {
        let i = part.mapping[row];
        if start <= i && i < end {
            place(part, i, v, start, end, out);
        }
    }
}

/// Sorts the node's sample ids and binary-searches each one in column `j`.
/// O(|node| log |node| + |node| log nnz). Entries are visited in ascending
/// row order, exactly as in [`extract_nnz_mapping`], so both variants leave
/// the partition in the same state.
pub fn extract_nnz_bsearch(
    x: &CscMatrix,
    j: usize,
    part: &mut NodePartition,
    start: usize,
    end: usize,
    out: &mut Nonzeros,
) {
    out.clear();
    let (rows, vals) = x.col(j);
    let mut sorted = std::mem::take(&mut part.scratch);
    sorted.clear();
    sorted.extend_from_slice(&part.samples[start..end]);
    sorted.sort_unstable();
    let mut lo = 0;
    for &id in &sorted {
        if lo >= rows.len() {
            break;
        }
        match rows[lo..].binary_search(&id) {
            Ok(p) => {
                let k = lo + p;
                let i = part.mapping[id];
                place(part, i, vals[k], start, end, out);
                lo = k + 1;
            }
            Err(p) => lo += p,
        }
    }
    part.scratch = sorted;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractStrategy {
    Empty,
    Mapping,
    BinarySearch,
}

/// Binary search pays off when the node is small relative to the column:
/// `|node| ln(nnz) < 0.1 nnz`. Otherwise the linear column scan is cheaper.
pub fn extract_strategy(node_size: usize, nnz: usize) -> ExtractStrategy {
    if nnz == 0 {
        ExtractStrategy::Empty
    } else if (node_size as f64) * (nnz as f64).ln() < EXTRACT_NNZ_SWITCH * nnz as f64 {
        ExtractStrategy::BinarySearch
    } else {
        ExtractStrategy::Mapping
    }
}

/// Hybrid extraction; both strategies give identical results.
pub fn extract_nnz(x: &CscMatrix, j: usize, part: &mut NodePartition, start: usize, end: usize, out: &mut Nonzeros) {
    match extract_strategy(end - start, x.col_nnz(j)) {
        ExtractStrategy::Empty => out.clear(),
        ExtractStrategy::Mapping => extract_nnz_mapping(x, j, part, start, end, out),
        ExtractStrategy::BinarySearch => extract_nnz_bsearch(x, j, part, start, end, out),
    }
}
