use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng as _;

use super::criterion::class_impurity;
use super::partition::{extract_nnz, NodePartition, Nonzeros};
use super::splitter::{
    by_value_then_id, draw_threshold, scan_sorted, score_threshold, Blocks, FeatureEval, ScoreCtx, SideAcc,
    SplitRecord,
};
use super::{GrowthParams, SplitterKind, Tree, TreeNode};
use crate::datasets::{Dataset, Features, Task};
use crate::error::{Error, Result};
use crate::matrix::{CscMatrix, DenseMatrix, Layout};
use crate::rng;

/// {0, 1} indicators for class targets: binary ±1 becomes 0/1, multilabel is
/// returned as is.
pub fn classification_targets(y: &DenseMatrix, task: Task) -> Result<DenseMatrix> {
    match task {
        Task::Binary => {
            let mut out = y.clone();
            for i in 0..y.n_rows() {
                for j in 0..y.n_cols() {
                    out.set(i, j, if y.get(i, j) > 0.0 { 1.0 } else { 0.0 });
                }
            }
            Ok(out)
        }
        Task::Multilabel => Ok(y.clone()),
        Task::Regression => Err(Error::InvalidTarget("regression targets have no classes".into())),
    }
}

/// Grows a tree on a dataset. Class targets are first mapped to {0, 1} so that
/// leaves hold positive-class probabilities.
pub fn grow(ds: &Dataset, params: &GrowthParams) -> Result<Tree> {
    if ds.task.is_classification() {
        grow_tree(&ds.x, &classification_targets(&ds.y, ds.task)?, None, params)
    } else {
        grow_tree(&ds.x, &ds.y, None, params)
    }
}

/// Grows a tree on `(x, y)`, optionally with non-negative sample weights
/// (bootstrap multiplicities). Samples of weight zero are ignored.
pub fn grow_tree(x: &Features, y: &DenseMatrix, weights: Option<&[f64]>, params: &GrowthParams) -> Result<Tree> {
    params.validate()?;
    let n = x.n_rows();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if y.n_rows() != n {
        return Err(Error::Shape(format!("X has {n} rows but Y has {}", y.n_rows())));
    }
    if y.n_cols() == 0 {
        return Err(Error::Shape("Y has no output column".into()));
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(Error::Shape(format!("{} weights for {n} samples", w.len())));
        }
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter("weights must be finite and non-negative".into()));
        }
    }
    if y.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidTarget("non-finite target".into()));
    }
    if params.criterion.is_classification() && y.values().iter().any(|v| *v != 0.0 && *v != 1.0) {
        return Err(Error::InvalidTarget(format!(
            "{:?} needs 0/1 targets",
            params.criterion
        )));
    }
    let input = match x {
        Features::Dense(m) => {
            if m.values().iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("non-finite input value".into()));
            }
            Input::Dense(m)
        }
        Features::Sparse(m) => Input::Sparse(m),
    };
    let p = x.n_cols();
    let k = if p == 0 { 0 } else { params.max_features.resolve(p)? };
    let ids: Vec<usize> = (0..n).filter(|&i| weights.is_none_or(|w| w[i] > 0.0)).collect();
    if ids.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let y_rm = y.to_layout(Layout::RowMajor);
    let d = y.n_cols();
    let b = Builder {
        input,
        y: y_rm.values(),
        d,
        p,
        k,
        weights,
        params,
        part: NodePartition::new(ids, n),
        nodes: Vec::new(),
        w_root: 0.0,
        s: Scratch {
            nz: Nonzeros::default(),
            neg: Vec::new(),
            pos: Vec::new(),
            acc: SideAcc::new(d),
            feats: Vec::with_capacity(p),
            is_const: vec![false; p],
            sorted: Vec::new(),
        },
    };
    b.run()
}

/// Relative margin a later feature needs to displace the current best. Two
/// features inducing the same partition have equal gains up to rounding, and
/// the first drawn one must win regardless of summation order.
const TIE_TOLERANCE: f64 = 1e-12;

fn beats(gain: f64, best: f64) -> bool {
    gain > best + TIE_TOLERANCE * best.abs()
}

enum Input<'a> {
    Dense(&'a DenseMatrix),
    Sparse(&'a CscMatrix),
}

struct Scratch {
    nz: Nonzeros,
    neg: Vec<(f64, usize)>,
    pos: Vec<(f64, usize)>,
    acc: SideAcc,
    feats: Vec<usize>,
    is_const: Vec<bool>,
    sorted: Vec<usize>,
}

struct Pending {
    id: usize,
    depth: usize,
    start: usize,
    end: usize,
    w: f64,
    sums: Vec<f64>,
    split: Option<SplitRecord>,
    /// Features known to be constant in every descendant.
    constants: Vec<usize>,
}

impl Pending {
    fn priority(&self, w_root: f64) -> f64 {
        self.split.map_or(0.0, |s| self.w / w_root * s.improvement)
    }
}

/// Best-first queue entry: larger weighted decrease first, then lower id.
struct Ranked(f64, Pending);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(other.1.id.cmp(&self.1.id))
    }
}

struct Builder<'a> {
    input: Input<'a>,
    y: &'a [f64],
    d: usize,
    p: usize,
    k: usize,
    weights: Option<&'a [f64]>,
    params: &'a GrowthParams,
    part: NodePartition,
    nodes: Vec<Option<TreeNode>>,
    w_root: f64,
    s: Scratch,
}

impl Builder<'_> {
    fn run(mut self) -> Result<Tree> {
        let n_in_play = self.part.samples().len();
        let root = self.make_node(0, n_in_play, 0, Vec::new());
        self.w_root = root.w;
        match self.params.max_leaves {
            None => {
                let mut queue = VecDeque::from([root]);
                while let Some(node) = queue.pop_front() {
                    if node.split.is_some() {
                        let (l, r) = self.split(node);
                        queue.push_back(l);
                        queue.push_back(r);
                    } else {
                        self.set_leaf(node);
                    }
                }
            }
            Some(max_leaves) => {
                let mut heap = BinaryHeap::new();
                let mut leaves = 1;
                self.push_or_leaf(&mut heap, root);
                while let Some(Ranked(_, node)) = heap.pop() {
                    if leaves >= max_leaves {
                        self.set_leaf(node);
                        continue;
                    }
                    let (l, r) = self.split(node);
                    leaves += 1;
                    self.push_or_leaf(&mut heap, l);
                    self.push_or_leaf(&mut heap, r);
                }
            }
        }
        let nodes = self.nodes.into_iter().map(|n| n.expect("every node is finalized")).collect();
        let tree = Tree {
            nodes,
            n_features: self.p,
            n_outputs: self.d,
        };
        debug_assert!(Tree::from_nodes(tree.nodes.clone(), tree.n_features, tree.n_outputs).is_ok());
        Ok(tree)
    }

    fn push_or_leaf(&mut self, heap: &mut BinaryHeap<Ranked>, node: Pending) {
        if node.split.is_some() {
            heap.push(Ranked(node.priority(self.w_root), node));
        } else {
            self.set_leaf(node);
        }
    }

    fn set_leaf(&mut self, node: Pending) {
        let value = node.sums.iter().map(|s| s / node.w).collect();
        self.nodes[node.id] = Some(TreeNode::Leaf {
            value,
            n_samples: node.end - node.start,
            weight: node.w,
        });
    }

    #[inline]
    fn weight(&self, id: usize) -> f64 {
        self.weights.map_or(1.0, |w| w[id])
    }

    fn make_node(&mut self, start: usize, end: usize, depth: usize, constants: Vec<usize>) -> Pending {
        let id = self.nodes.len();
        self.nodes.push(None);
        let d = self.d;
        // Totals are summed in ascending sample id so they depend only on the
        // set of samples in the node.
        let mut sorted = std::mem::take(&mut self.s.sorted);
        sorted.clear();
        sorted.extend_from_slice(self.part.slice(start, end));
        sorted.sort_unstable();
        let mut w = 0.0;
        let mut sums = vec![0.0; d];
        for &i in &sorted {
            let wi = self.weight(i);
            w += wi;
            for (s, v) in sums.iter_mut().zip(&self.y[i * d..(i + 1) * d]) {
                *s += wi * v;
            }
        }
        let first = &self.y[sorted[0] * d..(sorted[0] + 1) * d];
        let pure = sorted.iter().all(|&i| &self.y[i * d..(i + 1) * d] == first);
        let n = end - start;
        let terminal = pure
            || n < self.params.min_samples_split
            || self.params.max_depth.is_some_and(|m| depth >= m)
            || self.p == 0;
        let mut node = Pending {
            id,
            depth,
            start,
            end,
            w,
            sums,
            split: None,
            constants,
        };
        if !terminal {
            self.find_split(&mut node, &sorted);
        }
        self.s.sorted = sorted;
        node
    }

    /// Fills `neg`/`pos` with `(value, id)` pairs of feature `f` in ascending
    /// sample id order and returns the number of zeros.
    fn blocks(&mut self, f: usize, start: usize, end: usize, sorted: &[usize]) -> usize {
        let s = &mut self.s;
        s.neg.clear();
        s.pos.clear();
        match self.input {
            Input::Dense(x) => {
                let mut zeros = 0;
                match x.column(f) {
                    Some(col) => {
                        for &i in sorted {
                            let v = col[i];
                            if v < 0.0 {
                                s.neg.push((v, i));
                            } else if v > 0.0 {
                                s.pos.push((v, i));
                            } else {
                                zeros += 1;
                            }
                        }
                    }
                    None => {
                        for &i in sorted {
                            let v = x.get(i, f);
                            if v < 0.0 {
                                s.neg.push((v, i));
                            } else if v > 0.0 {
                                s.pos.push((v, i));
                            } else {
                                zeros += 1;
                            }
                        }
                    }
                }
                zeros
            }
            Input::Sparse(x) => {
                extract_nnz(x, f, &mut self.part, start, end, &mut s.nz);
                let samples = self.part.samples();
                s.neg.extend(s.nz.neg.iter().enumerate().map(|(k, &v)| (v, samples[start + k])));
                s.pos.extend(s.nz.pos.iter().enumerate().map(|(k, &v)| (v, samples[end - 1 - k])));
                (end - start) - s.neg.len() - s.pos.len()
            }
        }
    }

    fn find_split(&mut self, node: &mut Pending, sorted: &[usize]) {
        let criterion = self.params.criterion;
        let parent_impurity = if criterion.is_classification() {
            class_impurity(criterion, node.w, &node.sums)
        } else {
            0.0
        };
        let mut rng = rng::stream(self.params.seed, node.id as u64);
        let p = self.p;
        self.s.feats.clear();
        self.s.feats.extend(0..p);
        for &f in &node.constants {
            self.s.is_const[f] = true;
        }
        let n_inherited = node.constants.len();
        let mut best: Option<SplitRecord> = None;
        let mut visited = 0;
        for i in 0..p {
            if visited >= self.k {
                break;
            }
            let j = rng.random_range(i..p);
            self.s.feats.swap(i, j);
            let f = self.s.feats[i];
            if self.s.is_const[f] {
                continue;
            }
            let n_zero = self.blocks(f, node.start, node.end, sorted);
            let ctx = ScoreCtx {
                criterion,
                y: self.y,
                d: self.d,
                weights: self.weights,
                total_w: node.w,
                total_s: &node.sums,
                parent_impurity,
            };
            let s = &mut self.s;
            let eval = match self.params.splitter {
                SplitterKind::Exhaustive => {
                    s.neg.sort_unstable_by(by_value_then_id);
                    s.pos.sort_unstable_by(by_value_then_id);
                    let b = Blocks { neg: &s.neg, n_zero, pos: &s.pos };
                    scan_sorted(&ctx, &b, &mut s.acc)
                }
                SplitterKind::RandomThreshold => {
                    let b = Blocks { neg: &s.neg, n_zero, pos: &s.pos };
                    let (lo, hi) = (b.min(), b.max());
                    if lo == hi {
                        FeatureEval::Constant
                    } else {
                        let tau = draw_threshold(lo, hi, rng.random::<f64>());
                        let gain = score_threshold(&ctx, &b, tau, &mut s.acc);
                        FeatureEval::Candidate { threshold: tau, gain }
                    }
                }
            };
            match eval {
                FeatureEval::Constant => {
                    s.is_const[f] = true;
                    node.constants.push(f);
                }
                FeatureEval::Candidate { threshold, gain } => {
                    visited += 1;
                    if best.is_none_or(|b| beats(gain, b.improvement)) {
                        best = Some(SplitRecord {
                            feature: f,
                            threshold,
                            improvement: gain,
                        });
                    }
                }
            }
        }
        for &f in &node.constants {
            self.s.is_const[f] = false;
        }
        debug_assert!(node.constants.len() >= n_inherited);
        node.split = best.filter(|b| b.improvement > 0.0 && b.improvement.is_finite());
    }

    /// Partitions the node's slice on its split and creates both children.
    fn split(&mut self, node: Pending) -> (Pending, Pending) {
        let rec = node.split.expect("only split nodes are partitioned");
        let (start, end, f, tau) = (node.start, node.end, rec.feature, rec.threshold);
        let mid = match self.input {
            Input::Dense(x) => {
                let mut i = start;
                for k in start..end {
                    if x.get(self.part.samples()[k], f) <= tau {
                        self.part.swap(i, k);
                        i += 1;
                    }
                }
                i
            }
            Input::Sparse(x) => {
                extract_nnz(x, f, &mut self.part, start, end, &mut self.s.nz);
                let (nn, np) = (self.s.nz.n_neg(), self.s.nz.n_pos());
                let (block_start, mut vals) = if tau < 0.0 {
                    (start, std::mem::take(&mut self.s.nz.neg))
                } else {
                    (end - np, self.s.nz.pos.iter().rev().copied().collect())
                };
                debug_assert_eq!(vals.len(), if tau < 0.0 { nn } else { np });
                let mut i = 0;
                for k in 0..vals.len() {
                    if vals[k] <= tau {
                        self.part.swap(block_start + i, block_start + k);
                        vals.swap(i, k);
                        i += 1;
                    }
                }
                block_start + i
            }
        };
        debug_assert!(start < mid && mid < end, "split must leave both sides non-empty");
        let left = self.make_node(start, mid, node.depth + 1, node.constants.clone());
        let right = self.make_node(mid, end, node.depth + 1, node.constants.clone());
        self.nodes[node.id] = Some(TreeNode::Test {
            feature: f,
            threshold: tau,
            left: left.id,
            right: right.id,
            weighted_impurity_decrease: node.w / self.w_root * rec.improvement,
            n_samples: end - start,
            weight: node.w,
        });
        (left, right)
    }
}
