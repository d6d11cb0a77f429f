//! L1 compression of a fitted forest.
//!
//! Samples are lifted to the binary indicators of the forest nodes they
//! traverse, a monotone forward stagewise path is run on the standardized
//! indicators, and the forest is pruned to the nodes that carry a nonzero
//! coefficient (plus the tests leading to them).

mod lift;
mod stagewise;

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use lift::{lift, IndicatorSpace};
pub use stagewise::{forward_stagewise, StagewisePath};

use crate::datasets::{Dataset, Features, Task};
use crate::error::{Error, Result};
use crate::forest::Forest;
use crate::matrix::CscMatrix;
use crate::rng;
use crate::tree::{read_container, write_container, Tree, TreeNode};

/// Number of test nodes, the complexity measure of compressed models.
pub trait NodeCount {
    fn node_count(&self) -> usize;
}

impl NodeCount for Tree {
    fn node_count(&self) -> usize {
        self.n_test_nodes()
    }
}

impl NodeCount for Forest {
    fn node_count(&self) -> usize {
        self.trees().iter().map(Tree::n_test_nodes).sum()
    }
}

pub fn node_count(model: &impl NodeCount) -> usize {
    model.node_count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CompressedNode {
    Test {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        weight: f64,
    },
    Leaf {
        weight: f64,
    },
}

/// A pruned tree whose every node carries an additive weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressedTree {
    pub nodes: Vec<CompressedNode>,
}

impl CompressedTree {
    /// Sum of the weights along the path of a sample.
    pub fn path_weight(&self, feature: impl Fn(usize) -> f64) -> f64 {
        let mut id = 0;
        let mut total = 0.0;
        loop {
            match &self.nodes[id] {
                CompressedNode::Test {
                    feature: f,
                    threshold,
                    left,
                    right,
                    weight,
                } => {
                    total += weight;
                    id = if feature(*f) <= *threshold { *left } else { *right };
                }
                CompressedNode::Leaf { weight } => return total + weight,
            }
        }
    }

    pub fn n_test_nodes(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, CompressedNode::Test { .. })).count()
    }
}

/// A nonzero stagewise coefficient with its standardization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeCoefficient {
    /// Flat column in the original forest's indicator space.
    pub column: usize,
    pub beta: f64,
    pub mean: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressedForest {
    pub trees: Vec<CompressedTree>,
    /// Intercept on the raw (unstandardized) indicators.
    pub intercept: f64,
    pub coefficients: Vec<NodeCoefficient>,
    pub task: Task,
    pub n_features: usize,
}

impl NodeCount for CompressedForest {
    fn node_count(&self) -> usize {
        self.trees.iter().map(CompressedTree::n_test_nodes).sum()
    }
}

impl CompressedForest {
    pub const FORMAT: &'static str = "compressed-forest";

    /// Builds the model `intercept + sum_j weights[j] z_j(x)` over the raw node
    /// indicators of `forest` and prunes every test node whose descendants all
    /// have zero weight.
    pub fn from_node_weights(forest: &Forest, intercept: f64, weights: &[f64]) -> Result<Self> {
        let space = IndicatorSpace::new(forest);
        if weights.len() != space.n_columns() {
            return Err(Error::Shape(format!(
                "{} weights for {} forest nodes",
                weights.len(),
                space.n_columns()
            )));
        }
        let trees = forest
            .trees()
            .iter()
            .enumerate()
            .filter_map(|(m, t)| prune(t, &weights[space.range(m)]))
            .collect();
        Ok(CompressedForest {
            trees,
            intercept,
            coefficients: Vec::new(),
            task: forest.task(),
            n_features: forest.n_features(),
        })
    }

    /// Real-valued scores.
    pub fn predict(&self, x: &Features) -> Result<Vec<f64>> {
        if x.n_cols() != self.n_features {
            return Err(Error::Shape(format!(
                "model expects {} features, input has {}",
                self.n_features,
                x.n_cols()
            )));
        }
        let score = |feature: &dyn Fn(usize) -> f64| -> f64 {
            self.intercept + self.trees.iter().map(|t| t.path_weight(feature)).sum::<f64>()
        };
        Ok(match x {
            Features::Dense(m) => (0..m.n_rows()).map(|i| score(&|j| m.get(i, j))).collect(),
            Features::Sparse(m) => {
                let csr = m.to_csr();
                (0..csr.n_rows())
                    .map(|i| {
                        let (cols, vals) = csr.row(i);
                        score(&|j| cols.binary_search(&j).map_or(0.0, |k| vals[k]))
                    })
                    .collect()
            }
        })
    }

    /// Scores for regression; ±1 labels (score > 0) for classification.
    pub fn predict_labels(&self, x: &Features) -> Result<Vec<f64>> {
        let s = self.predict(x)?;
        Ok(if self.task.is_classification() {
            s.into_iter().map(|v| if v > 0.0 { 1.0 } else { -1.0 }).collect()
        } else {
            s
        })
    }

    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        write_container(Self::FORMAT, self, w)
    }

    pub fn load<R: Read>(r: R) -> Result<Self> {
        let m: CompressedForest = read_container(Self::FORMAT, r)?;
        for t in &m.trees {
            check_compressed(t, m.n_features)?;
        }
        Ok(m)
    }
}

fn check_compressed(t: &CompressedTree, p: usize) -> Result<()> {
    let mut seen = vec![false; t.nodes.len()];
    let mut stack = vec![0usize];
    while let Some(id) = stack.pop() {
        if id >= t.nodes.len() || seen[id] {
            return Err(Error::Structure(format!("compressed node {id} is missing or reached twice")));
        }
        seen[id] = true;
        if let CompressedNode::Test { feature, left, right, .. } = t.nodes[id] {
            if feature >= p {
                return Err(Error::Structure(format!("compressed node {id} tests feature {feature}")));
            }
            stack.push(left);
            stack.push(right);
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Structure("unreachable compressed node".into()));
    }
    Ok(())
}

/// Keeps a test node iff some strict descendant has a nonzero weight; a test
/// node without such descendants becomes a leaf carrying its own weight.
/// Trees without any nonzero weight are dropped.
fn prune(tree: &Tree, w: &[f64]) -> Option<CompressedTree> {
    let nodes = tree.nodes();
    let mut has_nz = vec![false; nodes.len()];
    let mut below_nz = vec![false; nodes.len()];
    // post-order over the explicit child links
    let mut order = Vec::with_capacity(nodes.len());
    let mut stack = vec![0usize];
    while let Some(id) = stack.pop() {
        order.push(id);
        if let TreeNode::Test { left, right, .. } = nodes[id] {
            stack.push(left);
            stack.push(right);
        }
    }
    for &id in order.iter().rev() {
        if let TreeNode::Test { left, right, .. } = nodes[id] {
            below_nz[id] = has_nz[left] || has_nz[right];
        }
        has_nz[id] = w[id] != 0.0 || below_nz[id];
    }
    if !has_nz[0] {
        return None;
    }
    let mut out = Vec::new();
    // (original id, slot in `out`)
    out.push(CompressedNode::Leaf { weight: 0.0 });
    let mut queue = std::collections::VecDeque::from([(0usize, 0usize)]);
    while let Some((id, slot)) = queue.pop_front() {
        out[slot] = match nodes[id] {
            TreeNode::Test {
                feature,
                threshold,
                left,
                right,
                ..
            } if below_nz[id] => {
                let (l, r) = (out.len(), out.len() + 1);
                out.push(CompressedNode::Leaf { weight: 0.0 });
                out.push(CompressedNode::Leaf { weight: 0.0 });
                queue.push_back((left, l));
                queue.push_back((right, r));
                CompressedNode::Test {
                    feature,
                    threshold,
                    left: l,
                    right: r,
                    weight: w[id],
                }
            }
            _ => CompressedNode::Leaf { weight: w[id] },
        };
    }
    Some(CompressedTree { nodes: out })
}

/// Single-output targets of the compression fit: regression values, or ±1 labels.
fn compression_targets(ds: &Dataset) -> Result<Vec<f64>> {
    if ds.n_outputs() != 1 {
        return Err(Error::Unsupported("compression handles single-output tasks only".into()));
    }
    match ds.task {
        Task::Regression | Task::Binary => Ok(ds.y.column_vec(0)),
        Task::Multilabel => Err(Error::Unsupported("compression of multilabel forests".into())),
    }
}

/// Refits the monotone stagewise path on the lifted training set up to
/// `||beta||_1 = t_star` and prunes the forest accordingly. A path that
/// converges before reaching `t_star` is used up to its end.
pub fn compress(forest: &Forest, ds: &Dataset, t_star: f64, epsilon: f64) -> Result<CompressedForest> {
    let y = compression_targets(ds)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidStep(epsilon));
    }
    if !(t_star >= 0.0 && t_star.is_finite()) {
        return Err(Error::InvalidT { t: t_star, max: f64::NAN });
    }
    let z = lift(forest, &ds.x)?;
    let k = (t_star / epsilon).round() as usize;
    let path = forward_stagewise(&z, &y, epsilon, k, true)?;
    let k = path.n_steps().min(k);
    let beta = path.beta_after(k);
    let (b0, raw) = path.raw_coefficients(&beta);
    let mut model = CompressedForest::from_node_weights(forest, b0, &raw)?;
    model.coefficients = beta
        .iter()
        .enumerate()
        .filter(|(_, &b)| b != 0.0)
        .map(|(j, &b)| NodeCoefficient {
            column: j,
            beta: b,
            mean: path.mean[j],
            scale: path.scale[j],
        })
        .collect();
    Ok(model)
}

pub fn predict_compressed(model: &CompressedForest, x: &Features) -> Result<Vec<f64>> {
    model.predict_labels(x)
}

/// Cross-validation curve over the `t` grid `0, eps, 2 eps, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TSelection {
    pub t_star: f64,
    pub t_grid: Vec<f64>,
    /// Fold-averaged validation loss at each grid point.
    pub loss: Vec<f64>,
}

/// Chooses `t` by `folds`-fold cross-validation: on each fold a forest is built
/// by `build(train, seed)`, a stagewise path of at most `max_steps` steps is run
/// on its lifted training set, and the validation loss (squared, or 0-1 for
/// classification) is recorded after every step. Ties go to the smallest `t`.
pub fn select_t_cv<F>(build: F, ds: &Dataset, epsilon: f64, folds: usize, max_steps: usize, seed: u64) -> Result<TSelection>
where
    F: Fn(&Dataset, u64) -> Result<Forest> + Sync,
{
    let n = ds.n_samples();
    if folds < 2 || folds > n {
        return Err(Error::InvalidFolds { folds, n });
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidStep(epsilon));
    }
    compression_targets(ds)?;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::stream(seed, 0));
    let curves = (0..folds)
        .into_par_iter()
        .map(|f| {
            let lo = f * n / folds;
            let hi = (f + 1) * n / folds;
            let mut val: Vec<usize> = perm[lo..hi].to_vec();
            let mut train: Vec<usize> = perm[..lo].iter().chain(&perm[hi..]).copied().collect();
            val.sort_unstable();
            train.sort_unstable();
            fold_curve(&build, &ds.subset(&train), &ds.subset(&val), epsilon, max_steps, rng::derive_seed(seed, f as u64 + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut loss = vec![0.0; max_steps + 1];
    for c in &curves {
        for (l, v) in loss.iter_mut().zip(c) {
            *l += v / folds as f64;
        }
    }
    let mut best = 0;
    for (k, &l) in loss.iter().enumerate() {
        if l < loss[best] {
            best = k;
        }
    }
    Ok(TSelection {
        t_star: best as f64 * epsilon,
        t_grid: (0..=max_steps).map(|k| k as f64 * epsilon).collect(),
        loss,
    })
}

fn fold_curve<F>(build: &F, train: &Dataset, val: &Dataset, epsilon: f64, max_steps: usize, seed: u64) -> Result<Vec<f64>>
where
    F: Fn(&Dataset, u64) -> Result<Forest>,
{
    let forest = build(train, seed)?;
    let y = compression_targets(train)?;
    let path = forward_stagewise(&lift(&forest, &train.x)?, &y, epsilon, max_steps, true)?;
    let zv: CscMatrix = lift(&forest, &val.x)?;
    let yv = compression_targets(val)?;
    let classify = train.task.is_classification();
    let mut pred = vec![path.intercept; yv.len()];
    let loss = |pred: &[f64]| -> f64 {
        let total: f64 = if classify {
            pred.iter().zip(&yv).filter(|(p, y)| (**p > 0.0) != (**y > 0.0)).count() as f64
        } else {
            pred.iter().zip(&yv).map(|(p, y)| (p - y) * (p - y)).sum()
        };
        total / yv.len() as f64
    };
    let mut curve = Vec::with_capacity(max_steps + 1);
    curve.push(loss(&pred));
    for &(k, delta) in &path.steps {
        let s = path.scale[k];
        let shift = -delta * path.mean[k] / s;
        pred.iter_mut().for_each(|p| *p += shift);
        let (rows, vals) = zv.col(k);
        for (&i, &v) in rows.iter().zip(vals) {
            pred[i] += delta * v / s;
        }
        curve.push(loss(&pred));
    }
    let last = *curve.last().unwrap();
    curve.resize(max_steps + 1, last);
    Ok(curve)
}
