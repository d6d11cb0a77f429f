//! Multi-output CART trees.
//!
//! Trees are grown on either dense or CSC inputs; both growers share the split
//! scan, so given the same seed they produce bit-identical trees. Test nodes
//! send `x[feature] <= threshold` to the left child.

mod criterion;
mod grow;
pub mod partition;
mod predict;
mod serial;
mod splitter;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use criterion::{impurity, impurity_reduction, Criterion};
pub use grow::{classification_targets, grow, grow_tree};
pub use serial::{read_container, write_container, Container, FORMAT_VERSION};
pub use splitter::{midpoint, SplitRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitterKind {
    /// Best midpoint over all sorted values.
    Exhaustive,
    /// One uniform threshold per feature (extremely randomized trees).
    RandomThreshold,
}

/// Number of features examined per node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Log2,
    Fraction(f64),
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, p: usize) -> Result<usize> {
        let k = match self {
            MaxFeatures::All => p,
            MaxFeatures::Sqrt => (p as f64).sqrt() as usize,
            MaxFeatures::Log2 => (p as f64).log2() as usize,
            MaxFeatures::Fraction(f) => {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::InvalidParameter(format!("feature fraction {f} outside (0, 1]")));
                }
                (f * p as f64) as usize
            }
            MaxFeatures::Count(k) => {
                if k == 0 || k > p {
                    return Err(Error::InvalidParameter(format!("cannot draw {k} of {p} features")));
                }
                k
            }
        };
        Ok(k.clamp(1, p.max(1)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrowthParams {
    pub max_depth: Option<usize>,
    /// Nodes with fewer samples become leaves (at least 2).
    pub min_samples_split: usize,
    /// Grow best-first until this many leaves exist.
    pub max_leaves: Option<usize>,
    pub max_features: MaxFeatures,
    pub splitter: SplitterKind,
    pub criterion: Criterion,
    pub seed: u64,
}

impl Default for GrowthParams {
    fn default() -> Self {
        GrowthParams {
            max_depth: None,
            min_samples_split: 2,
            max_leaves: None,
            max_features: MaxFeatures::All,
            splitter: SplitterKind::Exhaustive,
            criterion: Criterion::Variance,
            seed: 0,
        }
    }
}

impl GrowthParams {
    /// Depth-one tree with exhaustive search.
    pub fn stump() -> Self {
        GrowthParams {
            max_depth: Some(1),
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_samples_split < 2 {
            return Err(Error::InvalidParameter("min_samples_split must be at least 2".into()));
        }
        if self.max_leaves.is_some_and(|m| m < 2) {
            return Err(Error::InvalidParameter("max_leaves must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TreeNode {
    Test {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// `w_t / w_root * delta I`.
        weighted_impurity_decrease: f64,
        n_samples: usize,
        weight: f64,
    },
    Leaf {
        value: Vec<f64>,
        n_samples: usize,
        weight: f64,
    },
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }
}

/// Array-of-nodes binary tree rooted at node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<TreeNode>,
    n_features: usize,
    n_outputs: usize,
}

impl Tree {
    /// Validates the structure: every node reachable from the root exactly once,
    /// leaf values of length `n_outputs` and finite.
    pub fn from_nodes(nodes: Vec<TreeNode>, n_features: usize, n_outputs: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Structure("a tree needs at least one node".into()));
        }
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            if id >= nodes.len() || seen[id] {
                return Err(Error::Structure(format!("node {id} is missing or reached twice")));
            }
            seen[id] = true;
            match &nodes[id] {
                TreeNode::Test { feature, left, right, threshold, .. } => {
                    if *feature >= n_features || !threshold.is_finite() {
                        return Err(Error::Structure(format!("node {id} has an invalid test")));
                    }
                    stack.push(*right);
                    stack.push(*left);
                }
                TreeNode::Leaf { value, .. } => {
                    if value.len() != n_outputs || value.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Structure(format!("leaf {id} has an invalid value")));
                    }
                }
            }
        }
        if let Some(id) = seen.iter().position(|s| !s) {
            return Err(Error::Structure(format!("node {id} is unreachable")));
        }
        Ok(Tree {
            nodes,
            n_features,
            n_outputs,
        })
    }

    /// Single-leaf tree.
    pub fn constant(value: Vec<f64>, n_features: usize) -> Self {
        let n_outputs = value.len();
        Tree {
            nodes: vec![TreeNode::Leaf {
                value,
                n_samples: 0,
                weight: 0.0,
            }],
            n_features,
            n_outputs,
        }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Number of test (internal) nodes.
    pub fn n_test_nodes(&self) -> usize {
        self.nodes.len() - self.n_leaves()
    }

    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, d)) = stack.pop() {
            best = best.max(d);
            if let TreeNode::Test { left, right, .. } = self.nodes[id] {
                stack.push((left, d + 1));
                stack.push((right, d + 1));
            }
        }
        best
    }

    /// Mean decrease of impurity per feature, normalized to sum to one
    /// (all zeros for a single leaf).
    pub fn mdi_importances(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.n_features];
        for node in &self.nodes {
            if let TreeNode::Test {
                feature,
                weighted_impurity_decrease,
                ..
            } = node
            {
                imp[*feature] += weighted_impurity_decrease;
            }
        }
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            imp.iter_mut().for_each(|v| *v /= total);
        }
        imp
    }
}
