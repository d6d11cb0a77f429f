//! Averaging ensembles: bagging, random forests and extra-trees, optionally
//! grown on randomly projected outputs.
//!
//! With a projection, each tree is grown with the variance criterion on `Phi Y`
//! and its leaves are then relabelled with the mean of the original outputs of
//! the tree's own training sample, so every member predicts in the original
//! `d`-dimensional output space.

use std::io::{Read, Write};

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{Dataset, Features, Task};
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, Layout};
use crate::projections::{project, sample_projection, ProjectionKind};
use crate::rng;
use crate::tree::{classification_targets, grow_tree, read_container, write_container, Criterion, GrowthParams, MaxFeatures, SplitterKind, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestProjection {
    pub kind: ProjectionKind,
    pub q: usize,
    /// One `Phi` for the whole forest instead of one per tree.
    pub shared: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    #[serde(default)]
    pub tree: GrowthParams,
    pub bootstrap: bool,
    #[serde(default)]
    pub projection: Option<ForestProjection>,
    #[serde(default)]
    pub seed: u64,
}

impl ForestParams {
    /// Bootstrap replicates of fully grown trees searching all features.
    pub fn bagging(n_trees: usize) -> Self {
        ForestParams {
            n_trees,
            tree: GrowthParams::default(),
            bootstrap: true,
            projection: None,
            seed: 0,
        }
    }

    /// Bagging with `max_features` drawn at each node.
    pub fn random_forest(n_trees: usize, max_features: MaxFeatures) -> Self {
        let mut p = Self::bagging(n_trees);
        p.tree.max_features = max_features;
        p
    }

    /// Extremely randomized trees: no bootstrap, one random threshold per drawn feature.
    pub fn extra_trees(n_trees: usize, max_features: MaxFeatures) -> Self {
        ForestParams {
            n_trees,
            tree: GrowthParams {
                max_features,
                splitter: SplitterKind::RandomThreshold,
                ..GrowthParams::default()
            },
            bootstrap: false,
            projection: None,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_projection(mut self, kind: ProjectionKind, q: usize, shared: bool) -> Self {
        self.projection = Some(ForestProjection { kind, q, shared });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidParameter("a forest needs at least one tree".into()));
        }
        if self.projection.is_some_and(|p| p.q == 0) {
            return Err(Error::InvalidProjection("q must be at least 1".into()));
        }
        self.tree.validate()
    }
}

/// Seed of tree `m` in a forest seeded with `seed`.
pub fn tree_seed(seed: u64, m: usize) -> u64 {
    rng::derive_seed(seed, m as u64)
}

// sub-streams of a tree seed
const BOOTSTRAP_STREAM: u64 = 0;
const PROJECTION_STREAM: u64 = 1;
const GROWTH_STREAM: u64 = 2;
const SHARED_PROJECTION_STREAM: u64 = u64::MAX;

/// Multiplicity of each sample in the bootstrap replicate drawn from `seed`
/// (`n` draws with replacement).
pub fn bootstrap_counts(n: usize, seed: u64) -> Vec<u32> {
    let mut rng = rng::stream(seed, BOOTSTRAP_STREAM);
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1;
    }
    counts
}

/// Samples left out of the bootstrap replicate drawn from `seed`, ascending.
pub fn oob_indices(n: usize, seed: u64) -> Vec<usize> {
    bootstrap_counts(n, seed)
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == 0)
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    trees: Vec<Tree>,
    task: Task,
    params: ForestParams,
    n_features: usize,
    n_outputs: usize,
}

pub fn fit_forest(ds: &Dataset, params: &ForestParams) -> Result<Forest> {
    params.validate()?;
    let n = ds.n_samples();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let y = if ds.task.is_classification() {
        classification_targets(&ds.y, ds.task)?
    } else {
        ds.y.clone()
    };
    let d = y.n_cols();
    let mut tree_params = params.tree;
    if params.projection.is_some() {
        tree_params.criterion = Criterion::Variance;
    }
    let shared = match params.projection {
        Some(p) if p.shared => {
            let phi = sample_projection(p.kind, p.q, d, &mut rng::stream(params.seed, SHARED_PROJECTION_STREAM))?;
            Some(project(&phi, &y)?)
        }
        _ => None,
    };

    let fit_one = |m: usize| -> Result<Tree> {
        let seed = tree_seed(params.seed, m);
        let weights: Option<Vec<f64>> = params
            .bootstrap
            .then(|| bootstrap_counts(n, seed).into_iter().map(f64::from).collect());
        let tp = tree_params.with_seed(rng::derive_seed(seed, GROWTH_STREAM));
        let Some(proj) = params.projection else {
            return grow_tree(&ds.x, &y, weights.as_deref(), &tp);
        };
        let per_tree;
        let targets = match &shared {
            Some(t) => t,
            None => {
                let phi = sample_projection(proj.kind, proj.q, d, &mut rng::stream(seed, PROJECTION_STREAM))?;
                per_tree = project(&phi, &y)?;
                &per_tree
            }
        };
        let t = grow_tree(&ds.x, targets, weights.as_deref(), &tp)?;
        t.relabel_leaves(&ds.x, &y, weights.as_deref())
    };
    let trees = (0..params.n_trees).into_par_iter().map(fit_one).collect::<Result<Vec<_>>>()?;
    Ok(Forest {
        trees,
        task: ds.task,
        params: *params,
        n_features: ds.n_features(),
        n_outputs: d,
    })
}

/// Mean of the member predictions (class probabilities for classification forests).
pub fn predict_forest(forest: &Forest, x: &Features) -> Result<DenseMatrix> {
    forest.predict(x)
}

impl Forest {
    pub const FORMAT: &'static str = "forest";

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    /// Total number of nodes over all trees.
    pub fn n_nodes(&self) -> usize {
        self.trees.iter().map(Tree::n_nodes).sum()
    }

    pub fn predict(&self, x: &Features) -> Result<DenseMatrix> {
        if x.n_cols() != self.n_features {
            return Err(Error::Shape(format!(
                "forest expects {} features, input has {}",
                self.n_features,
                x.n_cols()
            )));
        }
        // convert once so members all take the CSR path
        let x = match x {
            Features::Sparse(m) => Features::Sparse(m.clone()),
            Features::Dense(m) => Features::Dense(m.to_layout(Layout::RowMajor)),
        };
        let csr = match &x {
            Features::Sparse(m) => Some(m.to_csr()),
            Features::Dense(_) => None,
        };
        let preds = self
            .trees
            .par_iter()
            .map(|t| match (&x, &csr) {
                (_, Some(c)) => t.predict_csr(c),
                (Features::Dense(m), None) => t.predict_dense(m),
                (Features::Sparse(_), None) => unreachable!(),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = vec![0.0; x.n_rows() * self.n_outputs];
        for p in &preds {
            for (o, v) in out.iter_mut().zip(p.values()) {
                *o += v;
            }
        }
        let m = self.trees.len() as f64;
        out.iter_mut().for_each(|v| *v /= m);
        DenseMatrix::new(x.n_rows(), self.n_outputs, Layout::RowMajor, out)
    }

    /// Out-of-bag sample ids of every tree (all empty without bootstrap).
    pub fn oob_indices(&self, n: usize) -> Vec<Vec<usize>> {
        (0..self.trees.len())
            .map(|m| {
                if self.params.bootstrap {
                    oob_indices(n, tree_seed(self.params.seed, m))
                } else {
                    Vec::new()
                }
            })
            .collect()
    }

    /// Mean of the normalized per-tree MDI importances.
    pub fn mdi_importances(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.n_features];
        for t in &self.trees {
            for (a, b) in imp.iter_mut().zip(t.mdi_importances()) {
                *a += b;
            }
        }
        imp.iter_mut().for_each(|v| *v /= self.trees.len() as f64);
        imp
    }

    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        write_container(Self::FORMAT, self, w)
    }

    pub fn load<R: Read>(r: R) -> Result<Forest> {
        let f: Forest = read_container(Self::FORMAT, r)?;
        Forest::from_parts(f.trees, f.task, f.params, f.n_features, f.n_outputs)
    }

    /// Validates every member tree against the declared shape.
    pub fn from_parts(trees: Vec<Tree>, task: Task, params: ForestParams, n_features: usize, n_outputs: usize) -> Result<Forest> {
        if trees.is_empty() {
            return Err(Error::Structure("a forest needs at least one tree".into()));
        }
        let trees = trees
            .into_iter()
            .map(|t| {
                if t.n_features() != n_features || t.n_outputs() != n_outputs {
                    return Err(Error::Structure("member tree shape does not match the forest".into()));
                }
                Tree::from_nodes(t.nodes().to_vec(), n_features, n_outputs)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Forest {
            trees,
            task,
            params,
            n_features,
            n_outputs,
        })
    }
}
