use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::boosting::{fit_gb, fit_gbmort, fit_gbrt_relabel_rpo, fit_gbrt_rpo, BoostMode, BoostParams, GbModel};
use crate::compression::{compress, node_count, select_t_cv, CompressedForest};
use crate::datasets::{Dataset, Features, Task};
use crate::error::{Error, Result};
use crate::forest::{fit_forest, Forest, ForestParams};
use crate::matrix::{DenseMatrix, Layout};
use crate::metrics::{lrap, regression_metrics, threshold};
use crate::rng;
use crate::tree::{classification_targets, grow, read_container, write_container, GrowthParams, Tree};

/// A learning algorithm with its hyper-parameters. The seed inside the
/// parameters is replaced by the seed given at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LearnerSpec {
    /// Predicts the training mean (class frequencies for classification).
    Constant,
    Tree {
        #[serde(default)]
        params: GrowthParams,
    },
    Forest {
        params: ForestParams,
    },
    Boosting {
        mode: BoostMode,
        params: BoostParams,
    },
    /// A forest pruned by the monotone stagewise path; `t` is chosen by
    /// cross-validation when absent.
    Compressed {
        forest: ForestParams,
        epsilon: f64,
        #[serde(default = "default_folds")]
        folds: usize,
        #[serde(default = "default_max_steps")]
        max_steps: usize,
        #[serde(default)]
        t: Option<f64>,
    },
}

fn default_folds() -> usize {
    10
}

fn default_max_steps() -> usize {
    5000
}

/// A fitted model of any family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Model {
    Constant { value: Vec<f64>, task: Task, n_features: usize },
    Tree { tree: Tree, task: Task },
    Forest(Forest),
    Boosting(GbModel),
    Compressed(CompressedForest),
}

impl LearnerSpec {
    pub fn fit(&self, ds: &Dataset, seed: u64) -> Result<Model> {
        if ds.n_samples() == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(match self {
            LearnerSpec::Constant => {
                let y = class_or_raw(ds)?;
                let n = y.n_rows() as f64;
                let value = (0..y.n_cols()).map(|j| y.column_vec(j).iter().sum::<f64>() / n).collect();
                Model::Constant {
                    value,
                    task: ds.task,
                    n_features: ds.n_features(),
                }
            }
            LearnerSpec::Tree { params } => Model::Tree {
                tree: grow(ds, &params.with_seed(seed))?,
                task: ds.task,
            },
            LearnerSpec::Forest { params } => Model::Forest(fit_forest(ds, &params.with_seed(seed))?),
            LearnerSpec::Boosting { mode, params } => {
                let p = params.with_seed(seed);
                Model::Boosting(match mode {
                    BoostMode::SingleTarget => fit_gb(ds, &p)?,
                    BoostMode::Mo => fit_gbmort(ds, &p)?,
                    BoostMode::Rpo => fit_gbrt_rpo(ds, &p)?,
                    BoostMode::RelabelRpo => fit_gbrt_relabel_rpo(ds, &p)?,
                })
            }
            LearnerSpec::Compressed {
                forest,
                epsilon,
                folds,
                max_steps,
                t,
            } => {
                let full = fit_forest(ds, &forest.with_seed(seed))?;
                let t_star = match t {
                    Some(t) => *t,
                    None => {
                        let build = |d: &Dataset, s: u64| fit_forest(d, &forest.with_seed(s));
                        select_t_cv(build, ds, *epsilon, *folds, *max_steps, rng::derive_seed(seed, 1))?.t_star
                    }
                };
                Model::Compressed(compress(&full, ds, t_star, *epsilon)?)
            }
        })
    }
}

fn class_or_raw(ds: &Dataset) -> Result<DenseMatrix> {
    if ds.task.is_classification() {
        classification_targets(&ds.y, ds.task)
    } else {
        Ok(ds.y.clone())
    }
}

impl Model {
    pub const FORMAT: &'static str = "model";

    pub fn task(&self) -> Task {
        match self {
            Model::Constant { task, .. } | Model::Tree { task, .. } => *task,
            Model::Forest(f) => f.task(),
            Model::Boosting(m) => m.task,
            Model::Compressed(c) => c.task,
        }
    }

    /// Number of test nodes over all trees.
    pub fn node_count(&self) -> usize {
        match self {
            Model::Constant { .. } => 0,
            Model::Tree { tree, .. } => node_count(tree),
            Model::Forest(f) => node_count(f),
            Model::Boosting(m) => m.stages.iter().map(|s| node_count(&s.tree)).sum(),
            Model::Compressed(c) => node_count(c),
        }
    }

    /// Regression outputs, or positive-class scores on the probability scale
    /// (thresholded at 0.5) for classification tasks.
    pub fn predict(&self, x: &Features) -> Result<DenseMatrix> {
        let task = self.task();
        let out = match self {
            Model::Constant { value, n_features, .. } => {
                if x.n_cols() != *n_features {
                    return Err(Error::Shape(format!("model expects {n_features} features, input has {}", x.n_cols())));
                }
                let mut m = DenseMatrix::zeros(x.n_rows(), value.len(), Layout::RowMajor);
                for i in 0..x.n_rows() {
                    m.row_mut(i).unwrap().copy_from_slice(value);
                }
                m
            }
            Model::Tree { tree, .. } => tree.predict(x)?,
            Model::Forest(f) => f.predict(x)?,
            Model::Boosting(m) if task.is_classification() && m.loss.is_logistic() => m.predict_proba(x)?,
            Model::Boosting(m) => {
                let f = m.predict(x)?;
                if task == Task::Binary {
                    // square or absolute loss on ±1 targets
                    map(&f, |v| 0.5 * (v + 1.0))
                } else {
                    f
                }
            }
            Model::Compressed(c) => {
                let s = DenseMatrix::from_column(c.predict(x)?);
                if task == Task::Binary {
                    map(&s, |v| 0.5 * (v + 1.0))
                } else {
                    s
                }
            }
        };
        Ok(out)
    }

    /// Regression outputs, ±1 labels for binary tasks, 0/1 indicators for
    /// multilabel tasks.
    pub fn predict_labels(&self, x: &Features) -> Result<DenseMatrix> {
        let scores = self.predict(x)?;
        Ok(match self.task() {
            Task::Regression => scores,
            Task::Multilabel => threshold(&scores, 0.5),
            Task::Binary => map(&scores, |v| if v > 0.5 { 1.0 } else { -1.0 }),
        })
    }

    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        write_container(Self::FORMAT, self, w)
    }

    pub fn load<R: Read>(r: R) -> Result<Model> {
        read_container(Self::FORMAT, r)
    }
}

fn map(m: &DenseMatrix, g: impl Fn(f64) -> f64) -> DenseMatrix {
    let mut out = m.clone();
    for i in 0..m.n_rows() {
        for j in 0..m.n_cols() {
            out.set(i, j, g(m.get(i, j)));
        }
    }
    out
}

/// Lower-is-better validation score: mean squared error for regression, 0-1
/// error for binary tasks and `1 - LRAP` for multilabel tasks.
pub fn validation_loss(model: &Model, ds: &Dataset) -> Result<f64> {
    match ds.task {
        Task::Regression => Ok(regression_metrics(&ds.y, &model.predict(&ds.x)?)?.mse),
        Task::Binary => {
            let labels = model.predict_labels(&ds.x)?;
            let (n, d) = ds.y.shape();
            let wrong = (0..n)
                .flat_map(|i| (0..d).map(move |j| (i, j)))
                .filter(|&(i, j)| (labels.get(i, j) > 0.0) != (ds.y.get(i, j) > 0.0))
                .count();
            Ok(wrong as f64 / (n * d) as f64)
        }
        Task::Multilabel => Ok(1.0 - lrap(&ds.y, &model.predict(&ds.x)?)?.value),
    }
}
