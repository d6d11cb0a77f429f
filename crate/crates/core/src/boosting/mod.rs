//! Gradient boosting with regression-tree weak models.
//!
//! A model predicts `f(x) = rho_0 + sum_m mu * rho_m (.) g_m(x)` where `(.)` is
//! the element-wise product. The four fitting modes differ in how the weak
//! model `g_m` is built from the gradient matrix:
//!
//! * single target: one single-output tree per stage, outputs visited round-robin,
//! * multi-output (`fit_gbmort`): one multi-output tree on all gradients,
//! * random projection (`fit_gbrt_rpo`): one single-output tree on a random
//!   1-d projection of the gradients, its scalar output shared by all targets,
//! * relabelled projection (`fit_gbrt_relabel_rpo`): a tree grown on `q`
//!   projected gradients whose leaves are relabelled with the mean original
//!   gradients.

mod line_search;
mod loss;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub use line_search::{line_search_rho, minimize_scalar};
pub use loss::{constant_minimizer, loss_gradient, loss_value, negative_gradient, Loss};

use crate::datasets::{Dataset, Features, Task};
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, Layout};
use crate::projections::{project, sample_projection, ProjectionKind, ProjectionMatrix};
use crate::rng;
use crate::tree::{grow_tree, read_container, write_container, Criterion, GrowthParams, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoostMode {
    SingleTarget,
    Mo,
    Rpo,
    RelabelRpo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostProjection {
    pub kind: ProjectionKind,
    pub q: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub n_stages: usize,
    /// Learning rate in (0, 1].
    pub mu: f64,
    #[serde(default)]
    pub loss: Loss,
    /// Weak model; the criterion is always variance on the pseudo-residuals.
    #[serde(default = "GrowthParams::stump")]
    pub tree: GrowthParams,
    /// Output projection of the rpo modes (Gaussian with q = 1 when unset).
    #[serde(default)]
    pub projection: Option<BoostProjection>,
    #[serde(default)]
    pub seed: u64,
}

impl BoostParams {
    /// Stumps under the multi-output square loss.
    pub fn new(n_stages: usize, mu: f64) -> Self {
        BoostParams {
            n_stages,
            mu,
            loss: Loss::L2Multi,
            tree: GrowthParams::stump(),
            projection: None,
            seed: 0,
        }
    }

    pub fn with_loss(mut self, loss: Loss) -> Self {
        self.loss = loss;
        self
    }

    pub fn with_tree(mut self, tree: GrowthParams) -> Self {
        self.tree = tree;
        self
    }

    pub fn with_projection(mut self, kind: ProjectionKind, q: usize) -> Self {
        self.projection = Some(BoostProjection { kind, q });
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::InvalidStep(self.mu));
        }
        if self.projection.is_some_and(|p| p.q == 0) {
            return Err(Error::InvalidProjection("q must be at least 1".into()));
        }
        self.tree.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    /// Weak model with either `d` outputs or a single output shared by all targets.
    pub tree: Tree,
    pub rho: Vec<f64>,
    pub projection: Option<ProjectionMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbModel {
    pub rho0: Vec<f64>,
    pub stages: Vec<Stage>,
    pub mu: f64,
    pub loss: Loss,
    pub mode: BoostMode,
    pub task: Task,
    pub n_features: usize,
}

/// Single-output boosting; with several outputs, stage `m` fits output `m mod d`.
pub fn fit_gb(ds: &Dataset, params: &BoostParams) -> Result<GbModel> {
    fit(ds, params, BoostMode::SingleTarget)
}

pub fn fit_gbmort(ds: &Dataset, params: &BoostParams) -> Result<GbModel> {
    fit(ds, params, BoostMode::Mo)
}

/// Uses `params.projection.kind` with `q` forced to 1.
pub fn fit_gbrt_rpo(ds: &Dataset, params: &BoostParams) -> Result<GbModel> {
    fit(ds, params, BoostMode::Rpo)
}

pub fn fit_gbrt_relabel_rpo(ds: &Dataset, params: &BoostParams) -> Result<GbModel> {
    fit(ds, params, BoostMode::RelabelRpo)
}

/// Targets in the form the loss expects: multilabel 0/1 becomes ±1 under logistic losses.
pub fn boosting_targets(ds: &Dataset, loss: Loss) -> Result<DenseMatrix> {
    let mut y = ds.y.to_layout(Layout::RowMajor);
    if loss.is_logistic() && ds.task == Task::Multilabel {
        for i in 0..y.n_rows() {
            for j in 0..y.n_cols() {
                y.set(i, j, 2.0 * y.get(i, j) - 1.0);
            }
        }
    }
    loss.check_targets(&y)?;
    Ok(y)
}

fn fit(ds: &Dataset, params: &BoostParams, mode: BoostMode) -> Result<GbModel> {
    params.validate()?;
    let n = ds.n_samples();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let y = boosting_targets(ds, params.loss)?;
    let d = y.n_cols();
    let rho0 = constant_minimizer(params.loss, &y)?;
    let mut f = DenseMatrix::zeros(n, d, Layout::RowMajor);
    for i in 0..n {
        f.row_mut(i).expect("row-major").copy_from_slice(&rho0);
    }
    let mut tree_params = params.tree;
    tree_params.criterion = Criterion::Variance;
    let mut stages = Vec::with_capacity(params.n_stages);
    for m in 0..params.n_stages {
        let stage_seed = rng::derive_seed(params.seed, m as u64);
        let tp = tree_params.with_seed(rng::derive_seed(stage_seed, 1));
        let residual = negative_gradient(params.loss, &y, &f)?;
        let (tree, projection) = match mode {
            BoostMode::SingleTarget => {
                let target = DenseMatrix::from_column(residual.column_vec(m % d));
                (grow_tree(&ds.x, &target, None, &tp)?, None)
            }
            BoostMode::Mo => (grow_tree(&ds.x, &residual, None, &tp)?, None),
            BoostMode::Rpo | BoostMode::RelabelRpo => {
                let spec = params.projection.unwrap_or(BoostProjection {
                    kind: ProjectionKind::Gaussian,
                    q: 1,
                });
                let q = if mode == BoostMode::Rpo { 1 } else { spec.q };
                let phi = sample_projection(spec.kind, q, d, &mut rng::stream(stage_seed, 0))?;
                let projected = project(&phi, &residual)?;
                let mut tree = grow_tree(&ds.x, &projected, None, &tp)?;
                if mode == BoostMode::RelabelRpo {
                    tree = tree.relabel_leaves(&ds.x, &residual, None)?;
                }
                (tree, Some(phi))
            }
        };
        let g = tree.predict(&ds.x)?;
        let rho = if mode == BoostMode::SingleTarget {
            let j = m % d;
            let yj = DenseMatrix::from_column(y.column_vec(j));
            let fj = DenseMatrix::from_column(f.column_vec(j));
            let mut rho = vec![0.0; d];
            rho[j] = line_search_rho(params.loss, &yj, &fj, &g)?[0];
            rho
        } else {
            line_search_rho(params.loss, &y, &f, &g)?
        };
        add_stage(&mut f, params.mu, &rho, &g);
        stages.push(Stage { tree, rho, projection });
    }
    Ok(GbModel {
        rho0,
        stages,
        mu: params.mu,
        loss: params.loss,
        mode,
        task: ds.task,
        n_features: ds.n_features(),
    })
}

/// `f += mu * rho (.) g`, broadcasting a single-column `g`.
fn add_stage(f: &mut DenseMatrix, mu: f64, rho: &[f64], g: &DenseMatrix) {
    let shared = g.n_cols() == 1;
    for i in 0..f.n_rows() {
        for (j, &r) in rho.iter().enumerate() {
            if r != 0.0 {
                let gij = if shared { g.get(i, 0) } else { g.get(i, j) };
                f.set(i, j, f.get(i, j) + mu * r * gij);
            }
        }
    }
}

pub fn predict_gb(model: &GbModel, x: &Features) -> Result<DenseMatrix> {
    model.predict(x)
}

/// Training loss of the constant model followed by the loss after each stage.
pub fn staged_training_loss(model: &GbModel, ds: &Dataset) -> Result<Vec<f64>> {
    let y = boosting_targets(ds, model.loss)?;
    let mut out = Vec::with_capacity(model.stages.len() + 1);
    model.staged(&ds.x, |f| {
        out.push(loss_value(model.loss, &y, f)?);
        Ok(())
    })?;
    Ok(out)
}

impl GbModel {
    pub const FORMAT: &'static str = "gb";

    pub fn n_outputs(&self) -> usize {
        self.rho0.len()
    }

    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    /// Calls `visit` with the constant model and then after every stage.
    pub fn staged(&self, x: &Features, mut visit: impl FnMut(&DenseMatrix) -> Result<()>) -> Result<()> {
        if x.n_cols() != self.n_features {
            return Err(Error::Shape(format!(
                "model expects {} features, input has {}",
                self.n_features,
                x.n_cols()
            )));
        }
        let n = x.n_rows();
        let mut f = DenseMatrix::zeros(n, self.n_outputs(), Layout::RowMajor);
        for i in 0..n {
            f.row_mut(i).expect("row-major").copy_from_slice(&self.rho0);
        }
        let x = match x {
            Features::Sparse(m) => Features::Sparse(m.clone()),
            Features::Dense(m) => Features::Dense(m.to_layout(Layout::RowMajor)),
        };
        visit(&f)?;
        for s in &self.stages {
            let g = s.tree.predict(&x)?;
            add_stage(&mut f, self.mu, &s.rho, &g);
            visit(&f)?;
        }
        Ok(())
    }

    /// Raw additive scores.
    pub fn predict(&self, x: &Features) -> Result<DenseMatrix> {
        let mut last = None;
        self.staged(x, |f| {
            last = Some(f.clone());
            Ok(())
        })?;
        Ok(last.expect("the constant model is always visited"))
    }

    /// Positive-class probabilities `1 / (1 + exp(-2 f))` under logistic losses.
    pub fn predict_proba(&self, x: &Features) -> Result<DenseMatrix> {
        if !self.loss.is_logistic() {
            return Err(Error::Unsupported("probabilities need a logistic loss".into()));
        }
        let mut f = self.predict(x)?;
        for i in 0..f.n_rows() {
            for j in 0..f.n_cols() {
                f.set(i, j, 1.0 / (1.0 + (-2.0 * f.get(i, j)).exp()));
            }
        }
        Ok(f)
    }

    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        write_container(Self::FORMAT, self, w)
    }

    pub fn load<R: Read>(r: R) -> Result<GbModel> {
        let m: GbModel = read_container(Self::FORMAT, r)?;
        let d = m.rho0.len();
        for s in &m.stages {
            let t = &s.tree;
            if s.rho.len() != d || (t.n_outputs() != d && t.n_outputs() != 1) || t.n_features() != m.n_features {
                return Err(Error::Structure("stage shape does not match the model".into()));
            }
            Tree::from_nodes(t.nodes().to_vec(), t.n_features(), t.n_outputs())?;
        }
        Ok(m)
    }
}
