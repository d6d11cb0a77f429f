//! Learning samples: synthetic generators, file loaders, splitting and scaling.

mod split;
mod svmlight;
mod synthetic;
mod table;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{CscMatrix, DenseMatrix, Layout};

pub use split::{split_indices, standardize, train_test_split, ColumnScaler, SplitSpec};
pub use svmlight::{load_svmlight, parse_svmlight, write_svmlight, SvmlightOptions};
pub use synthetic::{
    friedman1_function, gen_friedman1, gen_friedman1_chain, gen_friedman1_group, gen_friedman1_ind,
    gen_random_sparse_regression, gen_twonorm, Friedman1, FriedmanMulti, FriedmanMultiKind, Generator,
    InputLaw, PairSumMultilabel, Twonorm, TWONORM_SHIFT,
};
pub use table::{load_csv, read_csv, write_csv, written_schema, CsvSchema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Regression,
    /// Single or multi-output binary targets in {-1, +1}.
    Binary,
    /// Label indicator matrix with entries in {0, 1}.
    Multilabel,
}

impl Task {
    pub fn is_classification(self) -> bool {
        !matches!(self, Task::Regression)
    }
}

/// Input matrix: dense (any layout) or column-compressed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Features {
    Dense(DenseMatrix),
    Sparse(CscMatrix),
}

impl Features {
    pub fn n_rows(&self) -> usize {
        match self {
            Features::Dense(m) => m.n_rows(),
            Features::Sparse(m) => m.n_rows(),
        }
    }

    pub fn n_cols(&self) -> usize {
        match self {
            Features::Dense(m) => m.n_cols(),
            Features::Sparse(m) => m.n_cols(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Features {
        match self {
            Features::Dense(m) => Features::Dense(m.select_rows(rows)),
            Features::Sparse(m) => Features::Sparse(m.select_rows(rows)),
        }
    }

    pub fn to_dense(&self, layout: Layout) -> Result<DenseMatrix> {
        match self {
            Features::Dense(m) => Ok(m.to_layout(layout)),
            Features::Sparse(m) => m.to_dense(layout),
        }
    }

    pub fn to_csc(&self) -> CscMatrix {
        match self {
            Features::Dense(m) => m.to_csc(),
            Features::Sparse(m) => m.clone(),
        }
    }
}

impl From<DenseMatrix> for Features {
    fn from(m: DenseMatrix) -> Self {
        Features::Dense(m)
    }
}

impl From<CscMatrix> for Features {
    fn from(m: CscMatrix) -> Self {
        Features::Sparse(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Features,
    pub y: DenseMatrix,
    pub task: Task,
}

impl Dataset {
    /// Checks row agreement and the target encoding of `task`.
    pub fn new(x: Features, y: DenseMatrix, task: Task) -> Result<Self> {
        if x.n_rows() != y.n_rows() {
            return Err(Error::Shape(format!(
                "X has {} rows but Y has {}",
                x.n_rows(),
                y.n_rows()
            )));
        }
        check_targets(&y, task)?;
        Ok(Dataset { x, y, task })
    }

    pub fn n_samples(&self) -> usize {
        self.y.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.x.n_cols()
    }

    pub fn n_outputs(&self) -> usize {
        self.y.n_cols()
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(rows),
            y: self.y.select_rows(rows),
            task: self.task,
        }
    }
}

pub(crate) fn check_targets(y: &DenseMatrix, task: Task) -> Result<()> {
    let ok: fn(f64) -> bool = match task {
        Task::Regression => |v: f64| v.is_finite(),
        Task::Binary => |v: f64| v == 1.0 || v == -1.0,
        Task::Multilabel => |v: f64| v == 0.0 || v == 1.0,
    };
    match y.values().iter().find(|v| !ok(**v)) {
        Some(v) => Err(Error::InvalidTarget(format!("{v} is not a valid {task:?} target"))),
        None => Ok(()),
    }
}
