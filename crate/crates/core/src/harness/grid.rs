use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::learner::{validation_loss, LearnerSpec, Model};
use crate::datasets::{train_test_split, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::rng;

/// One grid dimension: a dotted path into the JSON form of a learner spec
/// (e.g. `params.tree.max_depth`) and the values it takes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub path: String,
    pub values: Vec<Value>,
}

/// Cartesian product of the axes applied to `base`, last axis varying fastest.
pub fn expand_grid(base: &LearnerSpec, axes: &[GridAxis]) -> Result<Vec<LearnerSpec>> {
    let base = serde_json::to_value(base)?;
    let mut points = vec![base];
    for axis in axes {
        if axis.values.is_empty() {
            return Err(Error::InvalidParameter(format!("grid axis {} has no values", axis.path)));
        }
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for p in &points {
            for v in &axis.values {
                let mut q = p.clone();
                set_path(&mut q, &axis.path, v.clone())?;
                next.push(q);
            }
        }
        points = next;
    }
    points
        .into_iter()
        .map(|v| serde_json::from_value(v).map_err(|e| Error::InvalidParameter(format!("grid point: {e}"))))
        .collect()
}

fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = root;
    let mut keys = path.split('.').peekable();
    while let Some(k) = keys.next() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::InvalidParameter(format!("{path}: {k} is not inside an object")))?;
        if keys.peek().is_none() {
            obj.insert(k.to_string(), value);
            return Ok(());
        }
        cur = obj
            .get_mut(k)
            .ok_or_else(|| Error::InvalidParameter(format!("{path}: no field {k}")))?;
    }
    Err(Error::InvalidParameter("empty grid path".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub spec: LearnerSpec,
    pub validation_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best_index: usize,
    pub table: Vec<GridRow>,
    /// The best candidate refitted on the whole dataset.
    pub model: Model,
}

impl GridResult {
    pub fn best(&self) -> &LearnerSpec {
        &self.table[self.best_index].spec
    }
}

/// Exhaustive search: every candidate is fitted on a `1 - validation_fraction`
/// share of `ds` and scored by [`validation_loss`] on the rest. Ties go to
/// the earliest candidate. The winner is refitted on all of `ds`.
pub fn grid_search(ds: &Dataset, candidates: &[LearnerSpec], validation_fraction: f64, seed: u64) -> Result<GridResult> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    let (train, val) = train_test_split(ds, &SplitSpec::new(1.0 - validation_fraction, rng::derive_seed(seed, 0)))?;
    let fit_seed = rng::derive_seed(seed, 1);
    let mut table = Vec::with_capacity(candidates.len());
    let mut best_index = 0;
    for (k, spec) in candidates.iter().enumerate() {
        let loss = validation_loss(&spec.fit(&train, fit_seed)?, &val)?;
        if loss < table.get(best_index).map_or(f64::INFINITY, |r: &GridRow| r.validation_loss) {
            best_index = k;
        }
        table.push(GridRow {
            spec: spec.clone(),
            validation_loss: loss,
        });
    }
    let model = candidates[best_index].fit(ds, fit_seed)?;
    Ok(GridResult { best_index, table, model })
}
