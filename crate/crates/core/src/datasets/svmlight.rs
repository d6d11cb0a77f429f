//! SVMlight / libsvm text format.
//!
//! Each line is `<targets> <idx>:<value> ...` with 1-based feature indices
//! that must be strictly increasing. `<targets>` is a real number, `-1`/`+1`,
//! or a comma-separated list of 0-based label ids (possibly empty, in which
//! case the line starts with whitespace). `#` starts a comment; blank lines are
//! skipped. In memory, feature `k` on disk becomes column `k - 1`.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, Features, Task};
use crate::error::{Error, Result};
use crate::matrix::{CscMatrix, DenseMatrix, Layout};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmlightOptions {
    /// Inferred when absent: label lists give multilabel, all-±1 gives binary,
    /// anything else regression.
    pub task: Option<Task>,
    /// Defaults to the largest index seen.
    pub n_features: Option<usize>,
    /// Multilabel output count; defaults to the largest label id + 1.
    pub n_labels: Option<usize>,
}

enum Target {
    Real(f64),
    Labels(Vec<usize>),
}

pub fn load_svmlight(path: impl AsRef<Path>, opts: &SvmlightOptions) -> Result<Dataset> {
    parse_svmlight(BufReader::new(File::open(path)?), opts)
}

pub fn parse_svmlight<R: BufRead>(reader: R, opts: &SvmlightOptions) -> Result<Dataset> {
    let mut targets = Vec::new();
    let mut triplets = Vec::new();
    let mut max_feature = 0usize;
    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let mut tokens = content.split_whitespace().peekable();
        let starts_with_space = content.starts_with(char::is_whitespace);
        let target = if starts_with_space && tokens.peek().is_some_and(|t| t.contains(':')) {
            Target::Labels(Vec::new())
        } else {
            let t = tokens.next().ok_or_else(|| err("missing target".into()))?;
            if t.contains(',') || opts.task == Some(Task::Multilabel) {
                let labels = t
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<usize>().map_err(|e| err(format!("label `{s}`: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                Target::Labels(labels)
            } else {
                Target::Real(t.parse::<f64>().map_err(|e| err(format!("target `{t}`: {e}")))?)
            }
        };
        let row = targets.len();
        let mut prev = 0usize;
        for tok in tokens {
            if tok.starts_with("qid:") {
                continue;
            }
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected idx:value, got `{tok}`")))?;
            let idx: usize = idx.parse().map_err(|e| err(format!("index `{idx}`: {e}")))?;
            let val: f64 = val.parse().map_err(|e| err(format!("value `{val}`: {e}")))?;
            if idx == 0 {
                return Err(err("feature indices are 1-based".into()));
            }
            if idx <= prev {
                return Err(err(format!("feature index {idx} does not increase")));
            }
            if !val.is_finite() {
                return Err(err(format!("non-finite value `{val}`")));
            }
            prev = idx;
            max_feature = max_feature.max(idx);
            triplets.push((row, idx - 1, val));
        }
        targets.push(target);
    }
    if targets.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = targets.len();
    let p = match opts.n_features {
        Some(p) if p < max_feature => {
            return Err(Error::Shape(format!("feature index {max_feature} exceeds n_features = {p}")))
        }
        Some(p) => p,
        None => max_feature,
    };
    let has_labels = targets.iter().any(|t| matches!(t, Target::Labels(_)));
    if has_labels {
        // a lone label id carries no comma, so it was read as a real
        for t in targets.iter_mut() {
            if let Target::Real(v) = *t {
                if v >= 0.0 && v.fract() == 0.0 {
                    *t = Target::Labels(vec![v as usize]);
                }
            }
        }
    }
    let task = opts.task.unwrap_or_else(|| {
        if has_labels {
            Task::Multilabel
        } else if targets
            .iter()
            .all(|t| matches!(t, Target::Real(v) if *v == 1.0 || *v == -1.0))
        {
            Task::Binary
        } else {
            Task::Regression
        }
    });
    let y = match task {
        Task::Multilabel => {
            let max_label = targets
                .iter()
                .filter_map(|t| match t {
                    Target::Labels(l) => l.iter().max().map(|m| m + 1),
                    Target::Real(_) => None,
                })
                .max()
                .unwrap_or(0);
            let d = opts.n_labels.unwrap_or(max_label);
            if d < max_label {
                return Err(Error::Shape(format!("label id {} exceeds n_labels = {d}", max_label - 1)));
            }
            let mut y = DenseMatrix::zeros(n, d, Layout::RowMajor);
            for (i, t) in targets.iter().enumerate() {
                match t {
                    Target::Labels(l) => l.iter().for_each(|&j| y.set(i, j, 1.0)),
                    Target::Real(_) => {
                        return Err(Error::InvalidTarget(format!("row {i} has a scalar target in a multilabel file")))
                    }
                }
            }
            y
        }
        _ => {
            let v = targets
                .iter()
                .enumerate()
                .map(|(i, t)| match t {
                    Target::Real(v) => Ok(*v),
                    Target::Labels(_) => Err(Error::InvalidTarget(format!("row {i} has a label list"))),
                })
                .collect::<Result<Vec<_>>>()?;
            DenseMatrix::from_column(v)
        }
    };
    let x = CscMatrix::from_triplets(&triplets, n, p)?;
    Dataset::new(Features::Sparse(x), y, task)
}

/// Writes `ds` in the format read by [`parse_svmlight`]. Values use Rust's
/// shortest round-trip formatting, so reading back is exact. A multilabel row
/// with neither labels nor features would be a blank line and is rejected.
pub fn write_svmlight<W: Write>(ds: &Dataset, mut w: W) -> Result<()> {
    if ds.task != Task::Multilabel && ds.n_outputs() != 1 {
        return Err(Error::Unsupported("svmlight stores a single scalar target".into()));
    }
    let csr = ds.x.to_csc().to_csr();
    for i in 0..ds.n_samples() {
        if ds.task == Task::Multilabel {
            let labels: Vec<String> = (0..ds.n_outputs())
                .filter(|&j| ds.y.get(i, j) == 1.0)
                .map(|j| j.to_string())
                .collect();
            if labels.is_empty() {
                if csr.row(i).0.is_empty() {
                    return Err(Error::Unsupported(format!("row {i} has no labels and no features")));
                }
                write!(w, " ")?;
            } else {
                write!(w, "{}", labels.join(","))?;
            }
        } else {
            write!(w, "{}", ds.y.get(i, 0))?;
        }
        let (cols, vals) = csr.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            write!(w, " {}:{}", j + 1, v)?;
        }
        writeln!(w)?;
    }
    Ok(())
}
