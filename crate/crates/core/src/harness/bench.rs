use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::datasets::{gen_random_sparse_regression, Features};
use crate::error::{Error, Result};
use crate::matrix::Layout;
use crate::tree::{grow_tree, GrowthParams, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchLayout {
    RowMajor,
    ColumnMajor,
    Csc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeKind {
    Stump,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub layouts: Vec<BenchLayout>,
    pub n: usize,
    pub p: usize,
    pub density: f64,
    pub tree: TreeKind,
    /// Timed runs per layout, after one discarded warm-up run.
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub layout: BenchLayout,
    pub median_seconds: f64,
    pub seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn median(&self, layout: BenchLayout) -> Option<f64> {
        self.rows.iter().find(|r| r.layout == layout).map(|r| r.median_seconds)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Times tree growth on one random sparse regression problem stored in each
/// requested layout. All layouts must first grow the identical tree, else
/// `InvalidSplit` is returned before any timing.
pub fn bench_split(cfg: &BenchConfig) -> Result<BenchTable> {
    if cfg.layouts.is_empty() || cfg.repeats == 0 {
        return Err(Error::InvalidParameter("need at least one layout and one repeat".into()));
    }
    let ds = gen_random_sparse_regression(cfg.n, cfg.p, cfg.density, cfg.seed)?;
    let params = match cfg.tree {
        TreeKind::Stump => GrowthParams::stump(),
        TreeKind::Full => GrowthParams::default(),
    };
    let inputs: Vec<Features> = cfg
        .layouts
        .iter()
        .map(|l| {
            Ok(match l {
                BenchLayout::RowMajor => Features::Dense(ds.x.to_dense(Layout::RowMajor)?),
                BenchLayout::ColumnMajor => Features::Dense(ds.x.to_dense(Layout::ColumnMajor)?),
                BenchLayout::Csc => Features::Sparse(ds.x.to_csc()),
            })
        })
        .collect::<Result<_>>()?;
    let mut reference: Option<Tree> = None;
    for (x, l) in inputs.iter().zip(&cfg.layouts) {
        let t = grow_tree(x, &ds.y, None, &params)?;
        match &reference {
            Some(r) if *r != t => {
                return Err(Error::InvalidSplit(format!("{l:?} input grew a different tree")));
            }
            Some(_) => {}
            None => reference = Some(t),
        }
    }
    let mut rows = Vec::with_capacity(inputs.len());
    for (x, &layout) in inputs.iter().zip(&cfg.layouts) {
        // the equivalence pass above doubles as the warm-up run
        let mut seconds = Vec::with_capacity(cfg.repeats);
        for _ in 0..cfg.repeats {
            let start = Instant::now();
            let t = grow_tree(x, &ds.y, None, &params)?;
            seconds.push(start.elapsed().as_secs_f64());
            std::hint::black_box(t);
        }
        rows.push(BenchRow {
            layout,
            median_seconds: median(seconds.clone()),
            seconds,
        });
    }
    Ok(BenchTable {
        config: cfg.clone(),
        rows,
    })
}
