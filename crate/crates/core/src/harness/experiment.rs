use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::learner::{LearnerSpec, Model};
use crate::datasets::{
    load_csv, load_svmlight, train_test_split, CsvSchema, Dataset, Friedman1, FriedmanMulti, FriedmanMultiKind,
    Generator, PairSumMultilabel, SplitSpec, SvmlightOptions, Twonorm,
};
use crate::error::{Error, Result};
use crate::metrics::{
    averaged_metric, coverage_error, hamming_loss, jaccard, lrap, one_error, ranking_loss, regression_metrics,
    roc_auc, subset_accuracy, Averaging, BinaryMetric,
};
use crate::rng;

/// Where the samples come from. Synthetic sources are regenerated per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DatasetSpec {
    Friedman1 {
        n: usize,
        #[serde(default = "one")]
        noise_sd: f64,
        #[serde(default = "ten")]
        n_features: usize,
    },
    FriedmanMulti {
        variant: FriedmanMultiKind,
        n: usize,
        d: usize,
    },
    Twonorm {
        n: usize,
    },
    PairSumMultilabel {
        n: usize,
        n_features: usize,
        d: usize,
    },
    SparseRegression {
        n: usize,
        p: usize,
        density: f64,
    },
    Svmlight {
        path: PathBuf,
        #[serde(default)]
        options: SvmlightOptions,
    },
    Csv {
        path: PathBuf,
        schema: CsvSchema,
    },
}

fn one() -> f64 {
    1.0
}

fn ten() -> usize {
    10
}

struct SparseRegression {
    p: usize,
    density: f64,
}

impl Generator for SparseRegression {
    fn generate(&self, n: usize, seed: u64) -> Result<Dataset> {
        crate::datasets::gen_random_sparse_regression(n, self.p, self.density, seed)
    }
}

impl DatasetSpec {
    /// Generator and sample size of synthetic sources.
    pub fn generator(&self) -> Option<(Box<dyn Generator>, usize)> {
        Some(match *self {
            DatasetSpec::Friedman1 { n, noise_sd, n_features } => (
                Box::new(Friedman1 {
                    noise_sd,
                    n_features,
                    ..Friedman1::default()
                }),
                n,
            ),
            DatasetSpec::FriedmanMulti { variant, n, d } => (Box::new(FriedmanMulti::new(variant, d)), n),
            DatasetSpec::Twonorm { n } => (Box::new(Twonorm), n),
            DatasetSpec::PairSumMultilabel { n, n_features, d } => (Box::new(PairSumMultilabel::new(n_features, d)), n),
            DatasetSpec::SparseRegression { n, p, density } => (Box::new(SparseRegression { p, density }), n),
            DatasetSpec::Svmlight { .. } | DatasetSpec::Csv { .. } => return None,
        })
    }

    /// The dataset; `seed` only matters for synthetic sources.
    pub fn load(&self, seed: u64) -> Result<Dataset> {
        match self {
            DatasetSpec::Svmlight { path, options } => load_svmlight(path, options),
            DatasetSpec::Csv { path, schema } => load_csv(path, schema),
            _ => {
                let (g, n) = self.generator().expect("synthetic source");
                g.generate(n, seed)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricName {
    Mse,
    Mae,
    R2,
    MacroR2,
    VarianceR2,
    Accuracy,
    ErrorRate,
    F1,
    MacroF1,
    MicroF1,
    /// Mean over output columns.
    RocAuc,
    SubsetAccuracy,
    HammingLoss,
    Jaccard,
    OneError,
    CoverageError,
    RankingLoss,
    Lrap,
    NodeCount,
}

impl MetricName {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::Mse => "mse",
            MetricName::Mae => "mae",
            MetricName::R2 => "r2",
            MetricName::MacroR2 => "macro-r2",
            MetricName::VarianceR2 => "variance-r2",
            MetricName::Accuracy => "accuracy",
            MetricName::ErrorRate => "error-rate",
            MetricName::F1 => "f1",
            MetricName::MacroF1 => "macro-f1",
            MetricName::MicroF1 => "micro-f1",
            MetricName::RocAuc => "roc-auc",
            MetricName::SubsetAccuracy => "subset-accuracy",
            MetricName::HammingLoss => "hamming-loss",
            MetricName::Jaccard => "jaccard",
            MetricName::OneError => "one-error",
            MetricName::CoverageError => "coverage-error",
            MetricName::RankingLoss => "ranking-loss",
            MetricName::Lrap => "lrap",
            MetricName::NodeCount => "node-count",
        }
    }

    /// Value of the metric for `model` on `test`. Accuracy, error rate and F1
    /// pool every label-sample pair.
    pub fn evaluate(self, model: &Model, test: &Dataset) -> Result<f64> {
        let y = &test.y;
        let scores = || model.predict(&test.x);
        let labels = || model.predict_labels(&test.x);
        Ok(match self {
            MetricName::Mse => regression_metrics(y, &scores()?)?.mse,
            MetricName::Mae => regression_metrics(y, &scores()?)?.mae,
            MetricName::R2 => regression_metrics(y, &scores()?)?
                .r2
                .ok_or_else(|| Error::InvalidParameter("r2 needs a single output; use macro-r2".into()))?,
            MetricName::MacroR2 => regression_metrics(y, &scores()?)?.macro_r2,
            MetricName::VarianceR2 => regression_metrics(y, &scores()?)?.variance_r2,
            MetricName::Accuracy => averaged_metric(y, &labels()?, BinaryMetric::Accuracy, Averaging::Micro)?,
            MetricName::ErrorRate => averaged_metric(y, &labels()?, BinaryMetric::ErrorRate, Averaging::Micro)?,
            MetricName::F1 | MetricName::MicroF1 => averaged_metric(y, &labels()?, BinaryMetric::F1, Averaging::Micro)?,
            MetricName::MacroF1 => averaged_metric(y, &labels()?, BinaryMetric::F1, Averaging::Macro)?,
            MetricName::RocAuc => {
                let s = scores()?;
                let d = y.n_cols();
                let mut total = 0.0;
                for j in 0..d {
                    total += roc_auc(&y.column_vec(j), &s.column_vec(j))?;
                }
                total / d as f64
            }
            MetricName::SubsetAccuracy => subset_accuracy(y, &labels()?)?,
            MetricName::HammingLoss => hamming_loss(y, &labels()?)?,
            MetricName::Jaccard => jaccard(y, &labels()?)?,
            MetricName::OneError => one_error(y, &scores()?)?,
            MetricName::CoverageError => coverage_error(y, &scores()?)?,
            MetricName::RankingLoss => ranking_loss(y, &scores()?)?,
            MetricName::Lrap => lrap(y, &scores()?)?.value,
            MetricName::NodeCount => model.node_count() as f64,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Protocol {
    /// Random train/test split of the loaded dataset.
    Holdout { test_fraction: f64 },
    /// Independent test sample of the given size from a synthetic source.
    Generated { n_test: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSpec {
    pub metrics: Vec<MetricName>,
    pub protocol: Protocol,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub dataset: DatasetSpec,
    pub learner: LearnerSpec,
    pub evaluation: EvaluationSpec,
    pub seeds: Vec<u64>,
    /// Results go to `<output>.csv` and `<output>.json` when set.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameter("an experiment needs at least one seed".into()));
        }
        if self.evaluation.metrics.is_empty() {
            return Err(Error::InvalidParameter("an experiment needs at least one metric".into()));
        }
        if matches!(self.evaluation.protocol, Protocol::Generated { .. }) && self.dataset.generator().is_none() {
            return Err(Error::InvalidParameter("a generated test set needs a synthetic dataset".into()));
        }
        Ok(())
    }

    /// Training and test sets of one seed: the data come from stream 1 (and
    /// stream 2 for a generated test set or the split), the learner from stream 3.
    pub fn train_test(&self, seed: u64) -> Result<(Dataset, Dataset)> {
        match self.evaluation.protocol {
            Protocol::Holdout { test_fraction } => {
                let ds = self.dataset.load(rng::derive_seed(seed, 1))?;
                train_test_split(&ds, &SplitSpec::new(1.0 - test_fraction, rng::derive_seed(seed, 2)))
            }
            Protocol::Generated { n_test } => {
                let (g, n) = self
                    .dataset
                    .generator()
                    .ok_or_else(|| Error::InvalidParameter("a generated test set needs a synthetic dataset".into()))?;
                Ok((g.generate(n, rng::derive_seed(seed, 1))?, g.generate(n_test, rng::derive_seed(seed, 2))?))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub seed: u64,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub mean: f64,
    /// Sample standard deviation over seeds (0 for a single seed).
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub experiment: String,
    pub records: Vec<ResultRecord>,
    pub summary: Vec<MetricSummary>,
}

/// Runs every seed independently (in parallel) and aggregates in seed order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResults> {
    config.validate()?;
    let per_seed = config
        .seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<ResultRecord>> {
            let (train, test) = config.train_test(seed)?;
            let model = config.learner.fit(&train, rng::derive_seed(seed, 3))?;
            config
                .evaluation
                .metrics
                .iter()
                .map(|m| {
                    Ok(ResultRecord {
                        seed,
                        metric: m.as_str().to_string(),
                        value: m.evaluate(&model, &test)?,
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<ResultRecord> = per_seed.into_iter().flatten().collect();
    let summary = config
        .evaluation
        .metrics
        .iter()
        .map(|m| {
            let v: Vec<f64> = records.iter().filter(|r| r.metric == m.as_str()).map(|r| r.value).collect();
            summarize(m.as_str(), &v)
        })
        .collect();
    let results = ExperimentResults {
        experiment: config.name.clone(),
        records,
        summary,
    };
    if let Some(out) = &config.output {
        write_outputs(&results, out)?;
    }
    Ok(results)
}

pub fn summarize(metric: &str, v: &[f64]) -> MetricSummary {
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    MetricSummary {
        metric: metric.to_string(),
        mean,
        std,
        n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportFormat {
    Csv,
    Json,
}

pub const CSV_HEADER: [&str; 4] = ["experiment", "seed", "metric", "value"];

/// One row of the results CSV. Per-seed rows carry the seed; the summary
/// rows that follow carry `mean` or `std` in the seed column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub experiment: String,
    pub seed: String,
    pub metric: String,
    pub value: f64,
}

pub fn export<W: Write>(results: &ExperimentResults, format: ExportFormat, w: W) -> Result<()> {
    match format {
        ExportFormat::Json => {
            let mut w = w;
            serde_json::to_writer_pretty(&mut w, results)?;
            w.write_all(b"\n")?;
        }
        ExportFormat::Csv => {
            let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
            wr.write_record(CSV_HEADER)?;
            let rows = results
                .records
                .iter()
                .map(|r| (r.seed.to_string(), &r.metric, r.value))
                .chain(results.summary.iter().flat_map(|s| {
                    [("mean".to_string(), &s.metric, s.mean), ("std".to_string(), &s.metric, s.std)]
                }));
            for (seed, metric, value) in rows {
                wr.serialize(CsvRow {
                    experiment: results.experiment.clone(),
                    seed,
                    metric: metric.clone(),
                    value,
                })?;
            }
            wr.flush()?;
        }
    }
    Ok(())
}

pub fn read_results_json<R: Read>(r: R) -> Result<ExperimentResults> {
    Ok(serde_json::from_reader(r)?)
}

pub fn read_results_csv<R: Read>(r: R) -> Result<Vec<CsvRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected results header {header:?}"),
        });
    }
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Writes `<base>.csv` and `<base>.json`.
pub fn write_outputs(results: &ExperimentResults, base: &Path) -> Result<()> {
    if let Some(dir) = base.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    export(results, ExportFormat::Csv, std::fs::File::create(base.with_extension("csv"))?)?;
    export(results, ExportFormat::Json, std::fs::File::create(base.with_extension("json"))?)?;
    Ok(())
}
