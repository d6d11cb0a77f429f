//! `arbor` command line: dataset generation, model fitting and the experiment
//! harness. Every subcommand reads a JSON config given by `--config`; see the
//! README for one example per subcommand.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use arbor::compression::{compress, node_count, select_t_cv};
use arbor::datasets::{write_csv, write_svmlight, Dataset};
use arbor::forest::{fit_forest, ForestParams};
use arbor::harness::{
    bench_split, bias_variance_decompose, expand_grid, export, grid_search, run_experiment, BenchConfig, BvConfig,
    DatasetSpec, ExperimentConfig, ExperimentResults, ExportFormat, GridAxis, LearnerSpec, Model, ResultRecord,
};
use arbor::rng::derive_seed;
use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "arbor", version, about = "Tree ensembles, output projections and forest compression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; every random draw derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    /// Datasets only.
    Svmlight,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset.
    Gen(Common),
    /// Fit a learner on a dataset and save the model.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Where to save the fitted model.
        #[arg(long)]
        model: PathBuf,
    },
    /// Predict a dataset with a saved model.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
    },
    /// Run an experiment over seeds and report metrics.
    Eval(Common),
    /// Fit a forest, choose t by cross-validation and prune it.
    Compress {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Bias-variance decomposition on a synthetic problem.
    Bvdecomp(Common),
    /// Time tree growth on dense and sparse input layouts.
    Bench(Common),
    /// Validation grid search; the winner is refitted on all samples.
    Grid {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Arbor(#[from] arbor::Error),
    #[error("{path}: {source}")]
    Config { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

type Result<T> = std::result::Result<T, CliError>;

fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path)?;
    serde_json::from_reader(BufReader::new(file)).map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn export_format(f: Format) -> Result<ExportFormat> {
    match f {
        Format::Csv => Ok(ExportFormat::Csv),
        Format::Json => Ok(ExportFormat::Json),
        Format::Svmlight => Err(CliError::Usage("svmlight output is only for `gen`".into())),
    }
}

/// A report with flat `(metric, value)` rows for CSV and a structured JSON body.
fn emit<T: Serialize>(common: &Common, experiment: &str, seed: u64, rows: &[(String, f64)], detail: &T) -> Result<()> {
    let format = export_format(common.format)?;
    let mut w = sink(&common.out)?;
    match format {
        ExportFormat::Json => {
            serde_json::to_writer_pretty(&mut w, detail)?;
            writeln!(w)?;
        }
        ExportFormat::Csv => {
            let results = ExperimentResults {
                experiment: experiment.to_string(),
                records: rows
                    .iter()
                    .map(|(metric, value)| ResultRecord {
                        seed,
                        metric: metric.clone(),
                        value: *value,
                    })
                    .collect(),
                summary: Vec::new(),
            };
            export(&results, ExportFormat::Csv, &mut w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn gen(common: &Common) -> Result<()> {
    let spec: DatasetSpec = read_config(&common.config)?;
    if spec.generator().is_none() {
        return Err(CliError::Usage("`gen` needs a synthetic dataset spec".into()));
    }
    let ds = spec.load(common.seed.unwrap_or(0))?;
    let mut w = sink(&common.out)?;
    match common.format {
        Format::Csv => write_csv(&ds, &mut w)?,
        Format::Svmlight => write_svmlight(&ds, &mut w)?,
        Format::Json => {
            serde_json::to_writer(&mut w, &ds)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct FitConfig {
    dataset: DatasetSpec,
    learner: LearnerSpec,
}

/// Dataset and fit seeds of a single-run command.
fn seeds(common: &Common) -> (u64, u64) {
    let s = common.seed.unwrap_or(0);
    (derive_seed(s, 1), derive_seed(s, 3))
}

fn save_model(model: &Model, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    model.save(&mut w)?;
    w.flush()?;
    Ok(())
}

fn model_rows(model: &Model, ds: &Dataset) -> Result<Vec<(String, f64)>> {
    Ok(vec![
        ("n-train".into(), ds.n_samples() as f64),
        ("node-count".into(), model.node_count() as f64),
        ("training-loss".into(), arbor::harness::validation_loss(model, ds)?),
    ])
}

fn fit(common: &Common, model_path: &Path) -> Result<()> {
    let cfg: FitConfig = read_config(&common.config)?;
    let (data_seed, fit_seed) = seeds(common);
    let ds = cfg.dataset.load(data_seed)?;
    let model = cfg.learner.fit(&ds, fit_seed)?;
    save_model(&model, model_path)?;
    let rows = model_rows(&model, &ds)?;
    let detail: serde_json::Map<String, serde_json::Value> = rows.iter().map(|(k, v)| (k.clone(), (*v).into())).collect();
    emit(common, "fit", common.seed.unwrap_or(0), &rows, &detail)
}

#[derive(Deserialize)]
struct PredictConfig {
    dataset: DatasetSpec,
}

fn predict(common: &Common, model_path: &Path) -> Result<()> {
    let cfg: PredictConfig = read_config(&common.config)?;
    let model = Model::load(BufReader::new(File::open(model_path)?))?;
    let ds = cfg.dataset.load(seeds(common).0)?;
    let pred = model.predict(&ds.x)?;
    let mut w = sink(&common.out)?;
    match common.format {
        Format::Csv => {
            let mut wr = csv::Writer::from_writer(&mut w);
            wr.write_record((0..pred.n_cols()).map(|j| format!("y{j}")))?;
            for i in 0..pred.n_rows() {
                wr.write_record(pred.row_vec(i).iter().map(f64::to_string))?;
            }
            wr.flush()?;
        }
        Format::Json => {
            let rows: Vec<Vec<f64>> = (0..pred.n_rows()).map(|i| pred.row_vec(i)).collect();
            serde_json::to_writer(&mut w, &serde_json::json!({ "predictions": rows }))?;
            writeln!(w)?;
        }
        Format::Svmlight => return Err(CliError::Usage("predictions are written as csv or json".into())),
    }
    w.flush()?;
    Ok(())
}

fn eval(common: &Common) -> Result<()> {
    let mut cfg: ExperimentConfig = read_config(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seeds = vec![s];
    }
    // files are written here in the requested format only
    cfg.output = None;
    let results = run_experiment(&cfg)?;
    let mut w = sink(&common.out)?;
    export(&results, export_format(common.format)?, &mut w)?;
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct CompressConfig {
    dataset: DatasetSpec,
    forest: ForestParams,
    epsilon: f64,
    #[serde(default = "ten")]
    folds: usize,
    #[serde(default = "five_thousand")]
    max_steps: usize,
    #[serde(default)]
    t: Option<f64>,
}

fn ten() -> usize {
    10
}

fn five_thousand() -> usize {
    5000
}

#[derive(Serialize)]
struct CompressReport {
    t_star: f64,
    forest_nodes: usize,
    compressed_nodes: usize,
    compression_factor: f64,
}

fn compress_cmd(common: &Common, model_path: Option<&Path>) -> Result<()> {
    let cfg: CompressConfig = read_config(&common.config)?;
    let (data_seed, fit_seed) = seeds(common);
    let ds = cfg.dataset.load(data_seed)?;
    let forest = fit_forest(&ds, &cfg.forest.with_seed(fit_seed))?;
    let t_star = match cfg.t {
        Some(t) => t,
        None => {
            let build = |d: &Dataset, s: u64| fit_forest(d, &cfg.forest.with_seed(s));
            select_t_cv(build, &ds, cfg.epsilon, cfg.folds, cfg.max_steps, derive_seed(fit_seed, 1))?.t_star
        }
    };
    let model = compress(&forest, &ds, t_star, cfg.epsilon)?;
    let report = CompressReport {
        t_star,
        forest_nodes: node_count(&forest),
        compressed_nodes: node_count(&model),
        compression_factor: node_count(&forest) as f64 / node_count(&model).max(1) as f64,
    };
    if let Some(p) = model_path {
        save_model(&Model::Compressed(model), p)?;
    }
    let rows = vec![
        ("t-star".into(), report.t_star),
        ("forest-nodes".into(), report.forest_nodes as f64),
        ("compressed-nodes".into(), report.compressed_nodes as f64),
        ("compression-factor".into(), report.compression_factor),
    ];
    emit(common, "compress", common.seed.unwrap_or(0), &rows, &report)
}

#[derive(Deserialize)]
struct BvCommandConfig {
    /// Synthetic source; its `n` is the learning-set size.
    dataset: DatasetSpec,
    learner: LearnerSpec,
    n_ls_draws: usize,
    #[serde(default = "one")]
    n_algo_draws: usize,
    n_test: usize,
}

fn one() -> usize {
    1
}

fn bvdecomp(common: &Common) -> Result<()> {
    let cfg: BvCommandConfig = read_config(&common.config)?;
    let (generator, n_train) = cfg
        .dataset
        .generator()
        .ok_or_else(|| CliError::Usage("`bvdecomp` needs a synthetic dataset spec".into()))?;
    let seed = common.seed.unwrap_or(0);
    let report = bias_variance_decompose(
        generator.as_ref(),
        &cfg.learner,
        &BvConfig {
            n_train,
            n_ls_draws: cfg.n_ls_draws,
            n_algo_draws: cfg.n_algo_draws,
            n_test: cfg.n_test,
            seed,
        },
    )?;
    let rows = vec![
        ("residual-error".into(), report.residual_error),
        ("bias-sq".into(), report.bias_sq),
        ("var-total".into(), report.var_total),
        ("var-ls".into(), report.var_ls),
        ("var-algo".into(), report.var_algo),
        ("expected-error".into(), report.expected_error()),
    ];
    emit(common, "bvdecomp", seed, &rows, &report)
}

fn bench(common: &Common) -> Result<()> {
    let mut cfg: BenchConfig = read_config(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    let table = bench_split(&cfg)?;
    let rows: Vec<(String, f64)> = table
        .rows
        .iter()
        .map(|r| {
            let name = serde_json::to_value(r.layout).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
            (format!("median-seconds:{name}"), r.median_seconds)
        })
        .collect();
    emit(common, "bench", cfg.seed, &rows, &table)
}

#[derive(Deserialize)]
struct GridConfig {
    dataset: DatasetSpec,
    base: LearnerSpec,
    axes: Vec<GridAxis>,
    #[serde(default = "validation_fraction")]
    validation_fraction: f64,
}

fn validation_fraction() -> f64 {
    0.2
}

fn grid(common: &Common, model_path: Option<&Path>) -> Result<()> {
    let cfg: GridConfig = read_config(&common.config)?;
    let seed = common.seed.unwrap_or(0);
    let ds = cfg.dataset.load(derive_seed(seed, 1))?;
    let candidates = expand_grid(&cfg.base, &cfg.axes)?;
    let result = grid_search(&ds, &candidates, cfg.validation_fraction, derive_seed(seed, 3))?;
    if let Some(p) = model_path {
        save_model(&result.model, p)?;
    }
    let mut rows: Vec<(String, f64)> = result
        .table
        .iter()
        .enumerate()
        .map(|(k, r)| (format!("validation-loss:{k}"), r.validation_loss))
        .collect();
    rows.push(("best-index".into(), result.best_index as f64));
    let detail = serde_json::json!({ "best_index": result.best_index, "best": result.best(), "table": result.table });
    emit(common, "grid", seed, &rows, &detail)
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(c) => gen(c),
        Command::Fit { common, model } => fit(common, model),
        Command::Predict { common, model } => predict(common, model),
        Command::Eval(c) => eval(c),
        Command::Compress { common, model } => compress_cmd(common, model.as_deref()),
        Command::Bvdecomp(c) => bvdecomp(c),
        Command::Bench(c) => bench(c),
        Command::Grid { common, model } => grid(common, model.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
