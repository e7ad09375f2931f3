//! Command-line front end. `run` parses arguments, dispatches a subcommand
//! and maps failures to exit codes: 2 for invalid input, 3 for numeric
//! failures.

use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use nullclust_core::datagen::{self, Dataset, GenParams};
use nullclust_core::kmeans::{self, DEFAULT_MAX_ITER, DEFAULT_N_INIT};
use nullclust_core::metrics::{self, DEFAULT_K_MAX, DEFAULT_K_MIN, DEFAULT_STABILITY_RUNS};
use nullclust_core::pca::{pca_fit, pca_project};
use nullclust_core::preprocess::{csv_columns, load_csv, standardize};
use nullclust_core::report::{emit_scatter, emit_sweep, write_atomic, Format};
use nullclust_core::{DataMatrix, Error, FitConfig, Method, Partition, RngStream, SweepConfig};

pub mod paperbench;

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(
    name = "nullclust",
    version,
    about = "Cluster-validity diagnostics against matched null baselines"
)]
pub struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset as CSV.
    Generate(GenerateArgs),
    /// Fit one clustering model to a CSV file.
    Fit(FitArgs),
    /// Score k over a range with silhouette, SSE and stability.
    Sweep(SweepArgs),
    /// Pairwise-ARI stability of single-init fits at one k.
    Stability(StabilityArgs),
    /// PCA projection of a CSV file, coloured by fitted labels.
    Project(ProjectArgs),
    /// Run every synthetic scenario (and optionally a CSV file) end to end.
    Paperbench(paperbench::PaperbenchArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub dataset: Dataset,
    #[arg(long, default_value_t = datagen::DEFAULT_N)]
    pub n: usize,
    #[arg(long, default_value_t = datagen::DEFAULT_D)]
    pub d: usize,
    /// Equicorrelation of the correlated dataset.
    #[arg(long, default_value_t = datagen::DEFAULT_RHO)]
    pub rho: f64,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input CSV with a header row.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Comma-separated feature columns (default: every column except `label`).
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct FitFlags {
    #[arg(long, default_value = "classical")]
    pub method: Method,
    #[arg(long, default_value_t = DEFAULT_N_INIT)]
    pub n_init: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Stopping threshold (default depends on the method).
    #[arg(long)]
    pub tol: Option<f64>,
}

impl FitFlags {
    fn config(&self) -> FitConfig {
        FitConfig {
            n_init: self.n_init,
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub fit: FitFlags,
    #[arg(long)]
    pub k: usize,
    /// Output JSON (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub fit: FitFlags,
    #[arg(long, default_value_t = DEFAULT_K_MIN)]
    pub k_min: usize,
    #[arg(long, default_value_t = DEFAULT_K_MAX)]
    pub k_max: usize,
    /// Single-init runs per k for the stability columns (0 skips them).
    #[arg(long, default_value_t = DEFAULT_STABILITY_RUNS)]
    pub stability_runs: usize,
    /// Output file; the format follows `--format` or the extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub fit: FitFlags,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_STABILITY_RUNS)]
    pub runs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 2)]
    pub dims: usize,
    /// JSON written by `fit`; its `labels` colour the points.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Output file; the format follows `--format` or the extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<Format>,
}

/// What `fit` writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutput {
    pub method: Method,
    pub k: usize,
    pub seed: u64,
    pub feature_names: Vec<String>,
    pub objective: f64,
    pub sse: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restart: usize,
    pub sizes: Vec<usize>,
    /// Rows are standardized features (unit rows for spherical fits).
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    eprintln!("seed: {seed}");
    let result = match cli.threads {
        Some(0) => Err(Error::InvalidArgument(
            "--threads must be at least 1".into(),
        )),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command, seed)),
            Err(e) => Err(Error::Numeric(format!("cannot start thread pool: {e}"))),
        },
        None => dispatch(&cli.command, seed),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numeric() {
                3
            } else {
                2
            }
        }
    }
}

fn dispatch(command: &Command, seed: u64) -> nullclust_core::Result<()> {
    match command {
        Command::Generate(a) => generate(a, seed),
        Command::Fit(a) => fit(a, seed),
        Command::Sweep(a) => sweep(a, seed),
        Command::Stability(a) => stability(a, seed),
        Command::Project(a) => project(a),
        Command::Paperbench(a) => paperbench::run(a, seed).map(|_| ()),
    }
}

/// Writes to `path` atomically, or to stdout.
fn emit(path: Option<&Path>, text: &str) -> nullclust_core::Result<()> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn output_format(
    explicit: Option<Format>,
    path: Option<&Path>,
    fallback: Format,
) -> nullclust_core::Result<Format> {
    match (explicit, path) {
        (Some(f), _) => Ok(f),
        (None, Some(p)) if p.extension().is_some() => Format::from_path(p),
        _ => Ok(fallback),
    }
}

/// Stream of the synthetic scenario `dataset`; shared by `generate` and
/// `paperbench` so both produce the same data for a seed.
pub fn scenario_stream(seed: u64, dataset: Dataset) -> RngStream {
    let idx = Dataset::ALL
        .iter()
        .position(|d| *d == dataset)
        .expect("listed") as u64
        + 1;
    RngStream::new(seed, idx)
}

fn generate(a: &GenerateArgs, seed: u64) -> nullclust_core::Result<()> {
    let params = GenParams {
        n: a.n,
        d: a.d,
        rho: a.rho,
    };
    let data = datagen::generate(
        a.dataset,
        params,
        &mut scenario_stream(seed, a.dataset).child(0),
    )?;
    emit(a.out.as_deref(), &data.to_csv_string()?)
}

/// Loads the requested columns and z-scores them.
pub fn load_standardized(input: &InputArgs) -> nullclust_core::Result<DataMatrix> {
    let features = match &input.features {
        Some(f) => f.clone(),
        None => {
            let mut columns = csv_columns(&input.input)?;
            columns.retain(|h| h != "label");
            columns
        }
    };
    let data = load_csv(&input.input, &features, None)?;
    Ok(standardize(&data)?.0)
}

fn to_json<T: Serialize>(value: &T) -> nullclust_core::Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn fit(a: &FitArgs, seed: u64) -> nullclust_core::Result<()> {
    let z = load_standardized(&a.input)?;
    let result = kmeans::fit(
        a.fit.method,
        z.values(),
        a.k,
        &a.fit.config(),
        &RngStream::new(seed, 0),
    )?;
    let out = FitOutput {
        method: a.fit.method,
        k: a.k,
        seed,
        feature_names: z.feature_names().to_vec(),
        objective: result.objective,
        sse: result.sse,
        iterations: result.iterations,
        converged: result.converged,
        restart: result.restart,
        sizes: result.partition.sizes(),
        centroids: result
            .model
            .centroids()
            .row_iter()
            .map(<[f64]>::to_vec)
            .collect(),
        labels: result.partition.labels().to_vec(),
    };
    emit(a.out.as_deref(), &to_json(&out)?)
}

fn sweep(a: &SweepArgs, seed: u64) -> nullclust_core::Result<()> {
    let z = load_standardized(&a.input)?;
    let config = SweepConfig {
        k_min: a.k_min,
        k_max: a.k_max,
        fit: a.fit.config(),
        stability_runs: a.stability_runs,
    };
    let report = metrics::k_sweep(z.values(), a.fit.method, &config, &RngStream::new(seed, 0))?;
    let format = output_format(a.format, a.out.as_deref(), Format::Json)?;
    emit(a.out.as_deref(), &emit_sweep(&report, format)?)
}

fn stability(a: &StabilityArgs, seed: u64) -> nullclust_core::Result<()> {
    let z = load_standardized(&a.input)?;
    let report = metrics::stability(
        z.values(),
        a.k,
        a.fit.method,
        a.runs,
        &a.fit.config(),
        &RngStream::new(seed, 0),
    )?;
    emit(a.out.as_deref(), &to_json(&report)?)
}

fn project(a: &ProjectArgs) -> nullclust_core::Result<()> {
    if !(a.dims == 2 || a.dims == 3) {
        return Err(Error::InvalidArgument(format!(
            "--dims must be 2 or 3, got {}",
            a.dims
        )));
    }
    let z = load_standardized(&a.input)?;
    let partition = match &a.labels {
        Some(path) => {
            let fitted: FitOutput = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            if fitted.labels.len() != z.n() {
                return Err(Error::InvalidArgument(format!(
                    "{} has {} labels for {} rows",
                    path.display(),
                    fitted.labels.len(),
                    z.n()
                )));
            }
            Partition::new(fitted.labels, fitted.k)?
        }
        None => Partition::new(vec![0; z.n()], 1)?,
    };
    let model = pca_fit(z.values(), a.dims)?;
    let projection = pca_project(&model, z.values(), &partition)?;
    let format = output_format(a.format, a.out.as_deref(), Format::Csv)?;
    emit(a.out.as_deref(), &emit_scatter(&projection, format)?)
}

/// True when stdout is a terminal and `NO_COLOR` is unset or empty.
pub fn use_color() -> bool {
    std::io::stdout().is_terminal() && std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty())
}
