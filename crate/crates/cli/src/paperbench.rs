//! One-shot rerun of every scenario: both methods swept over k, stability
//! at the selected k, cluster profiles and PCA scatters, plus a summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use nullclust_core::datagen::{self, Dataset, GenParams};
use nullclust_core::kmeans::DEFAULT_N_INIT;
use nullclust_core::metrics::{
    ari, k_sweep_with_fits, stability, sweep_stability_stream, DEFAULT_K_MAX, DEFAULT_K_MIN,
    DEFAULT_STABILITY_RUNS,
};
use nullclust_core::pca::{pca_fit, pca_project};
use nullclust_core::preprocess::{load_csv, standardize};
use nullclust_core::report::{emit_profile, emit_scatter, emit_sweep, write_atomic, Format};
use nullclust_core::{
    DataMatrix, Error, FitConfig, KSweepReport, Method, Result, RngStream, StabilityReport,
    SweepConfig,
};

use crate::{scenario_stream, use_color};

#[derive(Debug, Args)]
pub struct PaperbenchArgs {
    /// Directory receiving one sub-directory per scenario and summary.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Extra CSV file analysed as a sixth scenario.
    #[arg(long)]
    pub empirical: Option<PathBuf>,
    /// Feature columns of the extra CSV file.
    #[arg(long, value_delimiter = ',', requires = "empirical")]
    pub features: Option<Vec<String>>,
    #[arg(long, default_value_t = datagen::DEFAULT_N)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_N_INIT)]
    pub n_init: usize,
    #[arg(long, default_value_t = DEFAULT_STABILITY_RUNS)]
    pub stability_runs: usize,
    #[arg(long, default_value_t = DEFAULT_K_MIN)]
    pub k_min: usize,
    #[arg(long, default_value_t = DEFAULT_K_MAX)]
    pub k_max: usize,
}

/// One line of summary.csv.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub method: Method,
    pub best_k: usize,
    pub silhouette: f64,
    pub elbow_k: Option<usize>,
    pub stability_mean: f64,
    pub stability_sd: f64,
    /// ARI of the best-k fit against generator labels, when known.
    pub truth_ari: Option<f64>,
}

#[derive(Serialize)]
struct PerMethod<'a, T> {
    classical: &'a T,
    spherical: &'a T,
}

enum Source {
    Synthetic(Dataset),
    Empirical(PathBuf, Vec<String>),
}

struct Scenario {
    name: String,
    stream: RngStream,
    source: Source,
}

fn scenarios(args: &PaperbenchArgs, seed: u64) -> Result<Vec<Scenario>> {
    let mut list: Vec<Scenario> = Dataset::ALL
        .iter()
        .enumerate()
        .map(|(i, &d)| Scenario {
            name: format!("{}_{}", i + 1, d),
            stream: scenario_stream(seed, d),
            source: Source::Synthetic(d),
        })
        .collect();
    if let Some(path) = &args.empirical {
        let features = args
            .features
            .clone()
            .ok_or_else(|| Error::InvalidArgument("--empirical needs --features".into()))?;
        list.push(Scenario {
            name: "6_empirical".into(),
            stream: RngStream::new(seed, 6),
            source: Source::Empirical(path.clone(), features),
        });
    }
    Ok(list)
}

/// Runs every scenario and writes the output tree. Returns the summary
/// rows in scenario order, classical before spherical.
pub fn run(args: &PaperbenchArgs, seed: u64) -> Result<Vec<SummaryRow>> {
    if args.stability_runs < 2 {
        return Err(Error::InvalidArgument(
            "--stability-runs must be at least 2".into(),
        ));
    }
    std::fs::create_dir_all(&args.out_dir)?;
    let list = scenarios(args, seed)?;
    let per_scenario: Vec<Vec<SummaryRow>> = list
        .par_iter()
        .map(|s| run_scenario(s, args))
        .collect::<Result<_>>()?;
    let rows: Vec<SummaryRow> = per_scenario.into_iter().flatten().collect();
    write_atomic(
        &args.out_dir.join("summary.csv"),
        summary_csv(&rows).as_bytes(),
    )?;
    print!("{}", summary_table(&rows, use_color()));
    Ok(rows)
}

fn run_scenario(s: &Scenario, args: &PaperbenchArgs) -> Result<Vec<SummaryRow>> {
    let dir = args.out_dir.join(&s.name);
    std::fs::create_dir_all(&dir)?;
    let data: DataMatrix = match &s.source {
        Source::Synthetic(d) => {
            let params = GenParams {
                n: args.n,
                ..GenParams::default()
            };
            let data = datagen::generate(*d, params, &mut s.stream.child(0))?;
            write(&dir, "data.csv", &data.to_csv_string()?)?;
            data
        }
        Source::Empirical(path, features) => load_csv(path, features, None)?,
    };
    let (z, _) = standardize(&data)?;
    let config = SweepConfig {
        k_min: args.k_min,
        k_max: args.k_max,
        fit: FitConfig {
            n_init: args.n_init,
            ..FitConfig::default()
        },
        stability_runs: args.stability_runs,
    };
    let pca = pca_fit(z.values(), 2)?;

    let mut sweeps: Vec<KSweepReport> = Vec::new();
    let mut stabilities: Vec<StabilityReport> = Vec::new();
    let mut rows = Vec::new();
    for (i, method) in [Method::Classical, Method::Spherical]
        .into_iter()
        .enumerate()
    {
        let sweep_stream = s.stream.child(1 + i as u64);
        let (sweep, fits) = k_sweep_with_fits(z.values(), method, &config, &sweep_stream)?;
        let best = &fits[sweep.best_k - config.k_min];
        // Same stream as the sweep row, so stability.json matches it.
        let stab = stability(
            z.values(),
            sweep.best_k,
            method,
            config.stability_runs,
            &config.fit,
            &sweep_stability_stream(&sweep_stream, sweep.best_k),
        )?;
        let suffix = match method {
            Method::Classical => "",
            Method::Spherical => "_spherical",
        };
        let profile = emit_profile(z.values(), &best.partition, z.feature_names())?;
        write(&dir, &format!("profile{suffix}.csv"), &profile.to_csv()?)?;
        write(&dir, &format!("profile{suffix}.svg"), &profile.to_svg())?;
        let projection = pca_project(&pca, z.values(), &best.partition)?;
        write(
            &dir,
            &format!("scatter{suffix}.csv"),
            &emit_scatter(&projection, Format::Csv)?,
        )?;
        write(
            &dir,
            &format!("scatter{suffix}.svg"),
            &emit_scatter(&projection, Format::Svg)?,
        )?;
        write(
            &dir,
            &format!("sweep_{method}.csv"),
            &emit_sweep(&sweep, Format::Csv)?,
        )?;
        write(
            &dir,
            &format!("sweep_{method}.svg"),
            &emit_sweep(&sweep, Format::Svg)?,
        )?;

        let best_row = &sweep.rows[sweep.best_k - config.k_min];
        rows.push(SummaryRow {
            scenario: s.name.clone(),
            method,
            best_k: sweep.best_k,
            silhouette: best_row.silhouette,
            elbow_k: sweep.elbow_k,
            stability_mean: stab.mean,
            stability_sd: stab.sd,
            truth_ari: data
                .truth_labels()
                .map(|t| ari(t, best.partition.labels()))
                .transpose()?,
        });
        sweeps.push(sweep);
        stabilities.push(stab);
    }
    let sweep_json = PerMethod {
        classical: &sweeps[0],
        spherical: &sweeps[1],
    };
    write(
        &dir,
        "sweep.json",
        &(serde_json::to_string_pretty(&sweep_json)? + "\n"),
    )?;
    let stab_json = PerMethod {
        classical: &stabilities[0],
        spherical: &stabilities[1],
    };
    write(
        &dir,
        "stability.json",
        &(serde_json::to_string_pretty(&stab_json)? + "\n"),
    )?;
    Ok(rows)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    write_atomic(&dir.join(name), text.as_bytes())
}

fn cell(v: Option<impl ToString>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(
        "scenario,method,best_k,silhouette,elbow_k,stability_mean,stability_sd,truth_ari\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.scenario,
            r.method,
            r.best_k,
            r.silhouette,
            cell(r.elbow_k),
            r.stability_mean,
            r.stability_sd,
            cell(r.truth_ari)
        );
    }
    out
}

fn summary_table(rows: &[SummaryRow], color: bool) -> String {
    let mut out = String::new();
    let header = format!(
        "{:<14} {:<10} {:>6} {:>10} {:>6} {:>10} {:>8} {:>9}",
        "scenario", "method", "best_k", "silhouette", "elbow", "stab_mean", "stab_sd", "truth_ari"
    );
    if color {
        let _ = writeln!(out, "\x1b[1m{header}\x1b[0m");
    } else {
        let _ = writeln!(out, "{header}");
    }
    for r in rows {
        let _ = writeln!(
            out,
            "{:<14} {:<10} {:>6} {:>10.3} {:>6} {:>10.3} {:>8.3} {:>9}",
            r.scenario,
            r.method.name(),
            r.best_k,
            r.silhouette,
            cell(r.elbow_k),
            r.stability_mean,
            r.stability_sd,
            r.truth_ari.map(|v| format!("{v:.3}")).unwrap_or_default()
        );
    }
    out
}
