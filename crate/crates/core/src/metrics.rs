//! Model-selection and stability measures.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::{fit, CentroidModel, ClusteringResult, FitConfig, Method, Partition};
use crate::linalg::{norm, sq_dist, Matrix};
use crate::preprocess::normalize_matrix_rows;
use crate::rng::RngStream;
use crate::skmeans::cosine_distance;

pub const DEFAULT_STABILITY_RUNS: usize = 20;
pub const DEFAULT_K_MIN: usize = 2;
pub const DEFAULT_K_MAX: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    Euclidean,
    /// `1 - u·v` on unit rows.
    Cosine,
}

impl Distance {
    pub fn name(self) -> &'static str {
        match self {
            Distance::Euclidean => "euclidean",
            Distance::Cosine => "cosine",
        }
    }

    /// The silhouette distance paired with each method.
    pub fn for_method(method: Method) -> Self {
        match method {
            Method::Classical => Distance::Euclidean,
            Method::Spherical => Distance::Cosine,
        }
    }

    #[inline]
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Distance::Euclidean => sq_dist(a, b).sqrt(),
            Distance::Cosine => cosine_distance(a, b),
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Distance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Distance::Euclidean),
            "cosine" => Ok(Distance::Cosine),
            _ => Err(Error::invalid(format!("unknown distance `{s}`"))),
        }
    }
}

/// `Σ ‖z_i - c_label(i)‖²`.
pub fn sse(z: &Matrix, partition: &Partition, model: &CentroidModel) -> Result<f64> {
    if partition.n() != z.rows() || model.d() != z.cols() {
        return Err(Error::invalid(
            "partition, model and data dimensions differ",
        ));
    }
    if partition.k() > model.k() {
        return Err(Error::invalid(format!(
            "partition has k = {} but the model only {} centroids",
            partition.k(),
            model.k()
        )));
    }
    Ok(z.row_iter()
        .zip(partition.labels())
        .map(|(row, &l)| sq_dist(row, model.centroid(l)))
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteBreakdown {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub s: Vec<f64>,
    pub mean: f64,
}

/// Per-point silhouettes. Points alone in their cluster score 0, as do
/// points with `a = b = 0`.
pub fn silhouette(
    x: &Matrix,
    partition: &Partition,
    distance: Distance,
) -> Result<SilhouetteBreakdown> {
    let k = partition.k();
    if k < 2 {
        return Err(Error::invalid("the silhouette needs k >= 2"));
    }
    if partition.n() != x.rows() {
        return Err(Error::invalid("partition and data lengths differ"));
    }
    let sizes = partition.sizes();
    if let Some(j) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::invalid(format!("cluster {j} is empty")));
    }
    if distance == Distance::Cosine {
        if let Some(i) = x.row_iter().position(|r| (norm(r) - 1.0).abs() > 1e-9) {
            return Err(Error::invalid(format!(
                "cosine silhouette needs unit rows; row {i} is not"
            )));
        }
    }
    let labels = partition.labels();
    let per_point: Vec<(f64, f64, f64)> = (0..x.rows())
        .into_par_iter()
        .with_min_len(16)
        .map(|i| {
            let mut sums = vec![0.0; k];
            let xi = x.row(i);
            for (j, xj) in x.row_iter().enumerate() {
                if j != i {
                    sums[labels[j]] += distance.eval(xi, xj);
                }
            }
            let own = labels[i];
            if sizes[own] == 1 {
                return (0.0, 0.0, 0.0);
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            let s = if m > 0.0 { (b - a) / m } else { 0.0 };
            (a, b, s)
        })
        .collect();
    let mut out = SilhouetteBreakdown {
        a: Vec::with_capacity(x.rows()),
        b: Vec::with_capacity(x.rows()),
        s: Vec::with_capacity(x.rows()),
        mean: 0.0,
    };
    for (a, b, s) in per_point {
        out.a.push(a);
        out.b.push(b);
        out.s.push(s);
    }
    out.mean = out.s.iter().sum::<f64>() / x.rows() as f64;
    Ok(out)
}

fn pairs(x: u128) -> u128 {
    x * x.saturating_sub(1) / 2
}

/// Adjusted Rand index of two labelings of the same rows.
///
/// Pair counts are exact integers, so the result is exactly symmetric.
pub fn ari(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "labelings have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let mut table: BTreeMap<(usize, usize), u128> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u128> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u128> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: u128 = table.values().map(|&c| pairs(c)).sum();
    let sa: u128 = rows.values().map(|&c| pairs(c)).sum();
    let sb: u128 = cols.values().map(|&c| pairs(c)).sum();
    let total = pairs(a.len() as u128);
    // (index - E) / (M - E), both sides scaled by 2 * total.
    let num = 2 * (index * total) as i128 - 2 * (sa * sb) as i128;
    let den = ((sa + sb) * total) as i128 - 2 * (sa * sb) as i128;
    if den == 0 {
        return Ok(if index == sa && index == sb { 1.0 } else { 0.0 });
    }
    Ok(num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub method: Method,
    pub k: usize,
    pub runs: usize,
    /// ARI of runs `(i, j)`, `i < j`, in lexicographic order.
    pub pairwise: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over the pairs.
    pub sd: f64,
    pub min: f64,
}

/// Fits `runs` single-init models on sub-streams `0..runs` and compares
/// every pair of resulting partitions.
pub fn stability(
    z: &Matrix,
    k: usize,
    method: Method,
    runs: usize,
    config: &FitConfig,
    stream: &RngStream,
) -> Result<StabilityReport> {
    if runs < 2 {
        return Err(Error::invalid("stability needs at least 2 runs"));
    }
    if k < 2 {
        return Err(Error::invalid("stability needs k >= 2"));
    }
    let single = config.single_init();
    let fits: Vec<Partition> = (0..runs)
        .into_par_iter()
        .map(|r| fit(method, z, k, &single, &stream.child(r as u64)).map(|f| f.partition))
        .collect::<Result<_>>()?;
    let index: Vec<(usize, usize)> = (0..runs)
        .flat_map(|i| (i + 1..runs).map(move |j| (i, j)))
        .collect();
    let pairwise: Vec<f64> = index
        .par_iter()
        .map(|&(i, j)| ari(fits[i].labels(), fits[j].labels()))
        .collect::<Result<_>>()?;
    let m = pairwise.len() as f64;
    let mean = pairwise.iter().sum::<f64>() / m;
    let sd = (pairwise.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m).sqrt();
    let min = pairwise.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(StabilityReport {
        method,
        k,
        runs,
        pairwise,
        mean,
        sd,
        min,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSweepRow {
    pub k: usize,
    pub silhouette: f64,
    pub sse: f64,
    pub stability_mean: Option<f64>,
    pub stability_sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSweepReport {
    pub method: Method,
    pub distance: Distance,
    pub best_k: usize,
    /// `None` when the sweep has fewer than three rows.
    pub elbow_k: Option<usize>,
    pub rows: Vec<KSweepRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub fit: FitConfig,
    /// 0 skips the stability columns.
    pub stability_runs: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            k_min: DEFAULT_K_MIN,
            k_max: DEFAULT_K_MAX,
            fit: FitConfig::default(),
            stability_runs: DEFAULT_STABILITY_RUNS,
        }
    }
}

/// Sub-stream used for the fit at `k` in a sweep.
pub fn sweep_fit_stream(stream: &RngStream, k: usize) -> RngStream {
    stream.child(k as u64).child(0)
}

/// Sub-stream used for the stability runs at `k` in a sweep.
pub fn sweep_stability_stream(stream: &RngStream, k: usize) -> RngStream {
    stream.child(k as u64).child(1)
}

/// Fits every `k` in `k_min..=k_max` and scores it.
pub fn k_sweep(
    z: &Matrix,
    method: Method,
    config: &SweepConfig,
    stream: &RngStream,
) -> Result<KSweepReport> {
    k_sweep_with_fits(z, method, config, stream).map(|(report, _)| report)
}

/// [`k_sweep`], also returning the fit for each `k` in sweep order.
pub fn k_sweep_with_fits(
    z: &Matrix,
    method: Method,
    config: &SweepConfig,
    stream: &RngStream,
) -> Result<(KSweepReport, Vec<ClusteringResult>)> {
    let n = z.rows();
    if config.k_min < 2 || config.k_min > config.k_max || config.k_max + 1 > n {
        return Err(Error::invalid(format!(
            "need 2 <= k_min <= k_max <= n - 1, got k_min = {}, k_max = {}, n = {n}",
            config.k_min, config.k_max
        )));
    }
    let distance = Distance::for_method(method);
    let unit;
    let scored = match method {
        Method::Classical => z,
        Method::Spherical => {
            unit = normalize_matrix_rows(z)?;
            &unit
        }
    };
    let ks: Vec<usize> = (config.k_min..=config.k_max).collect();
    let evaluated: Vec<(KSweepRow, ClusteringResult)> = ks
        .par_iter()
        .map(|&k| {
            let result = fit(method, z, k, &config.fit, &sweep_fit_stream(stream, k))?;
            let sil = silhouette(scored, &result.partition, distance)?.mean;
            let (stability_mean, stability_sd) = if config.stability_runs > 0 {
                let s = stability(
                    z,
                    k,
                    method,
                    config.stability_runs,
                    &config.fit,
                    &sweep_stability_stream(stream, k),
                )?;
                (Some(s.mean), Some(s.sd))
            } else {
                (None, None)
            };
            let row = KSweepRow {
                k,
                silhouette: sil,
                sse: result.sse,
                stability_mean,
                stability_sd,
            };
            Ok((row, result))
        })
        .collect::<Result<_>>()?;
    let (rows, fits): (Vec<_>, Vec<_>) = evaluated.into_iter().unzip();
    let mut best = &rows[0];
    for row in &rows[1..] {
        if row.silhouette > best.silhouette {
            best = row;
        }
    }
    let best_k = best.k;
    let elbow = if rows.len() >= 3 {
        Some(elbow_k(&rows)?)
    } else {
        None
    };
    let report = KSweepReport {
        method,
        distance,
        best_k,
        elbow_k: elbow,
        rows,
    };
    Ok((report, fits))
}

/// Interior `k` farthest from the straight line through the first and last
/// `(k, SSE)` points; near-ties go to the smallest `k`.
pub fn elbow_k(rows: &[KSweepRow]) -> Result<usize> {
    if rows.len() < 3 {
        return Err(Error::invalid("the elbow needs at least three sweep rows"));
    }
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    let (x1, y1) = (first.k as f64, first.sse);
    let (dx, dy) = (last.k as f64 - x1, last.sse - y1);
    let len = dx.hypot(dy);
    let dist: Vec<f64> = rows[1..rows.len() - 1]
        .iter()
        .map(|r| ((r.k as f64 - x1) * dy - (r.sse - y1) * dx).abs() / len)
        .collect();
    let top = dist.iter().copied().fold(0.0, f64::max);
    let slack = 1e-9 * len;
    let pos = dist.iter().position(|&d| d >= top - slack).unwrap_or(0);
    Ok(rows[1 + pos].k)
}
