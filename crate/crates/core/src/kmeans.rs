//! Partitions, centroid models and classical (Euclidean) K-means with
//! K-means++ seeding, Lloyd iteration and best-of-n restarts.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm, sq_dist, Matrix};
use crate::rng::RngStream;
use crate::skmeans;

pub const DEFAULT_N_INIT: usize = 10;
pub const DEFAULT_MAX_ITER: usize = 300;
/// Classical stopping threshold on the largest centroid displacement.
pub const DEFAULT_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Euclidean,
    Spherical,
}

/// Clustering algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Classical,
    Spherical,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Classical => "classical",
            Method::Spherical => "spherical",
        }
    }

    pub fn geometry(self) -> Geometry {
        match self {
            Method::Classical => Geometry::Euclidean,
            Method::Spherical => Geometry::Spherical,
        }
    }

    pub fn default_tol(self) -> f64 {
        match self {
            Method::Classical => DEFAULT_TOL,
            Method::Spherical => skmeans::DEFAULT_TOL,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(Method::Classical),
            "spherical" => Ok(Method::Spherical),
            _ => Err(Error::invalid(format!(
                "unknown method `{s}` (expected classical or spherical)"
            ))),
        }
    }
}

/// Hard assignment of `n` rows to `k` clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("a partition needs k >= 1"));
        }
        if let Some((i, l)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(Error::invalid(format!(
                "label {l} of row {i} is not below k = {k}"
            )));
        }
        Ok(Partition { labels, k })
    }

    /// Partition with `k = max label + 1`.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().max().map_or(1, |m| m + 1);
        Partition::new(labels, k)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidModel {
    centroids: Matrix,
    geometry: Geometry,
}

impl CentroidModel {
    pub fn new(centroids: Matrix, geometry: Geometry) -> Result<Self> {
        if centroids.rows() == 0 {
            return Err(Error::invalid(
                "a centroid model needs at least one centroid",
            ));
        }
        if geometry == Geometry::Spherical {
            for (j, c) in centroids.row_iter().enumerate() {
                if (norm(c) - 1.0).abs() > 1e-10 {
                    return Err(Error::invalid(format!(
                        "spherical centroid {j} is not unit-norm"
                    )));
                }
            }
        }
        Ok(CentroidModel {
            centroids,
            geometry,
        })
    }

    pub fn centroids(&self) -> &Matrix {
        &self.centroids
    }

    pub fn centroid(&self, j: usize) -> &[f64] {
        self.centroids.row(j)
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    pub fn d(&self) -> usize {
        self.centroids.cols()
    }
}

/// Outcome of one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub partition: Partition,
    pub model: CentroidModel,
    /// SSE for euclidean fits, total cosine similarity for spherical fits.
    pub objective: f64,
    /// Squared Euclidean error on the working matrix (unit rows for spherical fits).
    pub sse: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every iteration.
    pub history: Vec<f64>,
    pub seed: u64,
    pub stream_index: u64,
    /// Which restart produced this result.
    pub restart: usize,
}

/// Restart and stopping settings shared by both methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub n_init: usize,
    pub max_iter: usize,
    /// `None` uses the method's default.
    pub tol: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            n_init: DEFAULT_N_INIT,
            max_iter: DEFAULT_MAX_ITER,
            tol: None,
        }
    }
}

impl FitConfig {
    pub fn single_init(self) -> Self {
        FitConfig { n_init: 1, ..self }
    }
}

/// Fits `method` on `z`. Spherical fits normalize the rows first.
pub fn fit(
    method: Method,
    z: &Matrix,
    k: usize,
    config: &FitConfig,
    stream: &RngStream,
) -> Result<ClusteringResult> {
    let tol = config.tol.unwrap_or(method.default_tol());
    match method {
        Method::Classical => kmeans_fit(z, k, config.n_init, config.max_iter, tol, stream),
        Method::Spherical => {
            skmeans::skmeans_fit(z, k, config.n_init, config.max_iter, tol, stream)
        }
    }
}

pub(crate) fn check_k(n: usize, k: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("cannot cluster an empty matrix"));
    }
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} must lie in 1..={n}")));
    }
    Ok(())
}

/// K-means++ seeding: the first centroid is a uniform row, each later one a
/// row drawn with probability proportional to its squared distance to the
/// nearest centroid chosen so far.
pub fn kmeanspp_init(z: &Matrix, k: usize, stream: &mut RngStream) -> Result<CentroidModel> {
    check_k(z.rows(), k)?;
    let first = stream.below(z.rows());
    let rows = seed_rows(z.rows(), k, first, stream, |i, j| {
        sq_dist(z.row(i), z.row(j))
    });
    let centroids = Matrix::from_rows(&rows.iter().map(|&i| z.row(i)).collect::<Vec<_>>())?;
    CentroidModel::new(centroids, Geometry::Euclidean)
}

/// D² sampling of `k` distinct row indices starting from `first`, where
/// `dist(i, j)` is the (already squared) seeding distance between rows.
pub(crate) fn seed_rows(
    n: usize,
    k: usize,
    first: usize,
    stream: &mut RngStream,
    dist: impl Fn(usize, usize) -> f64,
) -> Vec<usize> {
    let mut chosen = vec![first];
    let mut taken = vec![false; n];
    taken[first] = true;
    let mut nearest: Vec<f64> = (0..n).map(|i| dist(i, first)).collect();
    nearest[first] = 0.0;
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let target = stream.uniform01() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in nearest.iter().enumerate() {
                if w > 0.0 {
                    acc += w;
                    pick = Some(i);
                    if acc > target {
                        break;
                    }
                }
            }
            pick.expect("positive total has a positive weight")
        } else {
            // Every remaining row duplicates a chosen one.
            let free: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
            free[stream.below(free.len())]
        };
        chosen.push(next);
        taken[next] = true;
        for (i, w) in nearest.iter_mut().enumerate() {
            *w = if taken[i] { 0.0 } else { w.min(dist(i, next)) };
        }
    }
    chosen
}

/// Index of the nearest centroid; ties go to the lowest index.
#[inline]
fn nearest_centroid(row: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.row_iter().enumerate() {
        let d = sq_dist(row, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign(z: &Matrix, centroids: &Matrix) -> Vec<usize> {
    (0..z.rows())
        .into_par_iter()
        .with_min_len(256)
        .map(|i| nearest_centroid(z.row(i), centroids).0)
        .collect()
}

/// Cluster means, in row order. Empty clusters keep a zero row.
pub(crate) fn cluster_means(z: &Matrix, labels: &[usize], k: usize) -> (Matrix, Vec<usize>) {
    let mut sums = Matrix::zeros(k, z.cols());
    let mut counts = vec![0usize; k];
    for (row, &l) in z.row_iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums.row_mut(l).iter_mut().zip(row) {
            *s += v;
        }
    }
    for (j, &c) in counts.iter().enumerate() {
        if c > 0 {
            for s in sums.row_mut(j) {
                *s /= c as f64;
            }
        }
    }
    (sums, counts)
}

/// Gives every empty cluster the row farthest from its own centroid,
/// skipping rows that are alone in their cluster. Ties go to the lowest row.
fn repair_empty(z: &Matrix, labels: &mut [usize], centroids: &mut Matrix, counts: &mut [usize]) {
    for empty in 0..counts.len() {
        if counts[empty] > 0 {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, &l) in labels.iter().enumerate() {
            if counts[l] < 2 {
                continue;
            }
            let d = sq_dist(z.row(i), centroids.row(l));
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        let Some((i, _)) = best else { return };
        let donor = labels[i];
        labels[i] = empty;
        counts[donor] -= 1;
        counts[empty] = 1;
        centroids.row_mut(empty).copy_from_slice(z.row(i));
        recompute_mean(z, labels, donor, centroids);
    }
}

fn recompute_mean(z: &Matrix, labels: &[usize], j: usize, centroids: &mut Matrix) {
    let d = z.cols();
    let mut sum = vec![0.0; d];
    let mut count = 0usize;
    for (row, _) in z.row_iter().zip(labels).filter(|(_, &l)| l == j) {
        count += 1;
        for (s, v) in sum.iter_mut().zip(row) {
            *s += v;
        }
    }
    for (c, s) in centroids.row_mut(j).iter_mut().zip(sum) {
        *c = s / count as f64;
    }
}

fn sse_of(z: &Matrix, labels: &[usize], centroids: &Matrix) -> f64 {
    z.row_iter()
        .zip(labels)
        .map(|(row, &l)| sq_dist(row, centroids.row(l)))
        .sum()
}

/// Lloyd iteration from `init` until the labels stop changing, the largest
/// centroid move falls below `tol`, or `max_iter` updates have run.
pub fn lloyd(
    z: &Matrix,
    init: &CentroidModel,
    max_iter: usize,
    tol: f64,
) -> Result<ClusteringResult> {
    check_k(z.rows(), init.k())?;
    if init.geometry() != Geometry::Euclidean {
        return Err(Error::invalid("lloyd needs a euclidean centroid model"));
    }
    if init.d() != z.cols() {
        return Err(Error::invalid(format!(
            "centroids have {} features, data has {}",
            init.d(),
            z.cols()
        )));
    }
    let k = init.k();
    let mut centroids = init.centroids().clone();
    let mut labels = assign(z, &centroids);
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let (mut next, mut counts) = cluster_means(z, &labels, k);
        repair_empty(z, &mut labels, &mut next, &mut counts);
        let shift = centroids
            .row_iter()
            .zip(next.row_iter())
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        let new_labels = assign(z, &next);
        let stable = new_labels == labels;
        centroids = next;
        labels = new_labels;
        let sse = sse_of(z, &labels, &centroids);
        if !sse.is_finite() {
            return Err(Error::Numeric("K-means objective is not finite".into()));
        }
        history.push(sse);
        let has_empty = labels_leave_empty(&labels, k);
        if (stable || shift < tol) && !has_empty {
            converged = true;
            break;
        }
    }
    if labels_leave_empty(&labels, k) {
        let (_, mut counts) = cluster_means(z, &labels, k);
        repair_empty(z, &mut labels, &mut centroids, &mut counts);
        history.push(sse_of(z, &labels, &centroids));
    }
    let sse = sse_of(z, &labels, &centroids);
    Ok(ClusteringResult {
        partition: Partition::new(labels, k)?,
        model: CentroidModel::new(centroids, Geometry::Euclidean)?,
        objective: sse,
        sse,
        iterations,
        converged,
        history,
        seed: 0,
        stream_index: 0,
        restart: 0,
    })
}

fn labels_leave_empty(labels: &[usize], k: usize) -> bool {
    let mut seen = vec![false; k];
    for &l in labels {
        seen[l] = true;
    }
    seen.contains(&false)
}

/// Runs `n_init` seeded Lloyd fits on sub-streams `0..n_init` of `stream`
/// and keeps the lowest SSE; ties go to the lowest restart.
pub fn kmeans_fit(
    z: &Matrix,
    k: usize,
    n_init: usize,
    max_iter: usize,
    tol: f64,
    stream: &RngStream,
) -> Result<ClusteringResult> {
    best_of_restarts(n_init, stream, |s| {
        let init = kmeanspp_init(z, k, s)?;
        lloyd(z, &init, max_iter, tol)
    })
}

/// Parallel restarts reduced by `(sse, restart)`, so the answer does not
/// depend on the thread count.
pub(crate) fn best_of_restarts(
    n_init: usize,
    stream: &RngStream,
    run: impl Fn(&mut RngStream) -> Result<ClusteringResult> + Sync,
) -> Result<ClusteringResult> {
    if n_init == 0 {
        return Err(Error::invalid("n_init must be at least 1"));
    }
    let results: Vec<Result<ClusteringResult>> = (0..n_init)
        .into_par_iter()
        .map(|r| {
            let mut s = stream.child(r as u64);
            let mut result = run(&mut s)?;
            result.seed = s.master_seed();
            result.stream_index = s.stream_index();
            result.restart = r;
            Ok(result)
        })
        .collect();
    let mut best: Option<ClusteringResult> = None;
    for result in results {
        let result = result?;
        if best.as_ref().is_none_or(|b| result.sse < b.sse) {
            best = Some(result);
        }
    }
    Ok(best.expect("n_init >= 1"))
}
