//! Spherical K-means: rows and centroids live on the unit sphere and
//! similarity is the dot product.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kmeans::{
    best_of_restarts, check_k, cluster_means, seed_rows, CentroidModel, ClusteringResult, Geometry,
    Partition,
};
use crate::linalg::{dot, norm, sq_dist, Matrix};
use crate::preprocess::normalize_matrix_rows;
use crate::rng::RngStream;

/// Stopping threshold on the largest `1 - cos` between successive centroids.
pub const DEFAULT_TOL: f64 = 1e-6;
/// A cluster mean shorter than this has no usable direction.
pub const DEGENERATE_NORM: f64 = 1e-12;
const UNIT_TOLERANCE: f64 = 1e-9;

fn check_unit_rows(u: &Matrix, what: &str) -> Result<()> {
    for (i, row) in u.row_iter().enumerate() {
        if (norm(row) - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::invalid(format!("{what} row {i} is not unit-norm")));
        }
    }
    Ok(())
}

/// Cosine distance `1 - u·v` on unit vectors, clamped at 0 against rounding.
#[inline]
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    (1.0 - dot(a, b)).max(0.0)
}

#[inline]
fn most_similar(row: &[f64], centroids: &Matrix) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (j, c) in centroids.row_iter().enumerate() {
        let s = dot(row, c);
        if s > best.1 {
            best = (j, s);
        }
    }
    best.0
}

fn assign(u: &Matrix, centroids: &Matrix) -> Vec<usize> {
    (0..u.rows())
        .into_par_iter()
        .with_min_len(256)
        .map(|i| most_similar(u.row(i), centroids))
        .collect()
}

/// Assigns each unit row to the centroid with the largest dot product;
/// ties go to the lowest centroid index.
pub fn spherical_assign(u: &Matrix, model: &CentroidModel) -> Result<Partition> {
    if model.geometry() != Geometry::Spherical {
        return Err(Error::invalid(
            "spherical_assign needs a spherical centroid model",
        ));
    }
    if model.d() != u.cols() {
        return Err(Error::invalid("centroid and row dimensions differ"));
    }
    check_unit_rows(u, "input")?;
    Partition::new(assign(u, model.centroids()), model.k())
}

/// Normalized cluster means. A cluster whose mean is (near) zero is
/// reseeded with its member least similar to `previous`; an empty cluster
/// keeps its previous centroid.
pub fn spherical_update(
    u: &Matrix,
    partition: &Partition,
    previous: &CentroidModel,
) -> Result<CentroidModel> {
    if partition.n() != u.rows() || previous.k() != partition.k() || previous.d() != u.cols() {
        return Err(Error::invalid(
            "partition, model and data dimensions differ",
        ));
    }
    let (centroids, _) = update(u, partition.labels(), previous.centroids());
    CentroidModel::new(centroids, Geometry::Spherical)
}

fn update(u: &Matrix, labels: &[usize], previous: &Matrix) -> (Matrix, Vec<usize>) {
    let k = previous.rows();
    let (mut means, counts) = cluster_means(u, labels, k);
    for j in 0..k {
        if counts[j] == 0 {
            means.row_mut(j).copy_from_slice(previous.row(j));
            continue;
        }
        let len = norm(means.row(j));
        if len < DEGENERATE_NORM {
            let old = previous.row(j);
            let mut pick: Option<(usize, f64)> = None;
            for (i, &l) in labels.iter().enumerate() {
                if l != j {
                    continue;
                }
                let s = dot(u.row(i), old);
                if pick.is_none_or(|(_, ps)| s < ps) {
                    pick = Some((i, s));
                }
            }
            let (i, _) = pick.expect("nonempty cluster");
            means.row_mut(j).copy_from_slice(u.row(i));
        } else {
            for v in means.row_mut(j) {
                *v /= len;
            }
        }
    }
    (means, counts)
}

/// Gives every empty cluster the row least similar to its own centroid,
/// skipping rows that are alone in their cluster. Ties go to the lowest row.
fn repair_empty(u: &Matrix, labels: &mut [usize], centroids: &mut Matrix, counts: &mut [usize]) {
    for empty in 0..counts.len() {
        if counts[empty] > 0 {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, &l) in labels.iter().enumerate() {
            if counts[l] < 2 {
                continue;
            }
            let s = dot(u.row(i), centroids.row(l));
            if best.is_none_or(|(_, bs)| s < bs) {
                best = Some((i, s));
            }
        }
        let Some((i, _)) = best else { return };
        let donor = labels[i];
        labels[i] = empty;
        counts[donor] -= 1;
        counts[empty] = 1;
        centroids.row_mut(empty).copy_from_slice(u.row(i));
        let previous = centroids.clone();
        let (updated, _) = update(u, labels, &previous);
        centroids.row_mut(donor).copy_from_slice(updated.row(donor));
    }
}

fn total_similarity(u: &Matrix, labels: &[usize], centroids: &Matrix) -> f64 {
    u.row_iter()
        .zip(labels)
        .map(|(row, &l)| dot(row, centroids.row(l)))
        .sum()
}

fn unit_sse(u: &Matrix, labels: &[usize], centroids: &Matrix) -> f64 {
    u.row_iter()
        .zip(labels)
        .map(|(row, &l)| sq_dist(row, centroids.row(l)))
        .sum()
}

fn has_empty(labels: &[usize], k: usize) -> bool {
    let mut seen = vec![false; k];
    for &l in labels {
        seen[l] = true;
    }
    seen.contains(&false)
}

/// K-means++ in cosine distance: first centroid uniform, then rows drawn
/// with weight `(1 - cos)²` to the nearest chosen centroid.
pub fn spherical_kmeanspp_init(
    u: &Matrix,
    k: usize,
    stream: &mut RngStream,
) -> Result<CentroidModel> {
    check_k(u.rows(), k)?;
    let first = stream.below(u.rows());
    let rows = seed_rows(u.rows(), k, first, stream, |i, j| {
        cosine_distance(u.row(i), u.row(j)).powi(2)
    });
    let centroids = Matrix::from_rows(&rows.iter().map(|&i| u.row(i)).collect::<Vec<_>>())?;
    CentroidModel::new(normalize_matrix_rows(&centroids)?, Geometry::Spherical)
}

/// Alternating assign/update on unit rows `u` from `init`.
pub fn spherical_lloyd(
    u: &Matrix,
    init: &CentroidModel,
    max_iter: usize,
    tol: f64,
) -> Result<ClusteringResult> {
    check_k(u.rows(), init.k())?;
    if init.geometry() != Geometry::Spherical || init.d() != u.cols() {
        return Err(Error::invalid(
            "init must be a spherical model matching the data",
        ));
    }
    let k = init.k();
    let mut centroids = init.centroids().clone();
    let mut labels = assign(u, &centroids);
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let (mut next, mut counts) = update(u, &labels, &centroids);
        repair_empty(u, &mut labels, &mut next, &mut counts);
        let shift = centroids
            .row_iter()
            .zip(next.row_iter())
            .map(|(a, b)| cosine_distance(a, b))
            .fold(0.0, f64::max);
        let new_labels = assign(u, &next);
        let stable = new_labels == labels;
        centroids = next;
        labels = new_labels;
        let objective = total_similarity(u, &labels, &centroids);
        if !objective.is_finite() {
            return Err(Error::Numeric(
                "spherical K-means objective is not finite".into(),
            ));
        }
        history.push(objective);
        if (stable || shift < tol) && !has_empty(&labels, k) {
            converged = true;
            break;
        }
    }
    if has_empty(&labels, k) {
        let (_, mut counts) = cluster_means(u, &labels, k);
        repair_empty(u, &mut labels, &mut centroids, &mut counts);
        history.push(total_similarity(u, &labels, &centroids));
    }
    let objective = total_similarity(u, &labels, &centroids);
    Ok(ClusteringResult {
        sse: unit_sse(u, &labels, &centroids),
        partition: Partition::new(labels, k)?,
        model: CentroidModel::new(centroids, Geometry::Spherical)?,
        objective,
        iterations,
        converged,
        history,
        seed: 0,
        stream_index: 0,
        restart: 0,
    })
}

/// Normalizes the rows of `z`, then keeps the best of `n_init` seeded
/// spherical fits. The winner has the lowest unit-sphere SSE, which for unit
/// vectors is the same as the highest total similarity.
pub fn skmeans_fit(
    z: &Matrix,
    k: usize,
    n_init: usize,
    max_iter: usize,
    tol: f64,
    stream: &RngStream,
) -> Result<ClusteringResult> {
    let u = normalize_matrix_rows(z)?;
    best_of_restarts(n_init, stream, |s| {
        let init = spherical_kmeanspp_init(&u, k, s)?;
        spherical_lloyd(&u, &init, max_iter, tol)
    })
}
