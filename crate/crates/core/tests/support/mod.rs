//! Naive reference implementations shared by the integration tests and the
//! acceptance suite. Nothing here calls the library's metric code.
#![allow(dead_code)]

use std::collections::HashMap;

use nullclust_core::datagen::gen_unimodal_gaussian;
use nullclust_core::kmeans::{kmeanspp_init, lloyd, CentroidModel, Geometry, Partition};
use nullclust_core::metrics::{ari, silhouette, sse, Distance};
use nullclust_core::pca::{pca_fit, pca_project};
use nullclust_core::preprocess::standardize;
use nullclust_core::skmeans::{spherical_kmeanspp_init, spherical_lloyd};
use nullclust_core::{Matrix, RngStream};

pub struct Instance {
    pub x: Matrix,
    pub unit: Matrix,
    pub labels: Vec<usize>,
    pub k: usize,
}

/// Random data with every cluster nonempty; some instances carry
/// duplicate rows and singleton clusters.
pub fn instance(idx: u64) -> Instance {
    let mut s = RngStream::new(2024, idx);
    let n = 2 + s.below(299);
    let k = 2 + s.below(5.min(n - 1));
    let d = 1 + s.below(6);
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| 3.0 * s.standard_normal() + 0.5).collect())
        .collect();
    if idx.is_multiple_of(5) && n > 3 {
        rows[1] = rows[0].clone();
        rows[2] = rows[0].clone();
    }
    let labels: Vec<usize> = (0..n).map(|i| if i < k { i } else { s.below(k) }).collect();
    let unit_rows: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let len = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            r.iter().map(|v| v / len).collect()
        })
        .collect();
    Instance {
        x: Matrix::from_rows(&rows).unwrap(),
        unit: Matrix::from_rows(&unit_rows).unwrap(),
        labels,
        k,
    }
}

/// Two labelings of the same points; even instances are noisy copies of
/// each other so the index spans its whole range.
pub fn label_pair(idx: u64) -> (Vec<usize>, Vec<usize>) {
    let mut s = RngStream::new(5150, idx);
    let n = 4 + s.below(297);
    let ka = 2 + s.below(6);
    let kb = 2 + s.below(6);
    let a: Vec<usize> = (0..n).map(|_| s.below(ka)).collect();
    let b: Vec<usize> = if idx.is_multiple_of(2) {
        a.iter()
            .map(|&l| if s.uniform01() < 0.2 { s.below(kb) } else { l })
            .collect()
    } else {
        (0..n).map(|_| s.below(kb)).collect()
    };
    (a, b)
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    sq_euclid(a, b).sqrt()
}

pub fn sq_euclid(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s
}

pub fn inner(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    (1.0 - inner(a, b)).max(0.0)
}

pub fn naive_silhouette(
    x: &Matrix,
    labels: &[usize],
    k: usize,
    dist: fn(&[f64], &[f64]) -> f64,
) -> f64 {
    let n = x.rows();
    let mut total = 0.0;
    for i in 0..n {
        let mut own_sum = 0.0;
        let mut own_count = 0usize;
        let mut other = vec![(0.0, 0usize); k];
        for j in 0..n {
            if i == j {
                continue;
            }
            let dij = dist(x.row(i), x.row(j));
            if labels[j] == labels[i] {
                own_sum += dij;
                own_count += 1;
            } else {
                other[labels[j]].0 += dij;
                other[labels[j]].1 += 1;
            }
        }
        if own_count == 0 {
            continue;
        }
        let a = own_sum / own_count as f64;
        let mut b = f64::INFINITY;
        for (sum, count) in other {
            if count > 0 {
                b = b.min(sum / count as f64);
            }
        }
        let m = if a > b { a } else { b };
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    total / n as f64
}

fn choose2(x: usize) -> f64 {
    (x as f64) * (x as f64 - 1.0) / 2.0
}

/// Adjusted Rand index straight from the contingency-table formula.
pub fn naive_ari(a: &[usize], b: &[usize]) -> f64 {
    let mut nij: HashMap<(usize, usize), usize> = HashMap::new();
    let mut ai: HashMap<usize, usize> = HashMap::new();
    let mut bj: HashMap<usize, usize> = HashMap::new();
    for t in 0..a.len() {
        *nij.entry((a[t], b[t])).or_insert(0) += 1;
        *ai.entry(a[t]).or_insert(0) += 1;
        *bj.entry(b[t]).or_insert(0) += 1;
    }
    let index: f64 = nij.values().map(|&c| choose2(c)).sum();
    let sa: f64 = ai.values().map(|&c| choose2(c)).sum();
    let sb: f64 = bj.values().map(|&c| choose2(c)).sum();
    let expected = sa * sb / choose2(a.len());
    let max = 0.5 * (sa + sb);
    (index - expected) / (max - expected)
}

pub fn naive_sse(x: &Matrix, labels: &[usize], centroids: &Matrix) -> f64 {
    let mut total = 0.0;
    for i in 0..x.rows() {
        let c = centroids.row(labels[i]);
        for j in 0..x.cols() {
            total += (x[(i, j)] - c[j]).powi(2);
        }
    }
    total
}

pub fn random_centroids(k: usize, d: usize, idx: u64) -> Matrix {
    let mut s = RngStream::new(77, idx);
    Matrix::new(k, d, (0..k * d).map(|_| s.standard_normal()).collect()).unwrap()
}

/// Largest library-versus-oracle gap per metric.
#[derive(Debug, Default)]
pub struct OracleErrors {
    pub silhouette_euclidean: f64,
    pub silhouette_cosine: f64,
    /// Relative to `max(1, sse)`.
    pub sse: f64,
    pub ari: f64,
}

impl OracleErrors {
    pub fn max(&self) -> f64 {
        self.silhouette_euclidean
            .max(self.silhouette_cosine)
            .max(self.sse)
            .max(self.ari)
    }
}

pub fn oracle_errors(count: u64) -> OracleErrors {
    let mut e = OracleErrors::default();
    for idx in 0..count {
        let inst = instance(idx);
        let p = Partition::new(inst.labels.clone(), inst.k).unwrap();

        let got = silhouette(&inst.x, &p, Distance::Euclidean).unwrap().mean;
        let want = naive_silhouette(&inst.x, &inst.labels, inst.k, euclid);
        e.silhouette_euclidean = e.silhouette_euclidean.max((got - want).abs());

        let got = silhouette(&inst.unit, &p, Distance::Cosine).unwrap().mean;
        let want = naive_silhouette(&inst.unit, &inst.labels, inst.k, cosine);
        e.silhouette_cosine = e.silhouette_cosine.max((got - want).abs());

        let centroids = random_centroids(inst.k, inst.x.cols(), idx);
        let model = CentroidModel::new(centroids.clone(), Geometry::Euclidean).unwrap();
        let got = sse(&inst.x, &p, &model).unwrap();
        let want = naive_sse(&inst.x, &inst.labels, &centroids);
        e.sse = e.sse.max((got - want).abs() / want.max(1.0));

        let (a, b) = label_pair(idx);
        let want = naive_ari(&a, &b);
        if want.is_finite() {
            let got = ari(&a, &b).unwrap();
            e.ari = e.ari.max((got - want).abs());
        }
    }
    e
}

/// Blobs around a few random centres, so Lloyd has real work to do.
pub fn lloyd_instance(idx: u64) -> (Matrix, usize) {
    let mut s = RngStream::new(31337, idx);
    let n = 10 + s.below(291);
    let d = 1 + s.below(6);
    let k = 2 + s.below(7);
    let blobs = 1 + s.below(6);
    let centres: Vec<Vec<f64>> = (0..blobs)
        .map(|_| (0..d).map(|_| 4.0 * s.standard_normal()).collect())
        .collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let c = &centres[s.below(blobs)];
            c.iter().map(|m| m + s.standard_normal()).collect()
        })
        .collect();
    (Matrix::from_rows(&rows).unwrap(), k)
}

fn monotone(history: &[f64], increasing: bool) -> bool {
    history.windows(2).all(|w| {
        let slack = 1e-9 * w[0].abs().max(1.0);
        if increasing {
            w[1] >= w[0] - slack
        } else {
            w[1] <= w[0] + slack
        }
    })
}

/// Checks every classical Lloyd invariant on `count` instances; returns a
/// description of each violation.
pub fn lloyd_violations(count: u64) -> Vec<String> {
    let mut bad = Vec::new();
    for idx in 0..count {
        let (z, k) = lloyd_instance(idx);
        let init = kmeanspp_init(&z, k, &mut RngStream::new(99, idx)).unwrap();
        let r = lloyd(&z, &init, 1000, 0.0).unwrap();
        if !r.converged {
            bad.push(format!("instance {idx}: did not converge"));
            continue;
        }
        if !monotone(&r.history, false) {
            bad.push(format!("instance {idx}: SSE increased: {:?}", r.history));
        }
        let labels = r.partition.labels();
        let c = r.model.centroids();
        let mut sums = vec![vec![0.0; z.cols()]; k];
        let mut counts = vec![0usize; k];
        for i in 0..z.rows() {
            counts[labels[i]] += 1;
            for j in 0..z.cols() {
                sums[labels[i]][j] += z[(i, j)];
            }
        }
        for l in 0..k {
            for j in 0..z.cols() {
                let mean = sums[l][j] / counts[l] as f64;
                if (mean - c[(l, j)]).abs() > 1e-9 {
                    bad.push(format!("instance {idx}: centroid {l} is not its mean"));
                }
            }
        }
        for i in 0..z.rows() {
            let own = sq_euclid(z.row(i), c.row(labels[i]));
            for l in 0..k {
                let other = sq_euclid(z.row(i), c.row(l));
                if other < own || (other == own && l < labels[i]) {
                    bad.push(format!(
                        "instance {idx}: row {i} is not at its nearest centroid"
                    ));
                }
            }
        }
    }
    bad
}

/// Spherical counterpart: objective never decreases, centroids stay unit
/// length, rows sit at their most similar centroid.
pub fn spherical_violations(count: u64) -> Vec<String> {
    let mut bad = Vec::new();
    for idx in 0..count {
        let (z, k) = lloyd_instance(idx);
        let mut unit = z.clone();
        for i in 0..unit.rows() {
            let len = inner(z.row(i), z.row(i)).sqrt();
            for v in unit.row_mut(i) {
                *v /= len;
            }
        }
        let init = spherical_kmeanspp_init(&unit, k, &mut RngStream::new(99, idx)).unwrap();
        let r = spherical_lloyd(&unit, &init, 1000, 0.0).unwrap();
        if !monotone(&r.history, true) {
            bad.push(format!(
                "instance {idx}: similarity decreased: {:?}",
                r.history
            ));
        }
        let c = r.model.centroids();
        for l in 0..k {
            let len = inner(c.row(l), c.row(l)).sqrt();
            if (len - 1.0).abs() > 1e-10 {
                bad.push(format!("instance {idx}: centroid {l} has norm {len}"));
            }
        }
        if r.converged {
            let labels = r.partition.labels();
            for i in 0..unit.rows() {
                let own = inner(unit.row(i), c.row(labels[i]));
                for l in 0..k {
                    let other = inner(unit.row(i), c.row(l));
                    if other > own || (other == own && l < labels[i]) {
                        bad.push(format!(
                            "instance {idx}: row {i} is not at its closest centroid"
                        ));
                    }
                }
            }
        }
    }
    bad
}

#[derive(Debug, Default)]
pub struct PcaErrors {
    /// Largest deviation of `VᵀV` from the identity.
    pub gram: f64,
    /// Largest gap between a coordinate variance and its eigenvalue.
    pub variance: f64,
    /// Largest off-diagonal coordinate covariance.
    pub cross_covariance: f64,
    /// First explained ratio on rank-1 data.
    pub rank_one_ratio: f64,
}

pub fn pca_errors() -> PcaErrors {
    let mut e = PcaErrors::default();
    for idx in 0..20u64 {
        let x = gen_unimodal_gaussian(500, 6, &mut RngStream::new(11, idx)).unwrap();
        // Stretch the columns unevenly so the spectrum is not flat.
        let mut stretched = x.values().clone();
        for i in 0..stretched.rows() {
            for (j, v) in stretched.row_mut(i).iter_mut().enumerate() {
                *v *= 1.0 + j as f64;
            }
        }
        let z = standardize(&x).unwrap().0;
        for data in [z.values(), &stretched] {
            let m = 6;
            let model = pca_fit(data, m).unwrap();
            let v = &model.components;
            for a in 0..m {
                for b in 0..m {
                    let g: f64 = (0..v.rows()).map(|i| v[(i, a)] * v[(i, b)]).sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    e.gram = e.gram.max((g - want).abs());
                }
            }
            let labels = Partition::new(vec![0; data.rows()], 1).unwrap();
            let p = pca_project(&model, data, &labels).unwrap();
            let n = data.rows() as f64;
            let means: Vec<f64> = (0..m)
                .map(|a| (0..p.coords.rows()).map(|i| p.coords[(i, a)]).sum::<f64>() / n)
                .collect();
            for a in 0..m {
                for b in 0..m {
                    let cov: f64 = (0..p.coords.rows())
                        .map(|i| (p.coords[(i, a)] - means[a]) * (p.coords[(i, b)] - means[b]))
                        .sum::<f64>()
                        / n;
                    if a == b {
                        e.variance = e.variance.max((cov - model.explained_variance[a]).abs());
                    } else {
                        e.cross_covariance = e.cross_covariance.max(cov.abs());
                    }
                }
            }
        }
    }
    let line: Vec<Vec<f64>> = (0..50)
        .map(|t| {
            let t = t as f64 - 20.0;
            vec![t, -0.5 * t, 3.0 * t, 0.0]
        })
        .collect();
    let model = pca_fit(&Matrix::from_rows(&line).unwrap(), 2).unwrap();
    e.rank_one_ratio = model.explained_ratio[0];
    e
}
