//! Principal-component projection for diagnostic plots. Nothing in the
//! fitting code depends on this module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::Partition;
use crate::linalg::{covariance, sym_eigen, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub center: Vec<f64>,
    /// `d x m`, one component per column.
    pub components: Matrix,
    pub explained_variance: Vec<f64>,
    pub explained_ratio: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    /// `n x m`.
    pub coords: Matrix,
    pub labels: Vec<usize>,
    pub explained_ratio: Vec<f64>,
}

impl Projection {
    pub fn dims(&self) -> usize {
        self.coords.cols()
    }
}

/// Top-`m` eigenvectors of the population covariance of `z`.
pub fn pca_fit(z: &Matrix, m: usize) -> Result<PcaModel> {
    let d = z.cols();
    if m == 0 || m > d {
        return Err(Error::invalid(format!("m = {m} must lie in 1..={d}")));
    }
    let center = z.column_means();
    let cov = covariance(&z.centered(&center))?;
    let eig = sym_eigen(&cov)?;
    let total: f64 = eig.values.iter().map(|v| v.max(0.0)).sum();
    let mut components = Matrix::zeros(d, m);
    for i in 0..d {
        for j in 0..m {
            components[(i, j)] = eig.vectors[(i, j)];
        }
    }
    let explained_variance: Vec<f64> = eig.values[..m].iter().map(|v| v.max(0.0)).collect();
    let explained_ratio = explained_variance
        .iter()
        .map(|v| if total > 0.0 { v / total } else { 0.0 })
        .collect();
    Ok(PcaModel {
        center,
        components,
        explained_variance,
        explained_ratio,
    })
}

/// `(z - center) * components`, with `partition`'s labels attached.
pub fn pca_project(model: &PcaModel, z: &Matrix, partition: &Partition) -> Result<Projection> {
    if z.cols() != model.center.len() {
        return Err(Error::invalid(format!(
            "model has {} features, data has {}",
            model.center.len(),
            z.cols()
        )));
    }
    if partition.n() != z.rows() {
        return Err(Error::invalid("partition and data lengths differ"));
    }
    let coords = z.centered(&model.center).matmul(&model.components)?;
    Ok(Projection {
        coords,
        labels: partition.labels().to_vec(),
        explained_ratio: model.explained_ratio.clone(),
    })
}
