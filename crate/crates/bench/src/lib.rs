//! Shared fixtures for the benchmarks.

use nullclust_core::datagen::{generate, Dataset, GenParams};
use nullclust_core::preprocess::standardize;
use nullclust_core::{Matrix, RngStream};

/// Standardized `n x 6` matrix of `dataset` drawn from a fixed stream.
pub fn fixture(dataset: Dataset, n: usize) -> Matrix {
    let params = GenParams {
        n,
        ..GenParams::default()
    };
    let x =
        generate(dataset, params, &mut RngStream::new(7, 0)).expect("fixture parameters are valid");
    standardize(&x)
        .expect("generated data has variance")
        .0
        .values()
        .clone()
}
