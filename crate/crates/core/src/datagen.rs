//! Synthetic datasets: two structure-free null models (uniform and
//! isotropic Gaussian), a correlated Gaussian, a well-separated Gaussian
//! mixture used as a positive control, and a cytometry-like mixture with
//! overlapping populations.
//!
//! Every generator is a pure function of its parameters and the stream it
//! is handed. Mixture layouts are pinned constants in this module.

use std::fmt;
use std::str::FromStr;

use crate::data::{default_feature_names, DataMatrix, Provenance};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, Matrix};
use crate::rng::RngStream;

pub const DEFAULT_N: usize = 2000;
pub const DEFAULT_D: usize = 6;
/// Equicorrelation used by the correlated-Gaussian dataset.
pub const DEFAULT_RHO: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dataset {
    Random,
    Gaussian,
    Correlated,
    Multimodal,
    Cytometer,
}

impl Dataset {
    pub const ALL: [Dataset; 5] = [
        Dataset::Random,
        Dataset::Gaussian,
        Dataset::Correlated,
        Dataset::Multimodal,
        Dataset::Cytometer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dataset::Random => "random",
            Dataset::Gaussian => "gaussian",
            Dataset::Correlated => "correlated",
            Dataset::Multimodal => "multimodal",
            Dataset::Cytometer => "cytometer",
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Dataset::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown dataset `{s}`")))
    }
}

/// Parameters shared by the generator dispatcher.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenParams {
    pub n: usize,
    pub d: usize,
    pub rho: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n: DEFAULT_N,
            d: DEFAULT_D,
            rho: DEFAULT_RHO,
        }
    }
}

/// Generates `dataset` with the given parameters.
pub fn generate(dataset: Dataset, params: GenParams, stream: &mut RngStream) -> Result<DataMatrix> {
    match dataset {
        Dataset::Random => gen_random(params.n, params.d, stream),
        Dataset::Gaussian => gen_unimodal_gaussian(params.n, params.d, stream),
        Dataset::Correlated => gen_correlated_gaussian(params.n, params.d, params.rho, stream),
        Dataset::Multimodal => {
            if params.d != DEFAULT_D {
                return Err(Error::invalid(format!(
                    "the positive-control layout is defined for d = {DEFAULT_D}, got d = {}",
                    params.d
                )));
            }
            gen_multimodal(params.n, &MixtureSpec::positive_control(), stream)
        }
        Dataset::Cytometer => {
            if params.d != cytometer::D {
                return Err(Error::invalid(format!(
                    "the cytometer layout is defined for d = {}, got d = {}",
                    cytometer::D,
                    params.d
                )));
            }
            gen_cytometer(params.n, stream)
        }
    }
}

fn check_shape(n: usize, d: usize) -> Result<()> {
    if n == 0 || d == 0 {
        return Err(Error::invalid(format!(
            "need n >= 1 and d >= 1, got n = {n}, d = {d}"
        )));
    }
    Ok(())
}

fn provenance(generator: &str, params: Vec<(String, f64)>, stream: &RngStream) -> Provenance {
    Provenance {
        generator: generator.to_string(),
        params,
        seed: Some(stream.master_seed()),
        stream_index: Some(stream.stream_index()),
    }
}

fn assemble(
    generator: &str,
    n: usize,
    d: usize,
    values: Vec<f64>,
    labels: Option<Vec<usize>>,
    mut params: Vec<(String, f64)>,
    stream: &RngStream,
) -> Result<DataMatrix> {
    params.insert(0, ("d".into(), d as f64));
    params.insert(0, ("n".into(), n as f64));
    DataMatrix::new(
        Matrix::new(n, d, values)?,
        default_feature_names(d),
        labels,
        provenance(generator, params, stream),
    )
}

/// I.i.d. `U[0, 1)` entries.
pub fn gen_random(n: usize, d: usize, stream: &mut RngStream) -> Result<DataMatrix> {
    check_shape(n, d)?;
    let values = (0..n * d).map(|_| stream.uniform01()).collect();
    assemble("random", n, d, values, None, Vec::new(), stream)
}

/// I.i.d. standard normal entries.
pub fn gen_unimodal_gaussian(n: usize, d: usize, stream: &mut RngStream) -> Result<DataMatrix> {
    check_shape(n, d)?;
    let values = (0..n * d).map(|_| stream.standard_normal()).collect();
    assemble("gaussian", n, d, values, None, Vec::new(), stream)
}

/// Unit-variance covariance with every off-diagonal equal to `rho`.
pub fn equicorrelation(d: usize, rho: f64) -> Matrix {
    let mut s = Matrix::identity(d);
    for i in 0..d {
        for j in 0..d {
            if i != j {
                s[(i, j)] = rho;
            }
        }
    }
    s
}

/// Draws from `N(0, Σ)` with `Σ` equicorrelated at `rho`.
///
/// `rho` must lie in `(-1/(d-1), 1)`, the range where `Σ` is positive definite.
pub fn gen_correlated_gaussian(
    n: usize,
    d: usize,
    rho: f64,
    stream: &mut RngStream,
) -> Result<DataMatrix> {
    check_shape(n, d)?;
    let lower = if d > 1 {
        -1.0 / (d as f64 - 1.0)
    } else {
        f64::NEG_INFINITY
    };
    if !(rho > lower && rho < 1.0) {
        return Err(Error::invalid(format!(
            "rho = {rho} is outside ({lower}, 1) for d = {d}"
        )));
    }
    let chol = cholesky(&equicorrelation(d, rho))?;
    let mean = vec![0.0; d];
    let mut values = Vec::with_capacity(n * d);
    for _ in 0..n {
        values.extend(stream.mvn_sample(&mean, &chol)?);
    }
    assemble(
        "correlated",
        n,
        d,
        values,
        None,
        vec![("rho".into(), rho)],
        stream,
    )
}

/// A finite Gaussian mixture: component means, Cholesky factors of the
/// component covariances, and mixing weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    means: Vec<Vec<f64>>,
    chol: Vec<Matrix>,
    weights: Vec<f64>,
}

impl MixtureSpec {
    pub fn new(means: Vec<Vec<f64>>, chol: Vec<Matrix>, weights: Vec<f64>) -> Result<Self> {
        let k = means.len();
        if k == 0 {
            return Err(Error::invalid("mixture needs at least one component"));
        }
        if chol.len() != k || weights.len() != k {
            return Err(Error::invalid(format!(
                "mixture has {k} means, {} covariance factors and {} weights",
                chol.len(),
                weights.len()
            )));
        }
        let d = means[0].len();
        if d == 0 {
            return Err(Error::invalid("mixture components need d >= 1"));
        }
        for (j, (m, l)) in means.iter().zip(&chol).enumerate() {
            if m.len() != d || l.rows() != d || l.cols() != d {
                return Err(Error::invalid(format!(
                    "component {j} has inconsistent dimensions"
                )));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "component {j} has a non-finite mean"
                )));
            }
            for r in 0..d {
                if !(l[(r, r)] > 0.0) {
                    return Err(Error::invalid(format!(
                        "component {j}: Cholesky factor needs a positive diagonal"
                    )));
                }
                if (r + 1..d).any(|c| l[(r, c)] != 0.0) {
                    return Err(Error::invalid(format!(
                        "component {j}: Cholesky factor is not lower-triangular"
                    )));
                }
            }
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::invalid("mixture weights must be positive"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        Ok(MixtureSpec {
            means,
            chol,
            weights,
        })
    }

    /// Five unit-covariance components with equal weights whose means are
    /// the vertices of a regular simplex with edge 20, rotated so every
    /// feature carries part of the separation.
    pub fn positive_control() -> Self {
        let means = POSITIVE_CONTROL_MEANS.iter().map(|m| m.to_vec()).collect();
        let chol = vec![Matrix::identity(DEFAULT_D); 5];
        MixtureSpec::new(means, chol, vec![0.2; 5]).expect("pinned spec is valid")
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn d(&self) -> usize {
        self.means[0].len()
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cholesky_factors(&self) -> &[Matrix] {
        &self.chol
    }
}

const POSITIVE_CONTROL_MEANS: [[f64; 6]; 5] = [
    [-8.82, -4.88, -2.51, -3.46, -5.99, -2.05],
    [2.73, -4.88, 9.04, -3.46, 5.55, -2.05],
    [1.04, 4.98, -4.90, -5.86, 3.86, 7.81],
    [4.02, 7.97, 3.27, 2.31, -7.29, -3.35],
    [1.04, -3.19, -4.90, 10.47, 3.86, -0.36],
];

/// Index `j` drawn with probability `weights[j]`.
fn pick_component(weights: &[f64], stream: &mut RngStream) -> usize {
    let u = stream.uniform01();
    let mut acc = 0.0;
    for (j, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return j;
        }
    }
    weights.len() - 1
}

/// Samples `n` rows from `spec`, recording the component of each row as its
/// truth label.
pub fn gen_multimodal(n: usize, spec: &MixtureSpec, stream: &mut RngStream) -> Result<DataMatrix> {
    let d = spec.d();
    check_shape(n, d)?;
    let mut values = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let j = pick_component(&spec.weights, stream);
        values.extend(stream.mvn_sample(&spec.means[j], &spec.chol[j])?);
        labels.push(j);
    }
    let params = vec![("components".into(), spec.k() as f64)];
    assemble("multimodal", n, d, values, Some(labels), params, stream)
}

/// Pinned layout of the cytometry-like dataset.
///
/// Two super-groups sit on opposite sides of the origin along the all-ones
/// direction: populations {0, 1} and {2, 3, 4}. Inside each super-group the
/// populations differ by orthogonal marker contrasts, and populations 3 and
/// 4 differ only by a small contrast so they overlap. Each event is the
/// population's marker profile scaled by a log-normal brightness factor
/// (mean 1), plus isotropic biological spread and measurement noise.
pub mod cytometer {
    pub const D: usize = 6;
    pub const K: usize = 5;
    pub const MIN_N: usize = 100;
    pub const WEIGHTS: [f64; K] = [0.30, 0.25, 0.20, 0.15, 0.10];
    /// Per-feature offset of each super-group along the all-ones direction.
    pub const SUPERGROUP_OFFSET: f64 = 4.0;
    /// Length of the contrast separating populations inside a super-group.
    pub const SUBGROUP_OFFSET: f64 = 4.434;
    /// Distance between the means of populations 3 and 4.
    pub const CLOSE_PAIR_DISTANCE: f64 = 0.4;
    /// Standard deviation of log-brightness.
    pub const BRIGHTNESS_SD: f64 = 0.33;
    pub const SPREAD_SD: f64 = 0.2;
    pub const NOISE_SD: f64 = 0.05;
    /// Populations whose means are deliberately close.
    pub const CLOSE_PAIR: (usize, usize) = (3, 4);

    /// Population means, centered so the weighted mean is the origin.
    pub fn means() -> [[f64; D]; K] {
        let s6 = 6f64.sqrt();
        let h1 = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0].map(|v: f64| v / s6);
        let h2 = [0.5, 0.5, -0.5, -0.5, 0.0, 0.0];
        let h3 = [0.0, 0.0, 0.5, -0.5, 0.5, -0.5];
        let s = SUPERGROUP_OFFSET;
        let t = SUBGROUP_OFFSET;
        let v = CLOSE_PAIR_DISTANCE / 2.0;
        let mut m = [[0.0; D]; K];
        for f in 0..D {
            m[0][f] = s + t * h1[f];
            m[1][f] = s - t * h1[f];
            m[2][f] = -s + t * h2[f];
            m[3][f] = -s - t * h2[f] + v * h3[f];
            m[4][f] = -s - t * h2[f] - v * h3[f];
        }
        for f in 0..D {
            let center: f64 = (0..K).map(|j| WEIGHTS[j] * m[j][f]).sum();
            for row in m.iter_mut() {
                row[f] -= center;
            }
        }
        m
    }
}

/// Cytometry-like data: five populations with unequal weights, two of them
/// nearly coincident, with brightness variation and measurement noise.
pub fn gen_cytometer(n: usize, stream: &mut RngStream) -> Result<DataMatrix> {
    use cytometer::*;
    if n < MIN_N {
        return Err(Error::invalid(format!(
            "the cytometer dataset needs n >= {MIN_N}, got {n}"
        )));
    }
    let means = means();
    let sb = BRIGHTNESS_SD;
    let mut values = Vec::with_capacity(n * D);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let j = pick_component(&WEIGHTS, stream);
        let brightness = (sb * stream.standard_normal() - 0.5 * sb * sb).exp();
        let mut row = means[j].map(|m| m * brightness);
        for x in row.iter_mut() {
            *x += SPREAD_SD * stream.standard_normal();
        }
        for x in row.iter_mut() {
            *x += NOISE_SD * stream.standard_normal();
        }
        values.extend_from_slice(&row);
        labels.push(j);
    }
    let params = vec![
        ("supergroup_offset".into(), SUPERGROUP_OFFSET),
        ("subgroup_offset".into(), SUBGROUP_OFFSET),
        ("close_pair_distance".into(), CLOSE_PAIR_DISTANCE),
        ("brightness_sd".into(), BRIGHTNESS_SD),
        ("spread_sd".into(), SPREAD_SD),
        ("noise_sd".into(), NOISE_SD),
    ];
    assemble("cytometer", n, D, values, Some(labels), params, stream)
}
