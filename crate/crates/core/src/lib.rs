//! Cluster-validity diagnostics: synthetic null and structured datasets,
//! classical and spherical K-means, silhouette and ARI-based stability
//! measures, k-sweeps, PCA projections and report artifacts.

pub mod data;
pub mod datagen;
pub mod error;
pub mod kmeans;
pub mod linalg;
pub mod metrics;
pub mod pca;
pub mod preprocess;
pub mod report;
pub mod rng;
pub mod skmeans;

pub use data::{DataMatrix, Provenance};
pub use datagen::{Dataset, GenParams, MixtureSpec};
pub use error::{Error, Result};
pub use kmeans::{CentroidModel, ClusteringResult, FitConfig, Geometry, Method, Partition};
pub use linalg::Matrix;
pub use metrics::{
    Distance, KSweepReport, KSweepRow, SilhouetteBreakdown, StabilityReport, SweepConfig,
};
pub use pca::{PcaModel, Projection};
pub use preprocess::StandardizationModel;
pub use report::{Format, ProfileTable};
pub use rng::RngStream;
