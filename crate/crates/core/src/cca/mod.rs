//! Cluster correspondence analysis.
//!
//! Starting from random cluster labels, each alternation builds the
//! cluster-by-category contingency table, runs correspondence analysis on it
//! to get category quantifications `B`, maps every observation to object
//! coordinates `Y = (1/q)(I − 11ᵀ/n) Z B`, and re-clusters `Y` with k-means.
//! The loop stops once the labels are stable.

mod ca;
mod cluster;
mod elbow;
mod kmeans;
pub mod linalg;
mod report;
mod supplementary;

pub use ca::{correspondence_analysis, max_dims, standardized_residuals, CaResult, NULL_SINGULAR_VALUE};
pub use cluster::{cluster_ca, indicator_inertia, object_coordinates, rescale, CcaParams, CcaSolution, Rescaled};
pub use elbow::{chord_knee, elbow, elbow_solutions, ElbowCurve, ElbowPoint};
pub use kmeans::{
    balanced_random_labels, centroids_of, kmeans, total_ss, within_ss, KmeansInit, KmeansResult,
    DEFAULT_KMEANS_MAX_ITER,
};
pub use report::{biplot_points, BiplotPoint, CentroidReport, CentroidRow, PointKind, CENTROID_COLUMNS};
pub use supplementary::{project_supplementary, SupplementaryPoint, SupplementaryProjection};
