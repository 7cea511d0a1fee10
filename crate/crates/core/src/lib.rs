//! Pattern discovery in categorical incident tables.
//!
//! The crate chains five stages over a table of categorical variables:
//!
//! 1. [`dataset`]: CSV ingestion, the skew filter, and indicator/contingency
//!    matrices.
//! 2. [`ensembles`]: random-forest and gradient-boosted tree classifiers on
//!    one-hot features, and consensus variable screening across both.
//! 3. [`cca`]: cluster correspondence analysis, which alternates
//!    correspondence analysis of the cluster-by-category table with k-means on
//!    the induced object coordinates, plus elbow-based choice of K and biplot
//!    rescaling.
//! 4. [`shap`]: exact Shapley attributions of per-cluster severity models at
//!    variable granularity.
//! 5. [`pipeline`]: config-driven orchestration that writes every report, table
//!    and SVG plot.
//!
//! [`synth`] generates planted-partition data with known labels and provides
//! the adjusted Rand index, which together serve as a ground-truth oracle.
//!
//! Each capability has a runnable program under `examples/`:
//!
//! ```bash
//! cargo run --release --example cluster_planted
//! ```

pub mod cca;
pub mod dataset;
pub mod ensembles;
pub mod error;
pub mod pipeline;
pub mod rng;
pub mod shap;
pub mod synth;

pub use error::{Error, Result};
