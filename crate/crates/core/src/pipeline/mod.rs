//! Config-driven orchestration: `analyze` runs filter → screening → CCA →
//! SHAP and writes every artifact, `render` turns the artifacts into SVG
//! plots, `explain` recomputes one cluster's SHAP values from its saved
//! model, and `write_synth` emits a planted dataset with a starter config.
//!
//! All randomness comes from the config seed through named substreams
//! (`screening`, `cca`, `shap-bg`, `shap-model`), so each stage can be
//! reproduced on its own with the module functions.

mod analyze;
pub mod artifacts;
mod config;
mod explain;
mod render;
mod synth_out;

pub use analyze::{analyze, explain_clusters, train_severity_model, AnalysisOutcome, ClusterExplanation, StageSeeds};
pub use artifacts::{ClusterShapSidecar, RowScope, RunManifest, StageRecord};
pub use config::{CcaConfig, FilterConfig, PipelineConfig, ScreeningConfig, ShapConfig, VariableSpec};
pub use explain::explain;
pub use render::{class_color, cluster_svg, elbow_svg, render, shap_svg};
pub use synth_out::{graded_severity_link, starter_config, write_synth, CONFIG_TOML, DATA_CSV, LABELS_CSV, SPEC_JSON};
