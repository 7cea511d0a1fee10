use std::path::Path;

use super::analyze::StageSeeds;
use super::artifacts::{self as art, ClusterShapSidecar, RowScope};
use super::config::PipelineConfig;
use crate::dataset::{indicator, load_csv};
use crate::ensembles::TreeEnsemble;
use crate::error::{Error, Result};
use crate::shap::{shap_summary, BackgroundSet, ShapExplanation};

/// Recompute one cluster's SHAP values from the saved model.
///
/// The data are re-read through `cfg`, cluster membership comes from
/// `clusters.csv` in `artifacts`, and the background is redrawn with the
/// seed derivation `analyze` used, so the result matches
/// `shap_cluster_<cluster>.csv` byte for byte.
pub fn explain(cfg: &PipelineConfig, artifacts: &Path, cluster: usize) -> Result<ShapExplanation> {
    let sidecar: ClusterShapSidecar = art::read_json(artifacts, &art::shap_sidecar_name(cluster))?;
    let model_bytes = art::read_artifact(artifacts, &sidecar.model_file)?;
    let model = TreeEnsemble::from_json(
        std::str::from_utf8(&model_bytes).map_err(|e| Error::Data(format!("{}: {e}", sidecar.model_file)))?,
    )?;
    let assign = art::parse_clusters(&art::read_artifact(artifacts, art::CLUSTERS_CSV)?)?;

    let ds = load_csv(&cfg.input, &cfg.schema_mode()?)?;
    if ds.n_rows() != assign.len() {
        return Err(Error::Data(format!(
            "{} has {} rows but {} lists {}",
            cfg.input.display(),
            ds.n_rows(),
            art::CLUSTERS_CSV,
            assign.len()
        )));
    }
    let names: Vec<String> = model.features.iter().map(|b| b.name.clone()).collect();
    let z = indicator(&ds, &names)?;
    if z.blocks() != model.features.as_slice() {
        return Err(Error::Data(format!(
            "the categories in {} differ from those {} was trained on",
            cfg.input.display(),
            sidecar.model_file
        )));
    }

    let members: Vec<usize> = (0..assign.len()).filter(|&i| assign[i] + 1 == cluster).collect();
    let zk = z.subset_rows(&members);
    let seeds = StageSeeds::new(cfg.seed());
    let bg = match sidecar.scope {
        RowScope::Cluster => BackgroundSet::sample(&zk, cfg.shap.background, seeds.for_cluster(Some(cluster)).0)?,
        RowScope::All => BackgroundSet::sample(&z, cfg.shap.background, seeds.for_cluster(None).0)?,
    };
    if bg.seed != sidecar.shap.background.seed || bg.len() != sidecar.shap.background.size {
        return Err(Error::Config(format!(
            "config seed or background size differs from the run that wrote {}",
            art::shap_sidecar_name(cluster)
        )));
    }
    shap_summary(&model, &zk, &bg, sidecar.shap.class_mode)?.with_row_ids(members)
}
