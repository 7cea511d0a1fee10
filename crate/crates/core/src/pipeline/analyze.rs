use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use log::{info, warn};

use super::artifacts::{self as art, ArtifactWriter, ClusterShapSidecar, RowScope, RunManifest, StageRecord};
use super::config::PipelineConfig;
use crate::cca::{
    biplot_points, cluster_ca, elbow_solutions, project_supplementary, CcaSolution, CentroidReport, ElbowCurve,
    ElbowPoint,
};
use crate::dataset::{indicator, load_csv, skew_filter, CategoricalDataset, FilterReport, IndicatorMatrix};
use crate::ensembles::{
    consensus_select, train_gradient_boosting, train_random_forest, EnsembleKind, GbParams, RfParams, ScreeningReport,
    TreeEnsemble,
};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::shap::{shap_summary, BackgroundSet, ShapExplanation};

/// Seeds of the named stages, all derived from the run seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StageSeeds {
    pub screening: u64,
    pub cca: u64,
    pub shap_bg: u64,
    pub shap_model: u64,
}

impl StageSeeds {
    pub fn new(seed: u64) -> Self {
        StageSeeds {
            screening: substream(seed, "screening"),
            cca: substream(seed, "cca"),
            shap_bg: substream(seed, "shap-bg"),
            shap_model: substream(seed, "shap-model"),
        }
    }

    /// Background and model seeds for one 1-based cluster, or for the pooled
    /// model when `cluster` is `None`.
    pub fn for_cluster(&self, cluster: Option<usize>) -> (u64, u64) {
        let name = match cluster {
            Some(k) => format!("cluster/{k}"),
            None => "all".to_string(),
        };
        (substream(self.shap_bg, &name), substream(self.shap_model, &name))
    }
}

/// SHAP results for one cluster.
#[derive(Clone, Debug)]
pub struct ClusterExplanation {
    /// 1-based.
    pub cluster: usize,
    pub model: TreeEnsemble,
    pub explanation: ShapExplanation,
    pub scope: RowScope,
}

/// Everything `analyze` computed, alongside what it wrote.
#[derive(Clone, Debug)]
pub struct AnalysisOutcome {
    pub dir: PathBuf,
    pub filter: FilterReport,
    pub screening: Option<ScreeningReport>,
    pub active: Vec<String>,
    pub curve: ElbowCurve,
    pub solution: CcaSolution,
    pub explanations: Vec<ClusterExplanation>,
    pub manifest: RunManifest,
}

/// Train the configured severity model on `z`/`y`.
pub fn train_severity_model(
    cfg: &PipelineConfig,
    z: &IndicatorMatrix,
    y: &[usize],
    classes: &[String],
    seed: u64,
) -> Result<TreeEnsemble> {
    match cfg.shap.model {
        EnsembleKind::RandomForest => train_random_forest(
            z,
            y,
            classes,
            &RfParams {
                seed,
                ..cfg.shap.rf.clone()
            },
        ),
        EnsembleKind::GradientBoosting => train_gradient_boosting(
            z,
            y,
            classes,
            &GbParams {
                seed,
                ..cfg.shap.gb.clone()
            },
        ),
    }
}

/// Per-cluster severity models and their SHAP explanations over every row of
/// each cluster. `assign` holds 0-based labels.
pub fn explain_clusters(
    cfg: &PipelineConfig,
    ds: &CategoricalDataset,
    features: &[String],
    assign: &[usize],
    k: usize,
) -> Result<Vec<ClusterExplanation>> {
    let target = cfg
        .target
        .as_deref()
        .ok_or_else(|| Error::Config("SHAP needs a `target`".into()))?;
    let t = ds
        .schema()
        .index_of(target)
        .ok_or_else(|| Error::Config(format!("target `{target}` is not a column")))?;
    let classes = ds.schema().variables()[t].categories.clone();
    let y: Vec<usize> = ds.column(t).map(|c| c as usize).collect();
    let z = indicator(ds, features)?;
    let seeds = StageSeeds::new(cfg.seed());

    let pooled = if cfg.shap.per_cluster {
        None
    } else {
        let (bg_seed, model_seed) = seeds.for_cluster(None);
        let model = train_severity_model(cfg, &z, &y, &classes, model_seed)?;
        let bg = BackgroundSet::sample(&z, cfg.shap.background, bg_seed)?;
        Some((model, bg))
    };

    let mut out = Vec::with_capacity(k);
    for cluster in 1..=k {
        let members: Vec<usize> = (0..assign.len()).filter(|&i| assign[i] + 1 == cluster).collect();
        if members.is_empty() {
            warn!("cluster {cluster} is empty; no explanation written");
            continue;
        }
        let zk = z.subset_rows(&members);
        let (model, bg, scope) = match &pooled {
            Some((model, bg)) => (model.clone(), bg.clone(), RowScope::All),
            None => {
                let (bg_seed, model_seed) = seeds.for_cluster(Some(cluster));
                let yk: Vec<usize> = members.iter().map(|&i| y[i]).collect();
                let model = train_severity_model(cfg, &zk, &yk, &classes, model_seed)?;
                let bg = BackgroundSet::sample(&zk, cfg.shap.background, bg_seed)?;
                (model, bg, RowScope::Cluster)
            }
        };
        if model.degenerate {
            warn!("cluster {cluster}: a single severity class; attributions are all zero");
        }
        let explanation = shap_summary(&model, &zk, &bg, cfg.shap.class_mode)?.with_row_ids(members)?;
        out.push(ClusterExplanation {
            cluster,
            model,
            explanation,
            scope,
        });
    }
    Ok(out)
}

fn single_point_curve(sol: &CcaSolution) -> ElbowCurve {
    ElbowCurve {
        points: vec![ElbowPoint {
            k: sol.k,
            wcss: sol.total_inertia - sol.between_inertia,
            tss: sol.total_inertia,
            normalized: sol.normalized_wcss(),
        }],
        knee: sol.k,
    }
}

fn rows_of(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Run the whole pipeline and write every artifact into the output
/// directory. The config is validated before anything is read.
pub fn analyze(cfg: &PipelineConfig) -> Result<AnalysisOutcome> {
    cfg.validate()?;
    let dir = cfg.output_dir().to_path_buf();
    let seeds = StageSeeds::new(cfg.seed());
    let mut timings = BTreeMap::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut BTreeMap<String, f64>| {
        timings.insert(name.to_string(), clock.elapsed().as_secs_f64());
        clock = Instant::now();
    };

    let input_bytes = std::fs::read(&cfg.input).map_err(|e| Error::io(&cfg.input, e))?;
    let input_digest = art::sha256_hex(&input_bytes);
    let ds = load_csv(&cfg.input, &cfg.schema_mode()?)?;
    info!(
        "loaded {} rows × {} variables from {}",
        ds.n_rows(),
        ds.n_vars(),
        cfg.input.display()
    );
    if let Some(t) = &cfg.target {
        if ds.schema().index_of(t).is_none() {
            return Err(Error::Config(format!(
                "target `{t}` is not a column of {}",
                cfg.input.display()
            )));
        }
    }
    let writer = ArtifactWriter::create(&dir)?;

    // Skew filter.
    let mut filter_stage = StageRecord {
        name: "filter".into(),
        ..Default::default()
    };
    filter_stage.inputs.insert("input".into(), input_digest);
    let (filtered, filter) = skew_filter(&ds, cfg.filter.skew_threshold)?;
    let filter_digest = writer.write(&mut filter_stage, art::FILTER_REPORT, &art::to_json_bytes(&filter)?)?;
    info!(
        "skew filter kept {} of {} variables",
        filter.kept().count(),
        filter.entries.len()
    );
    lap("filter", &mut timings);

    // Screening.
    let mut screening_stage = StageRecord {
        name: "screening".into(),
        ..Default::default()
    };
    screening_stage
        .inputs
        .insert(art::FILTER_REPORT.into(), filter_digest.clone());
    let explanatory = filtered.schema().explanatory_names();
    let (screening, mut active) = match (&cfg.target, cfg.screening.enabled) {
        (Some(target), true) => {
            screening_stage.seed = Some(seeds.screening);
            let report = consensus_select(&filtered, target, &cfg.screening_params(seeds.screening))?;
            writer.write(
                &mut screening_stage,
                art::SCREENING_REPORT,
                &art::to_json_bytes(&report)?,
            )?;
            let selected = report.selected();
            info!(
                "screening selected {} of {}: {}",
                selected.len(),
                report.entries.len(),
                selected.join(", ")
            );
            (Some(report), selected)
        }
        _ => (None, explanatory.clone()),
    };
    if active.is_empty() {
        return Err(Error::Data(
            "no variables left to cluster after filtering and screening".into(),
        ));
    }
    let features = active.clone();
    if cfg.cca.include_severity {
        active.push(cfg.target.clone().expect("validated"));
    }
    lap("screening", &mut timings);

    // Clustering.
    let mut cca_stage = StageRecord {
        name: "cca".into(),
        seed: Some(seeds.cca),
        ..Default::default()
    };
    cca_stage.inputs.insert(art::FILTER_REPORT.into(), filter_digest);
    if let Some(d) = screening_stage.outputs.get(art::SCREENING_REPORT) {
        cca_stage.inputs.insert(art::SCREENING_REPORT.into(), d.clone());
    }
    let z = indicator(&filtered, &active)?;
    let params = cfg.cca_params(seeds.cca);
    let (curve, solution) = match cfg.cca.k {
        Some(k) => {
            let sol = cluster_ca(&z, k, &params)?;
            (single_point_curve(&sol), sol)
        }
        None => {
            let ks = cfg.k_values();
            let (curve, mut sols) = elbow_solutions(&z, &ks, &params)?;
            let at = ks.iter().position(|&k| k == curve.knee).expect("knee is in range");
            info!("elbow knee at K = {}", curve.knee);
            (curve, sols.swap_remove(at))
        }
    };
    writer.write(&mut cca_stage, art::ELBOW_CSV, &art::elbow_csv(&curve)?)?;
    let clusters_digest = writer.write(&mut cca_stage, art::CLUSTERS_CSV, &art::clusters_csv(&solution)?)?;
    let report = CentroidReport::from_solution(&solution);
    writer.write(&mut cca_stage, art::CENTROIDS_JSON, &art::to_json_bytes(&report)?)?;
    writer.write(&mut cca_stage, art::CENTROIDS_TXT, report.to_text().as_bytes())?;

    let supplementary = match &cfg.target {
        Some(t) if !cfg.cca.include_severity => vec![project_supplementary(t, &filtered, &solution)?],
        _ => Vec::new(),
    };
    let points = biplot_points(&solution, &supplementary)?;
    let rescaled = solution.rescaled.as_ref().expect("biplot_points checked");
    let mut coords = rows_of(&rescaled.categories);
    let centroids = rows_of(&rescaled.centroids);
    coords.extend(centroids.iter().cloned());
    coords.extend(
        supplementary
            .iter()
            .flat_map(|p| p.points.iter().map(|q| q.coords.clone())),
    );
    let biplot = art::biplot_rows(&points, &coords, &centroids);
    writer.write(&mut cca_stage, art::BIPLOT_CSV, &art::biplot_csv(&biplot)?)?;
    lap("cca", &mut timings);

    // SHAP.
    let mut stages = vec![filter_stage, screening_stage, cca_stage];
    let explanations = if cfg.shap.enabled {
        let mut shap_stage = StageRecord {
            name: "shap".into(),
            seed: Some(cfg.seed()),
            ..Default::default()
        };
        shap_stage.inputs.insert(art::CLUSTERS_CSV.into(), clusters_digest);
        let explanations = explain_clusters(cfg, &filtered, &features, &solution.assign, solution.k)?;
        if let Some(first) = explanations.iter().find(|e| e.scope == RowScope::All) {
            writer.write(&mut shap_stage, art::ALL_ROWS_MODEL, first.model.to_json()?.as_bytes())?;
        }
        for e in &explanations {
            let model_file = match e.scope {
                RowScope::Cluster => {
                    let name = art::model_name(e.cluster);
                    writer.write(&mut shap_stage, &name, e.model.to_json()?.as_bytes())?;
                    name
                }
                RowScope::All => art::ALL_ROWS_MODEL.to_string(),
            };
            writer.write(
                &mut shap_stage,
                &art::shap_csv_name(e.cluster),
                &art::shap_csv(&e.explanation)?,
            )?;
            let sidecar = ClusterShapSidecar {
                cluster: e.cluster,
                model_file,
                scope: e.scope,
                shap: e.explanation.sidecar(),
            };
            writer.write(
                &mut shap_stage,
                &art::shap_sidecar_name(e.cluster),
                &art::to_json_bytes(&sidecar)?,
            )?;
        }
        stages.push(shap_stage);
        lap("shap", &mut timings);
        explanations
    } else {
        Vec::new()
    };

    let mut echo = cfg.clone();
    echo.output = None;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: echo,
        k: solution.k,
        stages,
        timings: cfg.timings.then_some(timings),
    };
    let mut manifest_stage = StageRecord::default();
    writer.write(&mut manifest_stage, art::MANIFEST, &art::to_json_bytes(&manifest)?)?;

    Ok(AnalysisOutcome {
        dir,
        filter,
        screening,
        active: features,
        curve,
        solution,
        explanations,
        manifest,
    })
}
