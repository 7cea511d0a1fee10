use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cca::CcaParams;
use crate::dataset::{Schema, SchemaMode, Variable, DEFAULT_SKEW_THRESHOLD};
use crate::ensembles::{ConsensusRule, EnsembleKind, GbParams, RfParams, ScreeningParams};
use crate::error::{Error, Result};
use crate::shap::{ClassMode, DEFAULT_BACKGROUND_ROWS};

/// A declared variable in the config's `[[schema]]` tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub name: String,
    pub categories: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub skew_threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            skew_threshold: DEFAULT_SKEW_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScreeningConfig {
    pub enabled: bool,
    pub folds: usize,
    pub rule: ConsensusRule,
    pub rf: RfParams,
    pub gb: GbParams,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        let p = ScreeningParams::default();
        ScreeningConfig {
            enabled: true,
            folds: p.folds,
            rule: p.rule,
            rf: p.rf,
            gb: p.gb,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CcaConfig {
    /// Fixed number of clusters.
    #[serde(default)]
    pub k: Option<usize>,
    /// Inclusive `[first, last]` range scanned by the elbow; the knee is used.
    #[serde(default)]
    pub k_range: Option<[usize; 2]>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Embedding dimension override; `K − 1` when absent.
    #[serde(default)]
    pub dims: Option<usize>,
    /// Cluster on the target as an active variable instead of overlaying it.
    #[serde(default)]
    pub include_severity: bool,
}

fn default_restarts() -> usize {
    CcaParams::default().restarts
}

fn default_tol() -> f64 {
    CcaParams::default().tol
}

fn default_max_iter() -> usize {
    CcaParams::default().max_iter
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShapConfig {
    pub enabled: bool,
    pub background: usize,
    pub class_mode: ClassMode,
    /// One severity model per cluster; `false` trains a single model on all
    /// rows and explains each cluster with it.
    pub per_cluster: bool,
    pub model: EnsembleKind,
    pub rf: RfParams,
    pub gb: GbParams,
}

impl Default for ShapConfig {
    fn default() -> Self {
        ShapConfig {
            enabled: true,
            background: DEFAULT_BACKGROUND_ROWS,
            class_mode: ClassMode::default(),
            per_cluster: true,
            model: EnsembleKind::RandomForest,
            rf: RfParams::default(),
            gb: GbParams::default(),
        }
    }
}

/// Everything `analyze` needs. Parsed from TOML; see the README for the
/// full key list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: PathBuf,
    #[serde(default)]
    pub target: Option<String>,
    /// Drives every random stream. Mandatory.
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Declared variables; absent means categories are inferred from the file.
    #[serde(default)]
    pub schema: Option<Vec<VariableSpec>>,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub screening: ScreeningConfig,
    pub cca: CcaConfig,
    #[serde(default)]
    pub shap: ShapConfig,
    /// Record stage timings in the manifest (makes it run-dependent).
    #[serde(default)]
    pub timings: bool,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Read a config file. A relative `input` or `output` is resolved against
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.input.is_relative() {
            cfg.input = base.join(&cfg.input);
        }
        if let Some(out) = cfg.output.as_mut().filter(|o| o.is_relative()) {
            *out = base.join(&*out);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Check every cross-field rule. Called before any compute.
    pub fn validate(&self) -> Result<()> {
        if self.seed.is_none() {
            return Err(Error::Config("`seed` is required".into()));
        }
        match (self.cca.k, self.cca.k_range) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "set exactly one of `cca.k` and `cca.k_range`, not both".into(),
                ))
            }
            (None, None) => return Err(Error::Config("set one of `cca.k` or `cca.k_range`".into())),
            (Some(0), None) => return Err(Error::Config("`cca.k` must be at least 1".into())),
            (None, Some([lo, hi])) if lo == 0 || hi < lo => {
                return Err(Error::Config(format!(
                    "`cca.k_range` [{lo}, {hi}] must satisfy 1 ≤ first ≤ last"
                )));
            }
            _ => {}
        }
        if self.cca.restarts == 0 || self.cca.max_iter == 0 {
            return Err(Error::Config(
                "`cca.restarts` and `cca.max_iter` must be at least 1".into(),
            ));
        }
        if self.cca.tol.is_nan() || self.cca.tol < 0.0 {
            return Err(Error::Config("`cca.tol` must be non-negative".into()));
        }
        if !(self.filter.skew_threshold > 0.0 && self.filter.skew_threshold < 1.0) {
            return Err(Error::Config("`filter.skew_threshold` must lie in (0, 1)".into()));
        }
        if self.screening.enabled && self.screening.folds < 2 {
            return Err(Error::Config("`screening.folds` must be at least 2".into()));
        }
        let needs_target = self.screening.enabled || self.shap.enabled || self.cca.include_severity;
        if needs_target && self.target.is_none() {
            return Err(Error::Config(
                "screening, SHAP and `include_severity` need a `target`".into(),
            ));
        }
        if self.shap.enabled && self.shap.background == 0 {
            return Err(Error::Config("`shap.background` must be at least 1".into()));
        }
        if self.output.is_none() {
            return Err(Error::Config("no output directory (set `output` or pass --out)".into()));
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or_default()
    }

    pub fn output_dir(&self) -> &Path {
        self.output.as_deref().unwrap_or(Path::new("."))
    }

    /// The K values to cluster at.
    pub fn k_values(&self) -> Vec<usize> {
        match (self.cca.k, self.cca.k_range) {
            (Some(k), _) => vec![k],
            (None, Some([lo, hi])) => (lo..=hi).collect(),
            _ => Vec::new(),
        }
    }

    pub fn schema_mode(&self) -> Result<SchemaMode> {
        Ok(match &self.schema {
            None => SchemaMode::Infer {
                target: self.target.clone(),
            },
            Some(vars) => {
                let vars = vars
                    .iter()
                    .map(|v| Variable::new(v.name.clone(), v.categories.iter().cloned()))
                    .collect();
                SchemaMode::Declared(Schema::new(vars, self.target.clone()).map_err(|e| match e {
                    Error::Data(m) => Error::Config(format!("schema: {m}")),
                    other => other,
                })?)
            }
        })
    }

    pub fn cca_params(&self, seed: u64) -> CcaParams {
        CcaParams {
            restarts: self.cca.restarts,
            tol: self.cca.tol,
            max_iter: self.cca.max_iter,
            dims: self.cca.dims,
            seed,
        }
    }

    pub fn screening_params(&self, seed: u64) -> ScreeningParams {
        ScreeningParams {
            folds: self.screening.folds,
            rf: self.screening.rf.clone(),
            gb: self.screening.gb.clone(),
            rule: self.screening.rule,
            seed,
        }
    }
}
