//! File names, table formats and the run manifest.
//!
//! Every CSV here is written with a header row; floats use Rust's shortest
//! round-trip formatting so the bytes depend only on the values.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::PipelineConfig;
use crate::cca::{BiplotPoint, CcaSolution, ElbowCurve, PointKind};
use crate::error::{Error, Result};
use crate::shap::{ShapExplanation, ShapSidecar};

pub const FILTER_REPORT: &str = "filter_report.json";
pub const SCREENING_REPORT: &str = "screening_report.json";
pub const ELBOW_CSV: &str = "elbow.csv";
pub const CLUSTERS_CSV: &str = "clusters.csv";
pub const CENTROIDS_JSON: &str = "centroids.json";
pub const CENTROIDS_TXT: &str = "centroids.txt";
pub const BIPLOT_CSV: &str = "biplot.csv";
pub const MANIFEST: &str = "manifest.json";
pub const ALL_ROWS_MODEL: &str = "model_all.json";

pub fn shap_csv_name(cluster: usize) -> String {
    format!("shap_cluster_{cluster}.csv")
}

pub fn shap_sidecar_name(cluster: usize) -> String {
    format!("shap_cluster_{cluster}.json")
}

pub fn model_name(cluster: usize) -> String {
    format!("model_cluster_{cluster}.json")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Read an artifact, reporting a missing file by name.
pub fn read_artifact(dir: &Path, name: &str) -> Result<Vec<u8>> {
    let path = dir.join(name);
    match fs::read(&path) {
        Ok(bytes) => Ok(bytes),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingArtifact(path)),
        Err(e) => Err(Error::io(path, e)),
    }
}

pub fn read_json<T: DeserializeOwned>(dir: &Path, name: &str) -> Result<T> {
    Ok(serde_json::from_slice(&read_artifact(dir, name)?)?)
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))
}

/// `k,wcss,tss,normalized,knee`; `knee` is 1 on the chosen K only.
pub fn elbow_csv(curve: &ElbowCurve) -> Result<Vec<u8>> {
    csv_bytes(
        &["k", "wcss", "tss", "normalized", "knee"],
        curve.points.iter().map(|p| {
            vec![
                p.k.to_string(),
                p.wcss.to_string(),
                p.tss.to_string(),
                p.normalized.to_string(),
                u8::from(p.k == curve.knee).to_string(),
            ]
        }),
    )
}

/// `row_id,cluster`: the 0-based input row and its 1-based cluster.
pub fn clusters_csv(sol: &CcaSolution) -> Result<Vec<u8>> {
    csv_bytes(
        &["row_id", "cluster"],
        sol.assign
            .iter()
            .enumerate()
            .map(|(i, &k)| vec![i.to_string(), (k + 1).to_string()]),
    )
}

/// Parse `clusters.csv` into 0-based labels indexed by row id.
pub fn parse_clusters(bytes: &[u8]) -> Result<Vec<usize>> {
    let mut rdr = csv::Reader::from_reader(bytes);
    let mut labels = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<usize> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Data(format!("{CLUSTERS_CSV}: malformed line {}", line + 2)))
        };
        let (row, cluster) = (parse(0)?, parse(1)?);
        if row != labels.len() || cluster == 0 {
            return Err(Error::Data(format!("{CLUSTERS_CSV}: malformed line {}", line + 2)));
        }
        labels.push(cluster - 1);
    }
    Ok(labels)
}

/// A biplot point plus the 1-based cluster whose rescaled centroid is
/// nearest in the full embedding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiplotRow {
    pub label: String,
    pub kind: PointKind,
    pub dim1: f64,
    pub dim2: f64,
    pub cluster: usize,
}

pub fn biplot_rows(points: &[BiplotPoint], coords: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<BiplotRow> {
    let nearest = |x: &[f64]| {
        let mut best = (0, f64::INFINITY);
        for (k, g) in centroids.iter().enumerate() {
            let d: f64 = x.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best.1 {
                best = (k, d);
            }
        }
        best.0 + 1
    };
    points
        .iter()
        .zip(coords)
        .map(|(p, x)| BiplotRow {
            label: p.label.clone(),
            kind: p.kind,
            dim1: p.dim1,
            dim2: p.dim2,
            cluster: nearest(x),
        })
        .collect()
}

pub fn biplot_csv(rows: &[BiplotRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))
}

pub fn shap_csv(expl: &ShapExplanation) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    expl.write_csv(&mut buf)?;
    Ok(buf)
}

/// Which rows a cluster's explanation drew its model and background from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowScope {
    Cluster,
    All,
}

/// `shap_cluster_<k>.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterShapSidecar {
    pub cluster: usize,
    pub model_file: String,
    pub scope: RowScope,
    #[serde(flatten)]
    pub shap: ShapSidecar,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub seed: Option<u64>,
    /// Digests of what the stage read.
    pub inputs: BTreeMap<String, String>,
    /// Digests of what the stage wrote.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// The effective config, without the output directory.
    pub config: PipelineConfig,
    pub k: usize,
    pub stages: Vec<StageRecord>,
    /// Wall-clock seconds per stage; only with `timings = true`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
}

impl RunManifest {
    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }
}

/// Writes artifacts into one directory and records their digests.
pub(crate) struct ArtifactWriter {
    dir: PathBuf,
}

impl ArtifactWriter {
    pub(crate) fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(ArtifactWriter { dir: dir.to_path_buf() })
    }

    pub(crate) fn write(&self, stage: &mut StageRecord, name: &str, bytes: &[u8]) -> Result<String> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(path, e))?;
        let digest = sha256_hex(bytes);
        stage.outputs.insert(name.to_string(), digest.clone());
        Ok(digest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cca::ElbowPoint;

    #[test]
    fn elbow_marks_one_knee() {
        let curve = ElbowCurve {
            points: (1..=3)
                .map(|k| ElbowPoint {
                    k,
                    wcss: 1.0 / k as f64,
                    tss: 1.0,
                    normalized: 1.0 / k as f64,
                })
                .collect(),
            knee: 2,
        };
        let text = String::from_utf8(elbow_csv(&curve).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,wcss,tss,normalized,knee");
        assert_eq!(lines[2], "2,0.5,1,0.5,1");
        assert!(lines[1].ends_with(",0") && lines[3].ends_with(",0"));
    }

    #[test]
    fn clusters_round_trip() {
        let bytes = b"row_id,cluster\n0,2\n1,1\n2,2\n";
        assert_eq!(parse_clusters(bytes).unwrap(), vec![1, 0, 1]);
        assert!(parse_clusters(b"row_id,cluster\n1,2\n").is_err());
        assert!(parse_clusters(b"row_id,cluster\n0,0\n").is_err());
    }

    #[test]
    fn nearest_cluster_assignment() {
        let pts = vec![
            BiplotPoint {
                label: "a".into(),
                kind: PointKind::Category,
                dim1: 1.0,
                dim2: 0.0,
            },
            BiplotPoint {
                label: "b".into(),
                kind: PointKind::Category,
                dim1: -1.0,
                dim2: 0.0,
            },
        ];
        let coords = vec![vec![1.0, 0.0, 0.0], vec![-1.0, 0.0, 0.5]];
        let cents = vec![vec![0.9, 0.0, 0.0], vec![-0.9, 0.1, 0.4]];
        let rows = biplot_rows(&pts, &coords, &cents);
        assert_eq!(rows[0].cluster, 1);
        assert_eq!(rows[1].cluster, 2);
        let text = String::from_utf8(biplot_csv(&rows).unwrap()).unwrap();
        assert!(
            text.starts_with("label,kind,dim1,dim2,cluster\na,category,1.0,0.0,1\n"),
            "{text}"
        );
    }

    #[test]
    fn missing_artifact_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let err = read_artifact(dir.path(), "elbow.csv").unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("elbow.csv"));
    }
}
